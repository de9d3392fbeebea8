#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "curator/ledger.hpp"

namespace curator {

enum class ChatRole { User, Assistant };

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string text;
};

struct LlmRequest {
  std::string system;
  std::vector<ChatMessage> messages;  // at least one
  double temperature = 0.0;           // [0, 2]
  int max_tokens = 512;               // > 0
  std::string tag;                    // ledger bucket, non-empty

  static LlmRequest prompt(std::string system, std::string user, std::string tag);
  void check() const;
};

struct LlmResponse {
  std::string text;
  uint64_t prompt_tokens = 0;
  uint64_t completion_tokens = 0;
};

struct MockRule {
  std::optional<std::string> tag;       // match on request tag
  std::optional<std::string> contains;  // match on substring of last message
  std::string respond;
  bool once = false;
};

struct MockScript {
  std::vector<MockRule> rules;  // first match wins
  std::optional<std::string> default_response;

  static MockScript from_json_text(const std::string& text);
  static MockScript from_file(const std::string& path);
};

struct HttpConfig {
  std::string base_url;
  std::string model;
  std::string api_key_env = "LLM_API_KEY";
  int timeout_seconds = 60;
  int max_retries = 3;

  static HttpConfig from_file(const std::string& path);
};

// Uniform completion interface. Implementations bill every non-cache-hit
// completion to the ledger under the request tag.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual LlmResponse complete(const LlmRequest& request, CostLedger& ledger) = 0;
  virtual std::string kind() const = 0;
};

// Deterministic scripted backend; token counts are whitespace word counts.
class MockBackend : public LlmBackend {
 public:
  explicit MockBackend(MockScript script);
  LlmResponse complete(const LlmRequest& request, CostLedger& ledger) override;
  std::string kind() const override { return "mock"; }

 private:
  std::mutex mutex_;
  MockScript script_;
  std::vector<bool> used_;
};

// Replay cache over any backend: hits return the stored response and bill
// cache_hits only; misses delegate and append to the JSON-lines cache file.
class CachedBackend : public LlmBackend {
 public:
  CachedBackend(std::shared_ptr<LlmBackend> inner, std::string cache_path);
  LlmResponse complete(const LlmRequest& request, CostLedger& ledger) override;
  std::string kind() const override { return "cached+" + inner_->kind(); }

 private:
  std::mutex mutex_;
  std::shared_ptr<LlmBackend> inner_;
  std::string cache_path_;
  std::unordered_map<std::string, LlmResponse> entries_;
};

// Chat-completions HTTP backend with exponential backoff (base 1s, factor 2).
class HttpBackend : public LlmBackend {
 public:
  explicit HttpBackend(HttpConfig config);
  LlmResponse complete(const LlmRequest& request, CostLedger& ledger) override;
  std::string kind() const override { return "http"; }

 private:
  HttpConfig config_;
};

// Deterministic digest of (system, messages, temperature to 3 decimals,
// max_tokens); the tag is excluded.
std::string cache_key(const LlmRequest& request);

uint64_t word_count(const std::string& text);

// Selector syntax: mock:<script.json> | http:<config.json> |
// cached:<cache.jsonl>+<selector>
std::shared_ptr<LlmBackend> make_backend(const std::string& selector);

}  // namespace curator
