#include "curator/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "curator/error.hpp"

namespace curator {

using nlohmann::ordered_json;

LlmRequest LlmRequest::prompt(std::string system, std::string user, std::string tag) {
  LlmRequest r;
  r.system = std::move(system);
  r.messages.push_back({ChatRole::User, std::move(user)});
  r.tag = std::move(tag);
  return r;
}

void LlmRequest::check() const {
  if (messages.empty()) raise(ErrorCode::InvalidArgument, "request needs at least one message");
  if (tag.empty()) raise(ErrorCode::InvalidArgument, "request tag must be non-empty");
  if (temperature < 0.0 || temperature > 2.0)
    raise(ErrorCode::InvalidArgument, "temperature must be in [0, 2]");
  if (max_tokens <= 0) raise(ErrorCode::InvalidArgument, "max_tokens must be positive");
}

uint64_t word_count(const std::string& text) {
  uint64_t n = 0;
  bool in_word = false;
  for (char c : text) {
    bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

// ---- cache key -------------------------------------------------------------

namespace {

void fnv_mix(uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= 0x1f;  // field separator
  h *= 1099511628211ull;
}

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

uint64_t prompt_words(const LlmRequest& request) {
  uint64_t n = word_count(request.system);
  for (const ChatMessage& m : request.messages) n += word_count(m.text);
  return n;
}

}  // namespace

std::string cache_key(const LlmRequest& request) {
  uint64_t h1 = 14695981039346656037ull;
  uint64_t h2 = 0x9e3779b97f4a7c15ull;  // second lane halves collision odds
  auto mix_both = [&](const std::string& s) {
    fnv_mix(h1, s);
    for (unsigned char c : s) h2 = (h2 ^ (c * 0x100000001b3ull)) * 0xc2b2ae3d27d4eb4full;
    h2 = (h2 << 13) | (h2 >> 51);
  };
  mix_both(request.system);
  for (const ChatMessage& m : request.messages) {
    mix_both(m.role == ChatRole::User ? "user" : "assistant");
    mix_both(m.text);
  }
  int64_t milli_temp = static_cast<int64_t>(std::trunc(request.temperature * 1000.0));
  mix_both(std::to_string(milli_temp));
  mix_both(std::to_string(request.max_tokens));
  return hex64(h1) + hex64(h2);
}

// ---- mock ------------------------------------------------------------------

MockScript MockScript::from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::InvalidArgument, "malformed mock script JSON");
  MockScript script;
  for (const auto& r : j.value("rules", ordered_json::array())) {
    MockRule rule;
    if (r.contains("tag")) rule.tag = r.at("tag").get<std::string>();
    if (r.contains("contains")) rule.contains = r.at("contains").get<std::string>();
    rule.respond = r.at("respond").get<std::string>();
    rule.once = r.value("once", false);
    script.rules.push_back(std::move(rule));
  }
  if (j.contains("default")) script.default_response = j.at("default").get<std::string>();
  return script;
}

MockScript MockScript::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read mock script: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

MockBackend::MockBackend(MockScript script)
    : script_(std::move(script)), used_(script_.rules.size(), false) {}

LlmResponse MockBackend::complete(const LlmRequest& request, CostLedger& ledger) {
  request.check();
  std::lock_guard<std::mutex> lock(mutex_);
  const std::string& last = request.messages.back().text;

  const std::string* text = nullptr;
  for (size_t i = 0; i < script_.rules.size(); ++i) {
    const MockRule& rule = script_.rules[i];
    if (rule.once && used_[i]) continue;
    if (rule.tag && *rule.tag != request.tag) continue;
    if (rule.contains && last.find(*rule.contains) == std::string::npos) continue;
    used_[i] = true;
    text = &rule.respond;
    break;
  }
  if (!text && script_.default_response) text = &*script_.default_response;
  if (!text)
    raise(ErrorCode::MockExhausted,
          "no mock rule matches request tagged \"" + request.tag + "\"");

  LlmResponse response{*text, prompt_words(request), word_count(*text)};
  ledger.add_llm_call(request.tag, response.prompt_tokens, response.completion_tokens);
  return response;
}

// ---- cached ----------------------------------------------------------------

CachedBackend::CachedBackend(std::shared_ptr<LlmBackend> inner, std::string cache_path)
    : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {
  std::ifstream in(cache_path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // tolerate a torn trailing line
    LlmResponse r;
    r.text = j.at("response").at("text").get<std::string>();
    r.prompt_tokens = j.at("response").value("prompt_tokens", 0ull);
    r.completion_tokens = j.at("response").value("completion_tokens", 0ull);
    entries_[j.at("key").get<std::string>()] = std::move(r);
  }
}

LlmResponse CachedBackend::complete(const LlmRequest& request, CostLedger& ledger) {
  request.check();
  std::string key = cache_key(request);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      ledger.add_cache_hit(request.tag);
      return it->second;
    }
  }
  LlmResponse response = inner_->complete(request, ledger);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, response);
    if (inserted) {
      ordered_json line = {{"key", key},
                           {"response",
                            {{"text", response.text},
                             {"prompt_tokens", response.prompt_tokens},
                             {"completion_tokens", response.completion_tokens}}}};
      std::ofstream out(cache_path_, std::ios::app);
      if (out) out << line.dump() << "\n";
    }
  }
  return response;
}

// ---- http ------------------------------------------------------------------

HttpConfig HttpConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read backend config: " + path);
  ordered_json j = ordered_json::parse(in, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::InvalidArgument, "malformed backend config JSON");
  HttpConfig c;
  c.base_url = j.at("base_url").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.api_key_env = j.value("api_key_env", std::string("LLM_API_KEY"));
  c.timeout_seconds = j.value("timeout_seconds", 60);
  c.max_retries = j.value("max_retries", 3);
  return c;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {}

}  // namespace curator
