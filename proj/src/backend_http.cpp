// HTTP transport lives apart from backend.cpp so only this translation unit
// pays for httplib.

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "curator/backend.hpp"
#include "curator/error.hpp"

namespace curator {

using nlohmann::ordered_json;

namespace {

// splits "http://host:port/path" into client target and path prefix
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  size_t scheme = base_url.find("://");
  size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  size_t slash = base_url.find('/', host_start);
  if (slash == std::string::npos) return {base_url, ""};
  std::string path = base_url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {base_url.substr(0, slash), path};
}

}  // namespace

LlmResponse HttpBackend::complete(const LlmRequest& request, CostLedger& ledger) {
  request.check();

  ordered_json messages = ordered_json::array();
  if (!request.system.empty())
    messages.push_back({{"role", "system"}, {"content", request.system}});
  for (const ChatMessage& m : request.messages) {
    messages.push_back({{"role", m.role == ChatRole::User ? "user" : "assistant"},
                        {"content", m.text}});
  }
  ordered_json body = {{"model", config_.model},
                       {"messages", std::move(messages)},
                       {"temperature", request.temperature},
                       {"max_tokens", request.max_tokens}};
  std::string payload = body.dump();

  auto [host, prefix] = split_base_url(config_.base_url);
  httplib::Client client(host);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error = "no attempt made";
  int delay_s = 1;
  for (int attempt = 0; attempt < std::max(1, config_.max_retries); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::seconds(delay_s));
      delay_s *= 2;
    }
    auto result = client.Post(prefix + "/chat/completions", headers, payload,
                              "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_error = "server error: HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      raise(ErrorCode::BackendUnavailable,
            "HTTP " + std::to_string(result->status) + ": " + result->body);
    }
    ordered_json j = ordered_json::parse(result->body, nullptr, false);
    if (j.is_discarded()) {
      last_error = "malformed response body";
      continue;
    }
    LlmResponse response;
    response.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      response.prompt_tokens = j.at("usage").value("prompt_tokens", 0ull);
      response.completion_tokens = j.at("usage").value("completion_tokens", 0ull);
    } else {
      response.prompt_tokens = word_count(payload);
      response.completion_tokens = word_count(response.text);
    }
    ledger.add_llm_call(request.tag, response.prompt_tokens, response.completion_tokens);
    return response;
  }
  raise(ErrorCode::BackendUnavailable,
        "retries exhausted (" + std::to_string(config_.max_retries) + "): " + last_error);
}

std::shared_ptr<LlmBackend> make_backend(const std::string& selector) {
  if (selector.rfind("mock:", 0) == 0) {
    return std::make_shared<MockBackend>(MockScript::from_file(selector.substr(5)));
  }
  if (selector.rfind("http:", 0) == 0 && selector.rfind("http://", 0) != 0) {
    return std::make_shared<HttpBackend>(HttpConfig::from_file(selector.substr(5)));
  }
  if (selector.rfind("cached:", 0) == 0) {
    std::string rest = selector.substr(7);
    size_t plus = rest.find('+');
    if (plus == std::string::npos)
      raise(ErrorCode::InvalidArgument,
            "cached backend selector needs an inner backend: cached:<file>+<selector>");
    return std::make_shared<CachedBackend>(make_backend(rest.substr(plus + 1)),
                                           rest.substr(0, plus));
  }
  raise(ErrorCode::InvalidArgument,
        "unknown backend selector \"" + selector +
            "\" (expected mock:<file>, http:<file> or cached:<file>+<selector>)");
}

}  // namespace curator
