#include "curator/ledger.hpp"

namespace curator {

using nlohmann::ordered_json;

void CostLedger::add_llm_call(const std::string& tag, uint64_t prompt_tokens,
                              uint64_t completion_tokens) {
  std::lock_guard<std::mutex> lock(mutex_);
  total_.llm_calls += 1;
  total_.prompt_tokens += prompt_tokens;
  total_.completion_tokens += completion_tokens;
  LedgerCounters& t = per_tag_[tag];
  t.llm_calls += 1;
  t.prompt_tokens += prompt_tokens;
  t.completion_tokens += completion_tokens;
}

void CostLedger::add_cache_hit(const std::string& tag) {
  std::lock_guard<std::mutex> lock(mutex_);
  total_.cache_hits += 1;
  per_tag_[tag].cache_hits += 1;
}

void CostLedger::add_simulated_call(const std::string& tag) {
  std::lock_guard<std::mutex> lock(mutex_);
  total_.simulated_calls += 1;
  per_tag_[tag].simulated_calls += 1;
}

LedgerSnapshot CostLedger::snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return {total_, per_tag_};
}

uint64_t CostLedger::llm_calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return total_.llm_calls;
}

namespace {

ordered_json counters_to_json(const LedgerCounters& c) {
  return {{"llm_calls", c.llm_calls},
          {"prompt_tokens", c.prompt_tokens},
          {"completion_tokens", c.completion_tokens},
          {"cache_hits", c.cache_hits},
          {"simulated_calls", c.simulated_calls}};
}

LedgerCounters counters_from_json(const ordered_json& j) {
  LedgerCounters c;
  c.llm_calls = j.value("llm_calls", 0ull);
  c.prompt_tokens = j.value("prompt_tokens", 0ull);
  c.completion_tokens = j.value("completion_tokens", 0ull);
  c.cache_hits = j.value("cache_hits", 0ull);
  c.simulated_calls = j.value("simulated_calls", 0ull);
  return c;
}

LedgerCounters counters_diff(const LedgerCounters& a, const LedgerCounters& b) {
  return {a.llm_calls - b.llm_calls, a.prompt_tokens - b.prompt_tokens,
          a.completion_tokens - b.completion_tokens, a.cache_hits - b.cache_hits,
          a.simulated_calls - b.simulated_calls};
}

}  // namespace

LedgerSnapshot LedgerSnapshot::diff_from(const LedgerSnapshot& earlier) const {
  LedgerSnapshot out;
  out.total = counters_diff(total, earlier.total);
  for (const auto& [tag, counters] : per_tag) {
    LedgerCounters base;
    auto it = earlier.per_tag.find(tag);
    if (it != earlier.per_tag.end()) base = it->second;
    LedgerCounters d = counters_diff(counters, base);
    if (!(d == LedgerCounters{})) out.per_tag[tag] = d;
  }
  return out;
}

ordered_json LedgerSnapshot::to_json() const {
  ordered_json tags = ordered_json::object();
  for (const auto& [tag, counters] : per_tag) tags[tag] = counters_to_json(counters);
  return {{"total", counters_to_json(total)}, {"per_tag", std::move(tags)}};
}

LedgerSnapshot LedgerSnapshot::from_json(const ordered_json& j) {
  LedgerSnapshot s;
  s.total = counters_from_json(j.at("total"));
  for (auto it = j.at("per_tag").begin(); it != j.at("per_tag").end(); ++it) {
    s.per_tag[it.key()] = counters_from_json(it.value());
  }
  return s;
}

}  // namespace curator
