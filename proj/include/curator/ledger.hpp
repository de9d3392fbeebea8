#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>

#include <json.hpp>

namespace curator {

struct LedgerCounters {
  uint64_t llm_calls = 0;
  uint64_t prompt_tokens = 0;
  uint64_t completion_tokens = 0;
  uint64_t cache_hits = 0;
  uint64_t simulated_calls = 0;

  bool operator==(const LedgerCounters&) const = default;
};

struct LedgerSnapshot {
  LedgerCounters total;
  std::map<std::string, LedgerCounters> per_tag;

  bool operator==(const LedgerSnapshot&) const = default;

  // component-wise total - earlier (per-node deltas in run reports)
  LedgerSnapshot diff_from(const LedgerSnapshot& earlier) const;

  nlohmann::ordered_json to_json() const;
  static LedgerSnapshot from_json(const nlohmann::ordered_json& j);
};

// Shared mutable call-accounting object. Totals always equal the sum of the
// per-tag entries; counters only ever increase.
class CostLedger {
 public:
  void add_llm_call(const std::string& tag, uint64_t prompt_tokens,
                    uint64_t completion_tokens);
  void add_cache_hit(const std::string& tag);
  void add_simulated_call(const std::string& tag);

  LedgerSnapshot snapshot() const;
  uint64_t llm_calls() const;

 private:
  mutable std::mutex mutex_;
  LedgerCounters total_;
  std::map<std::string, LedgerCounters> per_tag_;
};

}  // namespace curator
