#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "curator/module.hpp"

namespace curator {

struct ValidatorConfig {
  std::vector<TestCase> cases;  // at least one
  int max_repair_rounds = 3;    // R >= 1
  int max_regenerations = 2;    // G >= 0
  std::optional<double> wall_clock_cap_seconds;  // per phase

  void check() const;
};

struct CaseOutcome {
  bool passed = false;
  std::string detail;  // rendered actual value, or the error message
};

struct RoundReport {
  std::vector<CaseOutcome> outcomes;
  int passed_count = 0;
};

struct TranscriptEntry {
  std::string role;  // reviewer | fixer | generator
  std::string prompt;
  std::string response;
};

struct ValidationReport {
  bool passed = false;
  std::vector<RoundReport> rounds;  // every case evaluation, all phases
  int rounds_used = 0;              // repair rounds in the final phase
  int total_repair_rounds = 0;      // across all phases (call accounting)
  int regenerations_used = 0;
  std::vector<TranscriptEntry> transcript;
  std::string stopped_by;  // "passed" | "rounds" | "wall_clock"

  nlohmann::ordered_json to_json() const;
};

// Test-run -> LLM suggestion -> LLM rewrite loop; after R failing rounds the
// module is regenerated from scratch (script modules only) and the loop
// restarts, up to G times. Each repair round costs exactly two LLM calls.
// Custom modules are check-only. Failure is a report status, not an error.
std::pair<ModulePtr, ValidationReport> validate_and_repair(ModulePtr module,
                                                           const ValidatorConfig& cfg,
                                                           RunContext& ctx);

// Decoration wrapper; pass-through at run time, carries the config for the
// validate command.
class ValidatorModule : public PhysicalModule {
 public:
  ValidatorModule(ModuleDescriptor descriptor, ModulePtr inner, ValidatorConfig cfg)
      : PhysicalModule(std::move(descriptor)), inner_(std::move(inner)), cfg_(std::move(cfg)) {}

  Value invoke(const Value& input, RunContext& ctx) override {
    return inner_->invoke(input, ctx);
  }
  std::string impl_kind() const override { return "validator"; }
  std::shared_ptr<PhysicalModule> inner() const override { return inner_; }
  void set_inner(ModulePtr m) { inner_ = std::move(m); }
  const ValidatorConfig& config() const { return cfg_; }

 private:
  ModulePtr inner_;
  ValidatorConfig cfg_;
};

}  // namespace curator
