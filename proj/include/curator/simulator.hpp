#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "curator/module.hpp"

namespace curator {

struct SimulatorConfig {
  enum class Learner { Memo, HashedLogreg };

  Learner learner = Learner::Memo;
  int shadow_window = 200;           // W >= 1
  double agreement_threshold = 0.95; // 0 < tau <= 1
  double confidence_gate = 0.3;      // 0 <= gamma < 0.5
  std::vector<Value> label_space;    // required for hashed_logreg
  int hash_bits = 18;                // feature buckets = 2^hash_bits

  void check() const;
};

// Signed hashed character trigrams of the canonical JSON encoding.
// Index -> +1/-1 count, folded into 2^bits buckets.
std::map<uint32_t, double> featurize(const Value& input, int bits);

struct LogisticUnit {
  std::vector<double> weights;
  double bias = 0.0;

  explicit LogisticUnit(size_t dim = 0) : weights(dim, 0.0) {}

  double probability(const std::map<uint32_t, double>& x) const;
  // one SGD step on logistic loss; returns p before the update
  double update(const std::map<uint32_t, double>& x, double y, double learning_rate);
};

// dL/dw_i = (p - y) * x_i and dL/db = (p - y), for the finite-difference check
double logistic_loss(const LogisticUnit& unit, const std::map<uint32_t, double>& x, double y);
std::pair<std::map<uint32_t, double>, double> logistic_gradient(
    const LogisticUnit& unit, const std::map<uint32_t, double>& x, double y);

struct Prediction {
  bool found = false;       // learner has an opinion at all
  Value value;
  double confidence = 0.0;  // memo: 1 on hit; logreg: |p - 0.5|
};

struct TransitionEvent {
  std::string kind;  // takeover | revert
  uint64_t step = 0;
  double agreement = 0.0;
};

struct SimulatorState {
  enum class Mode { Shadow, Active };

  Mode mode = Mode::Shadow;
  std::deque<bool> buffer;  // last W learner-vs-teacher comparisons
  uint64_t steps = 0;
  uint64_t teacher_calls = 0;
  uint64_t student_calls = 0;
  uint64_t fallbacks = 0;
  std::vector<TransitionEvent> transitions;

  // learner parameters
  std::map<std::string, Value> memo;   // canonical JSON -> teacher output
  std::vector<LogisticUnit> units;     // one per label (one-vs-rest)

  double buffer_mean() const;

  nlohmann::ordered_json to_json(const SimulatorConfig& cfg) const;
  static SimulatorState from_json(const nlohmann::ordered_json& j, const SimulatorConfig& cfg);
};

// One input through the simulator: shadow mode trains on the teacher and
// tracks rolling agreement until takeover; active mode answers from the
// learner when confident and falls back to the teacher otherwise, reverting
// to shadow if agreement decays.
Value simulator_step(SimulatorState& state, const SimulatorConfig& cfg, const Value& input,
                     PhysicalModule& teacher, RunContext& ctx, const std::string& tag);

class SimulatorModule : public PhysicalModule {
 public:
  SimulatorModule(ModuleDescriptor descriptor, ModulePtr inner, SimulatorConfig cfg,
                  std::string tag)
      : PhysicalModule(std::move(descriptor)),
        inner_(std::move(inner)),
        cfg_(std::move(cfg)),
        tag_(std::move(tag)) {}

  Value invoke(const Value& input, RunContext& ctx) override {
    return simulator_step(state_, cfg_, input, *inner_, ctx, tag_);
  }
  std::string impl_kind() const override { return "simulator"; }
  std::shared_ptr<PhysicalModule> inner() const override { return inner_; }

  SimulatorState& state() { return state_; }
  const SimulatorConfig& config() const { return cfg_; }

 private:
  ModulePtr inner_;
  SimulatorConfig cfg_;
  SimulatorState state_;
  std::string tag_;
};

}  // namespace curator
