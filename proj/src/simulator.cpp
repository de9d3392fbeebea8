#include "curator/simulator.hpp"

#include <cmath>

#include "curator/value_json.hpp"

namespace curator {

using nlohmann::ordered_json;

void SimulatorConfig::check() const {
  if (shadow_window < 1) raise(ErrorCode::InvalidArgument, "shadow_window must be >= 1");
  if (!(agreement_threshold > 0.0 && agreement_threshold <= 1.0))
    raise(ErrorCode::InvalidArgument, "agreement_threshold must be in (0, 1]");
  if (!(confidence_gate >= 0.0 && confidence_gate < 0.5))
    raise(ErrorCode::InvalidArgument, "confidence_gate must be in [0, 0.5)");
  if (hash_bits < 1 || hash_bits > 24)
    raise(ErrorCode::InvalidArgument, "hash_bits must be in [1, 24]");
  if (learner == Learner::HashedLogreg && label_space.empty())
    raise(ErrorCode::LearnerShapeError, "hashed_logreg requires a label_space");
}

std::map<uint32_t, double> featurize(const Value& input, int bits) {
  std::string text = "^" + value_to_json_text(input) + "$";  // boundary markers
  const uint32_t mask = (1u << bits) - 1;
  std::map<uint32_t, double> features;
  for (size_t i = 0; i + 2 < text.size(); ++i) {
    uint64_t h = 14695981039346656037ull;
    for (size_t k = 0; k < 3; ++k) {
      h ^= static_cast<unsigned char>(text[i + k]);
      h *= 1099511628211ull;
    }
    uint32_t bucket = static_cast<uint32_t>(h) & mask;
    double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
    features[bucket] += sign;
  }
  if (features.empty())
    raise(ErrorCode::LearnerShapeError, "input produced no features");
  return features;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kLearningRate = 0.1;

}  // namespace

double LogisticUnit::probability(const std::map<uint32_t, double>& x) const {
  double z = bias;
  for (const auto& [index, value] : x) z += weights[index] * value;
  return sigmoid(z);
}

double LogisticUnit::update(const std::map<uint32_t, double>& x, double y,
                            double learning_rate) {
  double p = probability(x);
  double residual = p - y;  // dL/dz of the logistic loss
  for (const auto& [index, value] : x) weights[index] -= learning_rate * residual * value;
  bias -= learning_rate * residual;
  return p;
}

double logistic_loss(const LogisticUnit& unit, const std::map<uint32_t, double>& x,
                     double y) {
  double p = unit.probability(x);
  const double eps = 1e-12;  // clamp away from log(0)
  p = std::min(std::max(p, eps), 1.0 - eps);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

std::pair<std::map<uint32_t, double>, double> logistic_gradient(
    const LogisticUnit& unit, const std::map<uint32_t, double>& x, double y) {
  double residual = unit.probability(x) - y;
  std::map<uint32_t, double> grad;
  for (const auto& [index, value] : x) grad[index] = residual * value;
  return {std::move(grad), residual};
}

double SimulatorState::buffer_mean() const {
  if (buffer.empty()) return 0.0;
  uint64_t agree = 0;
  for (bool b : buffer) agree += b ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(buffer.size());
}

namespace {

int label_index(const SimulatorConfig& cfg, const Value& output) {
  for (size_t i = 0; i < cfg.label_space.size(); ++i) {
    if (value_equal(cfg.label_space[i], output, ComparatorSpec::normalized_text()))
      return static_cast<int>(i);
  }
  return -1;
}

void ensure_units(SimulatorState& state, const SimulatorConfig& cfg) {
  if (state.units.empty()) {
    state.units.assign(cfg.label_space.size(),
                       LogisticUnit(static_cast<size_t>(1) << cfg.hash_bits));
  }
}

Prediction predict(SimulatorState& state, const SimulatorConfig& cfg, const Value& input) {
  Prediction out;
  if (cfg.learner == SimulatorConfig::Learner::Memo) {
    auto it = state.memo.find(value_to_json_text(input));
    if (it != state.memo.end()) {
      out.found = true;
      out.value = it->second;
      out.confidence = 1.0;  // exact hit
    }
    return out;
  }
  ensure_units(state, cfg);
  std::map<uint32_t, double> x = featurize(input, cfg.hash_bits);
  double best_p = -1.0;
  size_t best = 0;
  for (size_t j = 0; j < state.units.size(); ++j) {
    double p = state.units[j].probability(x);
    if (p > best_p) {
      best_p = p;
      best = j;
    }
  }
  out.found = true;
  out.value = cfg.label_space[best];
  out.confidence = std::fabs(best_p - 0.5);
  return out;
}

void train(SimulatorState& state, const SimulatorConfig& cfg, const Value& input,
           const Value& teacher_output) {
  if (cfg.learner == SimulatorConfig::Learner::Memo) {
    state.memo[value_to_json_text(input)] = teacher_output;
    return;
  }
  ensure_units(state, cfg);
  int target = label_index(cfg, teacher_output);
  if (target < 0)
    raise(ErrorCode::LearnerShapeError,
          "teacher output is outside the label space: " + value_to_json_text(teacher_output));
  std::map<uint32_t, double> x = featurize(input, cfg.hash_bits);
  for (size_t j = 0; j < state.units.size(); ++j) {
    state.units[j].update(x, j == static_cast<size_t>(target) ? 1.0 : 0.0, kLearningRate);
  }
}

// agreement is learner-vs-teacher under exact equality after text normalization
void push_comparison(SimulatorState& state, const SimulatorConfig& cfg,
                     const Prediction& pred, const Value& teacher_output) {
  bool agree = pred.found &&
               value_equal(pred.value, teacher_output, ComparatorSpec::normalized_text());
  state.buffer.push_back(agree);
  while (state.buffer.size() > static_cast<size_t>(cfg.shadow_window))
    state.buffer.pop_front();
}

}  // namespace

Value simulator_step(SimulatorState& state, const SimulatorConfig& cfg, const Value& input,
                     PhysicalModule& teacher, RunContext& ctx, const std::string& tag) {
  cfg.check();
  ++state.steps;

  if (state.mode == SimulatorState::Mode::Active) {
    Prediction pred = predict(state, cfg, input);
    bool confident = pred.found && pred.confidence >= cfg.confidence_gate;
    if (cfg.learner == SimulatorConfig::Learner::Memo) confident = pred.found;
    if (confident) {
      ++state.student_calls;
      ctx.ledger_ref().add_simulated_call(tag);
      return pred.value;
    }
    // confidence below the gate: fall back to the teacher and keep learning
    ++state.fallbacks;
    Value out = teacher.invoke(input, ctx);
    ++state.teacher_calls;
    train(state, cfg, input, out);
    push_comparison(state, cfg, predict(state, cfg, input), out);
    if (state.buffer_mean() < cfg.agreement_threshold) {
      state.mode = SimulatorState::Mode::Shadow;
      state.transitions.push_back({"revert", state.steps, state.buffer_mean()});
    }
    return out;
  }

  // shadow: teacher answers, learner trains and is scored against it
  Value out = teacher.invoke(input, ctx);
  ++state.teacher_calls;
  train(state, cfg, input, out);
  push_comparison(state, cfg, predict(state, cfg, input), out);
  if (state.buffer.size() == static_cast<size_t>(cfg.shadow_window) &&
      state.buffer_mean() >= cfg.agreement_threshold) {
    state.mode = SimulatorState::Mode::Active;
    state.transitions.push_back({"takeover", state.steps, state.buffer_mean()});
  }
  return out;
}

// ---- checkpointing -----------------------------------------------------------

ordered_json SimulatorState::to_json(const SimulatorConfig& cfg) const {
  ordered_json buffer_json = ordered_json::array();
  for (bool b : buffer) buffer_json.push_back(b ? 1 : 0);

  ordered_json transitions_json = ordered_json::array();
  for (const TransitionEvent& t : transitions) {
    transitions_json.push_back({{"kind", t.kind}, {"step", t.step}, {"agreement", t.agreement}});
  }

  ordered_json learner;
  if (cfg.learner == SimulatorConfig::Learner::Memo) {
    ordered_json entries = ordered_json::object();
    for (const auto& [key, value] : memo) entries[key] = value_to_json(value);
    learner = {{"kind", "memo"}, {"entries", std::move(entries)}};
  } else {
    ordered_json units_json = ordered_json::array();
    for (const LogisticUnit& unit : units) {
      ordered_json sparse = ordered_json::object();
      for (size_t i = 0; i < unit.weights.size(); ++i) {
        if (unit.weights[i] != 0.0) sparse[std::to_string(i)] = unit.weights[i];
      }
      units_json.push_back({{"bias", unit.bias}, {"weights", std::move(sparse)}});
    }
    ordered_json labels = ordered_json::array();
    for (const Value& label : cfg.label_space) labels.push_back(value_to_json(label));
    learner = {{"kind", "hashed_logreg"},
               {"bits", cfg.hash_bits},
               {"labels", std::move(labels)},
               {"units", std::move(units_json)}};
  }

  return {{"mode", mode == Mode::Active ? "active" : "shadow"},
          {"buffer", std::move(buffer_json)},
          {"counters",
           {{"steps", steps},
            {"teacher_calls", teacher_calls},
            {"student_calls", student_calls},
            {"fallbacks", fallbacks}}},
          {"transitions", std::move(transitions_json)},
          {"learner", std::move(learner)}};
}

SimulatorState SimulatorState::from_json(const ordered_json& j, const SimulatorConfig& cfg) {
  SimulatorState state;
  state.mode = j.at("mode").get<std::string>() == "active" ? Mode::Active : Mode::Shadow;
  for (const auto& b : j.at("buffer")) state.buffer.push_back(b.get<int>() != 0);
  const auto& counters = j.at("counters");
  state.steps = counters.value("steps", 0ull);
  state.teacher_calls = counters.value("teacher_calls", 0ull);
  state.student_calls = counters.value("student_calls", 0ull);
  state.fallbacks = counters.value("fallbacks", 0ull);
  for (const auto& t : j.value("transitions", ordered_json::array())) {
    state.transitions.push_back({t.at("kind").get<std::string>(), t.at("step").get<uint64_t>(),
                                 t.at("agreement").get<double>()});
  }
  const auto& learner = j.at("learner");
  if (learner.at("kind").get<std::string>() == "memo") {
    for (auto it = learner.at("entries").begin(); it != learner.at("entries").end(); ++it) {
      state.memo[it.key()] = value_from_json(it.value());
    }
  } else {
    size_t dim = static_cast<size_t>(1) << learner.value("bits", cfg.hash_bits);
    for (const auto& u : learner.at("units")) {
      LogisticUnit unit(dim);
      unit.bias = u.at("bias").get<double>();
      for (auto it = u.at("weights").begin(); it != u.at("weights").end(); ++it) {
        unit.weights[std::stoul(it.key())] = it.value().get<double>();
      }
      state.units.push_back(std::move(unit));
    }
  }
  return state;
}

}  // namespace curator
