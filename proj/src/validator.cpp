#include "curator/validator.hpp"

#include <chrono>

#include "curator/compiler.hpp"
#include "curator/value_json.hpp"

namespace curator {

using nlohmann::ordered_json;

void ValidatorConfig::check() const {
  if (cases.empty()) raise(ErrorCode::InvalidArgument, "validator needs at least one case");
  if (max_repair_rounds < 1)
    raise(ErrorCode::InvalidArgument, "max_repair_rounds must be >= 1");
  if (max_regenerations < 0)
    raise(ErrorCode::InvalidArgument, "max_regenerations must be >= 0");
}

ordered_json ValidationReport::to_json() const {
  ordered_json rounds_json = ordered_json::array();
  for (const RoundReport& round : rounds) {
    ordered_json outcomes = ordered_json::array();
    for (const CaseOutcome& c : round.outcomes) {
      outcomes.push_back({{"passed", c.passed}, {"detail", c.detail}});
    }
    rounds_json.push_back(
        {{"passed_count", round.passed_count}, {"outcomes", std::move(outcomes)}});
  }
  ordered_json transcript_json = ordered_json::array();
  for (const TranscriptEntry& t : transcript) {
    transcript_json.push_back(
        {{"role", t.role}, {"prompt", t.prompt}, {"response", t.response}});
  }
  return {{"status", passed ? "passed" : "failed"},
          {"rounds_used", rounds_used},
          {"total_repair_rounds", total_repair_rounds},
          {"regenerations_used", regenerations_used},
          {"stopped_by", stopped_by},
          {"rounds", std::move(rounds_json)},
          {"transcript", std::move(transcript_json)}};
}

namespace {

std::string render_case_value(const Value& v) { return value_to_json_text(v); }

RoundReport evaluate_cases(PhysicalModule& module, const std::vector<TestCase>& cases,
                           RunContext& ctx) {
  RoundReport round;
  for (const TestCase& tc : cases) {
    CaseOutcome outcome;
    try {
      Value got = module.invoke(tc.input, ctx);
      outcome.passed = value_equal(got, tc.expected, tc.comparator);
      outcome.detail = render_case_value(got);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::BackendUnavailable) throw;
      outcome.detail = std::string("ERROR: ") + err.what();
    } catch (const std::exception& ex) {
      outcome.detail = std::string("ERROR: ") + ex.what();
    }
    if (outcome.passed) ++round.passed_count;
    round.outcomes.push_back(std::move(outcome));
  }
  return round;
}

std::string render_failures(const RoundReport& round, const std::vector<TestCase>& cases) {
  std::string out;
  for (size_t i = 0; i < round.outcomes.size(); ++i) {
    if (round.outcomes[i].passed) continue;
    out += "case " + std::to_string(i + 1) + ": input=" + render_case_value(cases[i].input) +
           " expected=" + render_case_value(cases[i].expected) +
           " got=" + round.outcomes[i].detail + "\n";
  }
  return out;
}

std::string module_code(PhysicalModule& module) {
  if (auto* s = dynamic_cast<ScriptModule*>(&module)) return s->program().source;
  if (auto* l = dynamic_cast<LlmModule*>(&module)) return l->prompt_template();
  return "";
}

std::string repair_tag(PhysicalModule& module) {
  if (auto* s = dynamic_cast<ScriptModule*>(&module)) return s->tag();
  if (auto* l = dynamic_cast<LlmModule*>(&module)) return l->tag();
  return "validator";
}

// reviewer + fixer, two calls; returns the fixer's raw response
std::string repair_round(PhysicalModule& module, const RoundReport& failures,
                         const std::vector<TestCase>& cases, RunContext& ctx,
                         ValidationReport& report) {
  const std::string code = module_code(module);
  const std::string failure_text = render_failures(failures, cases);
  const bool is_script = dynamic_cast<ScriptModule*>(&module) != nullptr;
  const char* kind = is_script ? "script" : "prompt template";
  std::string tag = repair_tag(module);

  std::string review_prompt = std::string("A ") + kind +
                              " failed some of its test cases.\n\n" + kind + ":\n```\n" +
                              code + "\n```\n\nFailed cases:\n" + failure_text +
                              "\nRead the " + kind +
                              " and the failures and suggest, briefly, how to fix it.";
  LlmResponse review = ctx.backend->complete(
      LlmRequest::prompt("You review failing data-curation modules.", review_prompt, tag),
      ctx.ledger_ref());
  report.transcript.push_back({"reviewer", review_prompt, review.text});

  std::string fix_prompt = std::string("Rewrite this ") + kind +
                           " so every test case passes.\n\n" + kind + ":\n```\n" + code +
                           "\n```\n\nFailed cases:\n" + failure_text + "\nSuggestion:\n" +
                           review.text + "\n\nReturn only the corrected " + kind +
                           " in one fenced code block.";
  LlmResponse fix = ctx.backend->complete(
      LlmRequest::prompt("You repair failing data-curation modules.", fix_prompt, tag),
      ctx.ledger_ref());
  report.transcript.push_back({"fixer", fix_prompt, fix.text});
  return fix.text;
}

// applies the fixer output; null when a script revision does not parse
ModulePtr apply_revision(const ModulePtr& module, const std::string& response,
                         ValidationReport& report) {
  std::string code = extract_code_block(response);
  if (auto* s = dynamic_cast<ScriptModule*>(module.get())) {
    try {
      auto program = script::parse_script(code);
      return std::make_shared<ScriptModule>(s->descriptor(), program, s->tools(),
                                            s->limits(), s->tag());
    } catch (const Error& err) {
      report.transcript.push_back({"fixer", "", std::string("revision rejected: ") + err.what()});
      return nullptr;
    }
  }
  auto* l = dynamic_cast<LlmModule*>(module.get());
  auto revised = std::make_shared<LlmModule>(*l);
  revised->set_prompt_template(code);
  return revised;
}

}  // namespace

std::pair<ModulePtr, ValidationReport> validate_and_repair(ModulePtr module,
                                                           const ValidatorConfig& cfg,
                                                           RunContext& ctx) {
  cfg.check();
  module = innermost(std::move(module));
  ValidationReport report;

  RoundReport initial = evaluate_cases(*module, cfg.cases, ctx);
  bool all_pass = initial.passed_count == static_cast<int>(cfg.cases.size());
  report.rounds.push_back(std::move(initial));
  if (all_pass) {
    report.passed = true;
    report.stopped_by = "passed";
    return {module, report};
  }

  const bool repairable = dynamic_cast<ScriptModule*>(module.get()) != nullptr ||
                          dynamic_cast<LlmModule*>(module.get()) != nullptr;
  if (!repairable) {
    report.stopped_by = "check_only";  // custom modules are not rewritten
    return {module, report};
  }
  if (!ctx.backend) raise(ErrorCode::BackendUnavailable, "validator needs a backend");

  auto* as_script = dynamic_cast<ScriptModule*>(module.get());
  const int max_phases = as_script ? cfg.max_regenerations + 1 : 1;

  for (int phase = 0; phase < max_phases; ++phase) {
    auto phase_start = std::chrono::steady_clock::now();
    auto wall_expired = [&] {
      if (!cfg.wall_clock_cap_seconds) return false;
      std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - phase_start;
      return elapsed.count() > *cfg.wall_clock_cap_seconds;
    };

    if (phase > 0) {
      // regenerate the script from scratch and restart the repair loop
      auto* current = dynamic_cast<ScriptModule*>(module.get());
      const Value& config = current->descriptor().config;
      const Value* task = config.find("task");
      std::string instructions, snippets;
      if (const Value* v = config.find("instructions"); v && !v->is_null())
        instructions = v->as_text();
      if (const Value* v = config.find("snippets"); v && !v->is_null())
        snippets = v->as_text();
      ++report.regenerations_used;
      try {
        auto program = llmgc_generate(task ? task->as_text() : "", cfg.cases,
                                      *current->tools(), *ctx.backend, ctx.ledger_ref(),
                                      /*max_attempts=*/1, current->tag(), instructions,
                                      snippets);
        module = std::make_shared<ScriptModule>(current->descriptor(), program,
                                                current->tools(), current->limits(),
                                                current->tag());
        report.transcript.push_back({"generator", "", "regenerated module"});
      } catch (const Error& err) {
        if (err.code() == ErrorCode::BackendUnavailable) throw;
        report.transcript.push_back(
            {"generator", "", std::string("regeneration failed: ") + err.what()});
        report.stopped_by = "generation_failed";
        return {module, report};
      }
      RoundReport after = evaluate_cases(*module, cfg.cases, ctx);
      bool pass = after.passed_count == static_cast<int>(cfg.cases.size());
      report.rounds.push_back(std::move(after));
      if (pass) {
        report.passed = true;
        report.stopped_by = "passed";
        report.rounds_used = 0;
        return {module, report};
      }
    }

    report.rounds_used = 0;
    for (int round = 1; round <= cfg.max_repair_rounds; ++round) {
      if (wall_expired()) {
        report.stopped_by = "wall_clock";
        return {module, report};
      }
      const RoundReport& failures = report.rounds.back();
      std::string response = repair_round(*module, failures, cfg.cases, ctx, report);
      ++report.total_repair_rounds;
      report.rounds_used = round;

      ModulePtr revised = apply_revision(module, response, report);
      RoundReport result;
      if (revised) {
        module = revised;
        result = evaluate_cases(*module, cfg.cases, ctx);
      } else {
        result.outcomes.assign(cfg.cases.size(), {false, "revision did not parse"});
      }
      bool pass = result.passed_count == static_cast<int>(cfg.cases.size());
      report.rounds.push_back(std::move(result));
      if (pass) {
        report.passed = true;
        report.stopped_by = "passed";
        return {module, report};
      }
    }
  }

  report.stopped_by = "rounds";
  return {module, report};
}

}  // namespace curator
