// Acceptance suite: every criterion runs against its stated budget and prints
// one PASS/FAIL line; the process exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "curator/bench.hpp"
#include "curator/cli.hpp"
#include "curator/connector.hpp"
#include "curator/csv.hpp"
#include "curator/simulator.hpp"
#include "curator/validator.hpp"
#include "curator/value_json.hpp"

using namespace curator;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<void(std::vector<std::string>&)> body;
};

std::string fixture(const std::string& name) {
  return std::string(CURATOR_SOURCE_DIR) + "/fixtures/" + name;
}

fs::path scratch_dir() {
  fs::path dir = fs::temp_directory_path() / "curator_acceptance";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

#define EXPECT(cond, message)                                       \
  do {                                                              \
    if (!(cond)) failures.push_back(std::string("    ") + message); \
  } while (0)

bool close4(double a, double b) { return std::fabs(a - b) < 0.5e-4; }

// ---- criterion 1 -------------------------------------------------------------

void criterion_reports(std::vector<std::string>& failures) {
  // hand-counted oracle cases behind the shared formulas
  {
    std::vector<bool> gold = {true, true, true, false, false, false};
    std::vector<bool> pred = {true, true, false, true, false, false};
    EvalResult r = eval_er(pred, gold);
    EXPECT(close4(r.metric("precision"), 2.0 / 3.0), "er precision != 2/3");
    EXPECT(close4(r.metric("recall"), 2.0 / 3.0), "er recall != 2/3");
    EXPECT(close4(r.metric("f1"), 2.0 / 3.0), "er f1 != 2/3");
  }
  {
    EvalResult r = eval_er({true, false, true}, {true, false, true});
    EXPECT(close4(r.metric("f1"), 1.0), "perfect er f1 != 1");
  }
  {
    EvalResult r = eval_er({false, false, false}, {true, false, true});
    EXPECT(close4(r.metric("f1"), 0.0), "all-negative er f1 != 0");
  }
  {
    std::vector<Value> gold = {Value::text("Sony"), Value::text("Dell"),
                               Value::text("Akai"), Value::text("Teac")};
    std::vector<Value> pred = {Value::text("SONY"), Value::text("Dell"),
                               Value::text("wrong"), Value::text("Teac")};
    EXPECT(close4(eval_imputation(pred, gold).metric("accuracy"), 0.75),
           "imputation accuracy != 3/4");
  }

  // the bench harness computes the same numbers end to end and renders the
  // benchmark-table layout: dataset rows, metric columns, calls, ratio
  BenchOptions options;
  options.data = fixture("er_pairs.csv");
  options.gold = fixture("er_gold.csv");
  options.out_csv = (scratch_dir() / "c1_er_out.csv").string();
  auto backend = make_backend("mock:" + fixture("er_mock.json"));
  BenchOutcome outcome =
      bench_er(TemplateRegistry::with_builtins(), builtin_customs(), backend, options);
  EXPECT(close4(outcome.result.metric("f1"), 2.0 / 3.0), "bench er f1 != 2/3");
  EXPECT(outcome.result.ledger.total.llm_calls ==
             outcome.run_report.ledger_final.total.llm_calls,
         "result ledger != executor ledger");

  std::string md = emit_report({outcome.result}, ReportFormat::Markdown);
  EXPECT(md.rfind("| Dataset |", 0) == 0, "markdown header missing");
  EXPECT(md.find("| --- |") != std::string::npos, "markdown separator missing");
  EXPECT(md.find("| er_pairs |") != std::string::npos, "dataset row missing");
  EXPECT(md.find("0.6667") != std::string::npos, "4-decimal F1 missing");
  EXPECT(md.find("LLM Calls") != std::string::npos, "llm-calls column missing");
  EXPECT(md.find("Calls/Record") != std::string::npos, "calls-per-record column missing");
  EXPECT(md.find("1.0000") != std::string::npos, "call ratio missing");

  std::vector<EvalResult> round =
      report_from_json_text(emit_report({outcome.result}, ReportFormat::Json));
  EXPECT(round.size() == 1 && close4(round[0].metric("f1"), 2.0 / 3.0),
         "json report does not round-trip");
}

// ---- criterion 2 -------------------------------------------------------------

void criterion_call_ratio(std::vector<std::string>& failures) {
  BenchOptions options;
  options.data = fixture("products.csv");
  options.gold = fixture("products_gold.csv");
  options.out_csv = (scratch_dir() / "c2_imputed.csv").string();

  auto backend = make_backend("mock:" + fixture("impute_mock.json"));
  BenchOutcome optimized = bench_imputation(TemplateRegistry::with_builtins(),
                                            builtin_customs(), backend, options);
  // 60 records: 50 decided by the generated script's rules, 10 escalate to the
  // llm tool, plus exactly one generation call
  EXPECT(optimized.result.n_examples == 60, "fixture is not 60 records");
  EXPECT(optimized.result.ledger.total.llm_calls == 11,
         "optimized llm_calls != 10 + 1 generation (got " +
             std::to_string(optimized.result.ledger.total.llm_calls) + ")");
  EXPECT(close4(optimized.result.metric("accuracy"), 1.0), "optimized accuracy != 1");

  auto baseline_backend = make_backend("mock:" + fixture("impute_mock.json"));
  BenchOutcome baseline =
      bench_imputation(TemplateRegistry::with_builtins(), builtin_customs(),
                       baseline_backend, options, /*baseline=*/true);
  EXPECT(baseline.result.ledger.total.llm_calls == 60,
         "baseline llm_calls != 60 (got " +
             std::to_string(baseline.result.ledger.total.llm_calls) + ")");
  EXPECT(optimized.result.ledger.total.llm_calls * 5 <=
             baseline.result.ledger.total.llm_calls,
         "optimized calls exceed 1/5 of the baseline");
}

// ---- criterion 3 -------------------------------------------------------------

ModulePtr upper_script_module() {
  ModuleDescriptor d;
  d.id = "m";
  d.kind = ModuleKind::Llmgc;
  d.config = Value::record({{"task", Value::text("lowercase the input text")}});
  return std::make_shared<ScriptModule>(d, script::parse_script("return upper(input);"),
                                        std::make_shared<script::ToolRegistry>(),
                                        script::Limits{}, "m");
}

ValidatorConfig lowercase_cases() {
  ValidatorConfig cfg;
  cfg.cases = {{Value::text("AB"), Value::text("ab")},
               {Value::text("Cd"), Value::text("cd")},
               {Value::text("ef"), Value::text("ef")}};
  return cfg;
}

void criterion_validator(std::vector<std::string>& failures) {
  {
    auto backend = std::make_shared<MockBackend>(MockScript::from_json_text(
        R"({"rules":[
             {"contains":"suggest, briefly","respond":"use lower"},
             {"contains":"Return only the corrected","respond":"```\nreturn lower(input);\n```"}
           ]})"));
    CostLedger ledger;
    RunContext ctx{backend, &ledger, {}};
    auto [module, report] =
        validate_and_repair(upper_script_module(), lowercase_cases(), ctx);
    EXPECT(report.passed, "convergence case did not pass");
    EXPECT(report.rounds_used == 1,
           "rounds_used != 1 (got " + std::to_string(report.rounds_used) + ")");
    EXPECT(ledger.snapshot().total.llm_calls == 2,
           "convergence llm delta != 2 (got " +
               std::to_string(ledger.snapshot().total.llm_calls) + ")");
  }
  {
    auto backend = std::make_shared<MockBackend>(MockScript::from_json_text(
        R"({"rules":[
             {"contains":"suggest, briefly","respond":"try again"},
             {"contains":"Return only the corrected","respond":"```\nreturn upper(input);\n```"},
             {"contains":"Write a script","respond":"```\nreturn upper(input);\n```"}
           ]})"));
    CostLedger ledger;
    RunContext ctx{backend, &ledger, {}};
    ValidatorConfig cfg = lowercase_cases();
    cfg.max_repair_rounds = 3;
    cfg.max_regenerations = 1;
    auto [module, report] = validate_and_repair(upper_script_module(), cfg, ctx);
    EXPECT(!report.passed, "exhaustion case unexpectedly passed");
    EXPECT(report.rounds_used == 3, "exhaustion rounds_used != 3");
    EXPECT(report.regenerations_used == 1, "exhaustion regenerations_used != 1");
    // accounting invariant: 2 * (3 + 3) repair calls + 1 generation call
    EXPECT(ledger.snapshot().total.llm_calls == 13,
           "exhaustion llm delta != 13 (got " +
               std::to_string(ledger.snapshot().total.llm_calls) + ")");
  }
}

// ---- criterion 4 -------------------------------------------------------------

class StreamTeacher : public PhysicalModule {
 public:
  StreamTeacher() : PhysicalModule(ModuleDescriptor{}) {}
  Value invoke(const Value& input, RunContext&) override {
    ++calls;
    return Value::text("label-" + input.as_text());
  }
  std::string impl_kind() const override { return "custom"; }
  uint64_t calls = 0;
};

void criterion_takeover(std::vector<std::string>& failures) {
  const int window = 200;
  const int distinct = 100;
  const int total = 1200;

  SimulatorConfig cfg;
  cfg.learner = SimulatorConfig::Learner::Memo;
  cfg.shadow_window = window;
  cfg.agreement_threshold = 0.95;

  std::mt19937 rng(20240613);  // fixed seed for the stream
  std::vector<Value> stream;
  for (int i = 0; i < total; ++i) {
    stream.push_back(Value::text("v" + std::to_string(rng() % distinct)));
  }

  SimulatorState state;
  StreamTeacher teacher;
  CostLedger ledger;
  RunContext ctx{nullptr, &ledger, {}};

  // brute-force replay oracle over the exact stream
  std::set<std::string> seen;
  uint64_t oracle_teacher = 0, oracle_simulated = 0;
  int oracle_buffer = 0;
  bool oracle_active = false;

  bool outputs_match_teacher = true;
  for (const Value& input : stream) {
    if (oracle_active && seen.count(input.as_text())) {
      ++oracle_simulated;
    } else {
      ++oracle_teacher;
      seen.insert(input.as_text());
      oracle_buffer = std::min(oracle_buffer + 1, window);
      if (oracle_buffer == window) oracle_active = true;
    }
    Value got = simulator_step(state, cfg, input, teacher, ctx, "sim");
    if (!(got == Value::text("label-" + input.as_text()))) outputs_match_teacher = false;
  }

  bool takeover_recorded = false;
  for (const TransitionEvent& t : state.transitions) {
    if (t.kind == "takeover") {
      takeover_recorded = true;
      EXPECT(t.step == static_cast<uint64_t>(window), "takeover step != window");
      EXPECT(t.agreement >= cfg.agreement_threshold, "takeover below threshold");
    }
  }
  EXPECT(takeover_recorded, "no takeover event recorded");
  EXPECT(state.mode == SimulatorState::Mode::Active, "simulator not active at the end");
  EXPECT(outputs_match_teacher, "a simulated output diverged from the teacher");
  EXPECT(ledger.snapshot().total.simulated_calls >= 800,
         "fewer than 800 simulated calls (got " +
             std::to_string(ledger.snapshot().total.simulated_calls) + ")");
  EXPECT(ledger.snapshot().total.simulated_calls == oracle_simulated,
         "simulated calls differ from the replay oracle");
  EXPECT(teacher.calls == oracle_teacher, "teacher calls differ from the replay oracle");
  EXPECT(state.teacher_calls + state.student_calls == static_cast<uint64_t>(total),
         "calls do not sum to the stream length");
}

// ---- criterion 5 -------------------------------------------------------------

void criterion_gradient(std::vector<std::string>& failures) {
  std::mt19937 rng(987654);
  const double h = 1e-5;
  double max_rel_err = 0.0;

  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 64;
    LogisticUnit unit(dim);
    for (double& w : unit.weights)
      w = (static_cast<double>(rng() % 2000) - 1000.0) / 500.0;
    unit.bias = (static_cast<double>(rng() % 2000) - 1000.0) / 500.0;

    std::map<uint32_t, double> x;
    for (int k = 0; k < 10; ++k) x[rng() % dim] = (rng() % 2 == 0) ? 1.0 : -1.0;
    double y = (rng() % 2 == 0) ? 1.0 : 0.0;

    auto [grad_w, grad_b] = logistic_gradient(unit, x, y);
    for (const auto& [index, g] : grad_w) {
      LogisticUnit up = unit, down = unit;
      up.weights[index] += h;
      down.weights[index] -= h;
      double fd = (logistic_loss(up, x, y) - logistic_loss(down, x, y)) / (2 * h);
      max_rel_err =
          std::max(max_rel_err, std::fabs(fd - g) / std::max(1e-8, std::fabs(g)));
    }
    LogisticUnit up = unit, down = unit;
    up.bias += h;
    down.bias -= h;
    double fd_b = (logistic_loss(up, x, y) - logistic_loss(down, x, y)) / (2 * h);
    max_rel_err = std::max(max_rel_err,
                           std::fabs(fd_b - grad_b) / std::max(1e-8, std::fabs(grad_b)));
  }
  EXPECT(max_rel_err <= 1e-4,
         "max relative gradient error " + std::to_string(max_rel_err) + " > 1e-4");
}

// ---- criterion 6 -------------------------------------------------------------

void criterion_connector(std::vector<std::string>& failures) {
  ConnectorPolicy policy;
  policy.column_whitelist = {"name"};
  policy.max_rows_per_query = 7;
  policy.total_row_budget = 500;
  policy.clock = [] { return 0; };
  {
    QueryTemplate all;
    all.name = "all";
    all.select = {"name"};
    policy.queries["all"] = all;
    QueryTemplate by_name;
    by_name.name = "by_name";
    by_name.where = {{"name", "eq", "name", std::nullopt}};
    by_name.select = {"name"};
    policy.queries["by_name"] = by_name;
  }
  policy.check();

  Table table;
  table.schema = Schema({{"name", TypeTag::Text}});
  for (int i = 0; i < 30; ++i) {
    table.rows.push_back(Value::record({{"name", Value::text("n" + std::to_string(i % 5))}}));
  }

  std::mt19937 rng(271828);
  const int attempts = 500;
  int unregistered_executed = 0;
  int over_cap = 0;
  int budget_rejections = 0;
  uint64_t rows_at_first_budget_rejection = 0;
  bool budget_deterministic = true;

  for (int i = 0; i < attempts; ++i) {
    int kind = static_cast<int>(rng() % 3);
    try {
      if (kind == 0) {
        // over-cap demand: "all" matches 30 > 7 and must truncate
        Table r = connector_execute(policy, "all", {}, table);
        if (r.rows.size() > policy.max_rows_per_query) ++over_cap;
      } else if (kind == 1) {
        Table r = connector_execute(
            policy, "by_name",
            {{"name", Value::text("n" + std::to_string(rng() % 8))}}, table);
        if (r.rows.size() > policy.max_rows_per_query) ++over_cap;
      } else {
        connector_execute(policy, "rogue_" + std::to_string(rng() % 7), {}, table);
        ++unregistered_executed;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BudgetExceeded) {
        if (budget_rejections == 0) rows_at_first_budget_rejection = policy.rows_used();
        ++budget_rejections;
        // once rejected, usage must never move again: rejection is stable
        if (policy.rows_used() != rows_at_first_budget_rejection)
          budget_deterministic = false;
      } else if (e.code() != ErrorCode::UnknownQuery && e.code() != ErrorCode::BadParams) {
        failures.push_back("    unexpected error: " + std::string(e.what()));
      }
    }
  }

  EXPECT(unregistered_executed == 0, "an unregistered query executed");
  EXPECT(over_cap == 0, "a response exceeded max_rows_per_query");
  EXPECT(policy.audit_size() == static_cast<size_t>(attempts),
         "audit entries (" + std::to_string(policy.audit_size()) + ") != attempts (" +
             std::to_string(attempts) + ")");
  EXPECT(budget_rejections > 0, "budget was never exhausted by the suite");
  EXPECT(budget_deterministic, "BudgetExceeded was not deterministic");
  EXPECT(policy.rows_used() <= policy.total_row_budget, "budget overshot");

  uint64_t rejected = 0, accepted_rows = 0;
  for (const AuditEntry& entry : policy.audit_log()) {
    if (entry.status == "rejected") ++rejected;
    else accepted_rows += entry.rows;
  }
  EXPECT(rejected > 0, "no rejected audit entries");
  EXPECT(accepted_rows == policy.rows_used(), "audit row totals disagree with usage");
}

// ---- criterion 7 -------------------------------------------------------------

struct ArithNode {
  enum class Kind { Int, Float, Bin };
  Kind kind = Kind::Int;
  int64_t int_value = 0;
  double float_value = 0.0;
  char op = '+';
  std::unique_ptr<ArithNode> left, right;
};

Value oracle_eval(const ArithNode& node) {
  switch (node.kind) {
    case ArithNode::Kind::Int: return Value::integer(node.int_value);
    case ArithNode::Kind::Float: return Value::real(node.float_value);
    case ArithNode::Kind::Bin: break;
  }
  Value a = oracle_eval(*node.left);
  Value b = oracle_eval(*node.right);
  auto wrap = [](uint64_t v) { return static_cast<int64_t>(v); };
  if (a.kind() == ValueKind::Int && b.kind() == ValueKind::Int) {
    uint64_t x = static_cast<uint64_t>(a.as_int());
    uint64_t y = static_cast<uint64_t>(b.as_int());
    switch (node.op) {
      case '+': return Value::integer(wrap(x + y));
      case '-': return Value::integer(wrap(x - y));
      case '*': return Value::integer(wrap(x * y));
      case '/':
        if (b.as_int() == -1) return Value::integer(wrap(0 - x));
        return Value::integer(a.as_int() / b.as_int());
      case '%':
        if (b.as_int() == -1) return Value::integer(0);
        return Value::integer(a.as_int() % b.as_int());
    }
  }
  double x = a.as_float(), y = b.as_float();
  switch (node.op) {
    case '+': return Value::real(x + y);
    case '-': return Value::real(x - y);
    case '*': return Value::real(x * y);
    case '/': return Value::real(x / y);
  }
  return Value::null();
}

std::unique_ptr<ArithNode> random_tree(std::mt19937& rng, int depth) {
  auto node = std::make_unique<ArithNode>();
  bool leaf = depth <= 0 || rng() % 3 == 0;
  if (leaf) {
    if (rng() % 2 == 0) {
      node->kind = ArithNode::Kind::Int;
      node->int_value = static_cast<int64_t>(rng() % 201) - 100;
    } else {
      node->kind = ArithNode::Kind::Float;
      node->float_value = (static_cast<double>(rng() % 2001) - 1000.0) / 8.0;
    }
    return node;
  }
  node->kind = ArithNode::Kind::Bin;
  const char* ops = "+-*/%";
  node->op = ops[rng() % 5];
  node->left = random_tree(rng, depth - 1);
  node->right = random_tree(rng, depth - 1);
  if (node->op == '/' || node->op == '%') {
    auto divisor = std::make_unique<ArithNode>();
    divisor->kind = ArithNode::Kind::Int;
    int64_t v = static_cast<int64_t>(rng() % 200) - 100;
    divisor->int_value = v == 0 ? 7 : v;
    node->right = std::move(divisor);
    if (node->op == '%') {
      auto left_int = std::make_unique<ArithNode>();
      left_int->kind = ArithNode::Kind::Int;
      left_int->int_value = static_cast<int64_t>(rng() % 2001) - 1000;
      node->left = std::move(left_int);
    }
  }
  return node;
}

std::string render_tree(const ArithNode& node) {
  switch (node.kind) {
    case ArithNode::Kind::Int:
      return node.int_value < 0 ? "(0 - " + std::to_string(-node.int_value) + ")"
                                : std::to_string(node.int_value);
    case ArithNode::Kind::Float: {
      double v = node.float_value;
      std::string body = float_to_string(v < 0 ? -v : v);
      return v < 0 ? "(0.0 - " + body + ")" : body;
    }
    case ArithNode::Kind::Bin:
      return "(" + render_tree(*node.left) + " " + node.op + " " +
             render_tree(*node.right) + ")";
  }
  return "0";
}

void criterion_language_properties(std::vector<std::string>& failures) {
  // round-trip over the built-in templates plus assorted pipelines (>= 10)
  std::vector<std::string> sources;
  for (const TemplateInfo& t : TemplateRegistry::with_builtins().list()) {
    sources.push_back(t.body);
  }
  sources.push_back(slurp(fixture("er_demo.lm")));
  sources.push_back("pipeline a { node x: identity(); }");
  sources.push_back("pipeline b { param k = 3; node x: op(n=${k}); }");
  sources.push_back(
      "pipeline c { node x: op(xs=[1 2.5 \"s\" true]); node y: op2() llmgc(task=\"t\"); "
      "x -> y; }");
  sources.push_back(
      "pipeline d { node x: op() llm(prompt=\"multi\\nline\"); node y: op(); node z: op(); "
      "x -> y -> z; x -> z; }");
  sources.push_back(
      "pipeline e { node x: op() with simulator(learner=\"memo\", window=10, tau=0.9); }");
  sources.push_back(
      "pipeline f { node x: op() custom(name=\"identity\") with validator(cases=\"c.json\") "
      "with connector(policy=\"p.json\", query=\"q\", table=\"t.csv\"); }");
  int round_tripped = 0;
  for (const std::string& source : sources) {
    PipelineSpec spec = parse_pipeline(source);
    std::string printed = pretty_print(spec);
    PipelineSpec reparsed = parse_pipeline(printed);
    if (reparsed == spec && pretty_print(reparsed) == printed) {
      ++round_tripped;
    } else {
      failures.push_back("    round-trip failed for a pipeline of " +
                         std::to_string(spec.nodes.size()) + " nodes");
    }
  }
  EXPECT(round_tripped >= 10, "fewer than 10 pipelines round-tripped");

  // interpreter termination on adversarial scripts
  std::mt19937 rng(13579);
  script::Limits limits;
  limits.max_steps = 3000;
  limits.max_string_len = 2048;
  limits.max_collection_size = 64;
  script::ToolRegistry no_tools;
  CostLedger scratch_ledger;
  int halted = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string body;
    switch (rng() % 6) {
      case 0: body = "let i = 0; while (true) { i = i + 1; } return i;"; break;
      case 1: body = "let s = \"ab\"; while (true) { s = s + s; } return s;"; break;
      case 2:
        body = "let xs = [1]; while (true) { xs = append(xs, len(xs)); } return xs;";
        break;
      case 3:
        body = "let i = 0; while (i < " + std::to_string(rng() % 64) +
               ") { i = i + 1; } return i;";
        break;
      case 4:
        body =
            "let n = 0; for (a in [1,2,3]) { for (b in [1,2,3]) { while (true) { n = n + 1; "
            "} } } return n;";
        break;
      default:
        body = "let t = \"x\"; let i = 0; while (i < 9999) { t = t + \"y\"; i = i + 1; } "
               "return t;";
        break;
    }
    try {
      script::eval(*script::parse_script(body), Value::null(), no_tools, limits,
                   scratch_ledger);
      ++halted;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StepLimitExceeded ||
          e.code() == ErrorCode::ResourceLimitExceeded ||
          e.code() == ErrorCode::TypeError) {
        ++halted;
      }
    }
  }
  EXPECT(halted == 1000, "an adversarial script did not halt within limits");

  // arithmetic oracle agreement
  std::mt19937 arng(86420);
  int agreed = 0;
  for (int i = 0; i < 1000; ++i) {
    auto tree = random_tree(arng, 6);
    Value expected = oracle_eval(*tree);
    Value got = script::eval(*script::parse_script("return " + render_tree(*tree) + ";"),
                             Value::null(), no_tools, {}, scratch_ledger);
    if (got == expected) ++agreed;
  }
  EXPECT(agreed == 1000,
         "arithmetic disagreement on " + std::to_string(1000 - agreed) + " trees");
}

// ---- criterion 8 -------------------------------------------------------------

void criterion_determinism(std::vector<std::string>& failures) {
  fs::path dir = scratch_dir() / "c8";
  fs::create_directories(dir);
  std::string labels = (dir / "labels.csv").string();
  std::string report = (dir / "report.json").string();

  std::ostringstream src;
  src << "pipeline er_demo {\n"
      << "  node load: load_csv(path=\"" << fixture("er_pairs.csv") << "\");\n"
      << "  node match: resolve(in=\"record\", out=\"text\") llm(prompt=\"\"\"Do these two "
         "records refer to the same real-world entity?\n{input}\nAnswer yes or "
         "no.\"\"\", validate=\"one_of:yes,no\", tag=\"er\");\n"
      << "  node save: save_csv(path=\"" << labels << "\");\n"
      << "  load -> match -> save;\n"
      << "}\n";
  std::string pipeline = (dir / "er_demo.lm").string();
  {
    std::ofstream out(pipeline, std::ios::binary);
    out << src.str();
  }

  std::vector<std::string> args = {"run",       pipeline,
                                   "--backend", "mock:" + fixture("er_mock.json"),
                                   "--report",  report,
                                   "--seed",    "7"};
  std::ostringstream out1, err1;
  int code1 = cli_main(args, out1, err1);
  std::string labels1 = slurp(labels);
  std::string report1 = slurp(report);

  std::ostringstream out2, err2;
  int code2 = cli_main(args, out2, err2);

  EXPECT(code1 == 0 && code2 == 0, "run failed: " + err1.str() + err2.str());
  EXPECT(out1.str() == out2.str(), "stdout differs between runs");
  EXPECT(slurp(labels) == labels1, "output CSV differs between runs");
  EXPECT(slurp(report) == report1, "report differs between runs");
  EXPECT(!labels1.empty() && !report1.empty(), "outputs were not written");
  EXPECT(report1.find("\"llm_calls\": 10") != std::string::npos ||
             report1.find("\"llm_calls\":10") != std::string::npos,
         "ledger not in the report");
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"1 report layout and metric formulas vs hand counts", 1.0, criterion_reports},
      {"2 imputation call ratio: 11 vs 60 calls on the 60-record fixture", 1.0,
       criterion_call_ratio},
      {"3 validator convergence (2 calls) and exhaustion (13 calls)", 1.0,
       criterion_validator},
      {"4 memo simulator takeover on the 1200-input stream", 2.0, criterion_takeover},
      {"5 logistic gradient vs central finite differences", 2.0, criterion_gradient},
      {"6 connector enforcement over 500 generated attempts", 2.0, criterion_connector},
      {"7 DSL round-trip, interpreter termination, arithmetic oracle", 10.0,
       criterion_language_properties},
      {"8 end-to-end determinism of the seeded ER run", 2.0, criterion_determinism},
  };

  int failed = 0;
  for (const Criterion& criterion : criteria) {
    std::vector<std::string> failures;
    auto start = std::chrono::steady_clock::now();
    try {
      criterion.body(failures);
    } catch (const std::exception& ex) {
      failures.push_back(std::string("    threw: ") + ex.what());
    }
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (elapsed.count() > criterion.budget_seconds) {
      failures.push_back("    exceeded budget: " + std::to_string(elapsed.count()) +
                         "s > " + std::to_string(criterion.budget_seconds) + "s");
    }
    bool ok = failures.empty();
    failed += ok ? 0 : 1;
    std::printf("[%s] criterion %s (%.3fs < %.0fs)\n", ok ? "PASS" : "FAIL",
                criterion.name.c_str(), elapsed.count(), criterion.budget_seconds);
    for (const std::string& f : failures) std::printf("%s\n", f.c_str());
  }
  if (failed) {
    std::printf("%d criterion(s) failed\n", failed);
  } else {
    std::printf("all %zu criteria passed\n", criteria.size());
  }
  return failed == 0 ? 0 : 1;
}
