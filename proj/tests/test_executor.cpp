#include <doctest.h>

#include "curator/executor.hpp"
#include "curator/value_json.hpp"

using namespace curator;

namespace {

std::shared_ptr<MockBackend> mock(const char* json) {
  return std::make_shared<MockBackend>(MockScript::from_json_text(json));
}

std::shared_ptr<Table> pair_table(int rows) {
  auto t = std::make_shared<Table>();
  t->schema = Schema({{"left", TypeTag::Text}, {"right", TypeTag::Text}});
  for (int i = 0; i < rows; ++i) {
    t->rows.push_back(Value::record({{"left", Value::text("L" + std::to_string(i))},
                                     {"right", Value::text("R" + std::to_string(i))}}));
  }
  return t;
}

PhysicalPlan er_plan(std::shared_ptr<LlmBackend> backend, CostLedger& ledger) {
  const char* source =
      "pipeline er {\n"
      "  node load: load_csv();\n"
      "  node match: resolve(in=\"record\", out=\"text\") "
      "llm(prompt=\"pair {left} vs {right}\", tag=\"er\");\n"
      "  node save: identity(in=\"table\");\n"
      "  load -> match -> save;\n"
      "}";
  return compile(parse_pipeline(source), builtin_customs(), backend, ledger);
}

}  // namespace

TEST_CASE("whole mode: identity plan returns its input") {
  CostLedger ledger;
  PhysicalPlan plan = compile(parse_pipeline("pipeline p { node id: identity(); }"),
                              builtin_customs(), nullptr, ledger);
  RunContext ctx{nullptr, &ledger, {}};
  RunOptions options;
  options.mode = RunMode::Whole;

  Value input = Value::text("hello");
  RunResult result = run(plan, {{"id", input}}, options, ctx);
  CHECK(result.outputs.at("id") == input);
  CHECK(result.report.nodes.size() == 1);
  CHECK(result.report.nodes[0].records == 1);
}

TEST_CASE("per-record streaming: ten rows through the match node") {
  auto backend = mock(R"({"default":"yes"})");
  CostLedger ledger;
  PhysicalPlan plan = er_plan(backend, ledger);
  RunContext ctx{backend, &ledger, {}};
  RunOptions options;
  options.clock_ms = [] { return 0.0; };

  RunResult result = run(plan, {{"load", Value::table(pair_table(10))}}, options, ctx);

  const Table& out = *result.outputs.at("save").as_table();
  CHECK(out.rows.size() == 10);
  CHECK(out.schema.columns.size() == 1);
  CHECK(out.schema.columns[0].name == "value");
  for (const Value& row : out.rows) {
    CHECK(row.as_record()[0].value == Value::text("yes"));
  }

  REQUIRE(result.report.nodes.size() == 3);
  CHECK(result.report.nodes[1].node == "match");
  CHECK(result.report.nodes[1].records == 10);
  CHECK(result.report.ledger_final.total.llm_calls == 10);
}

TEST_CASE("order preservation: output row k corresponds to input row k") {
  // mock answers differ per row, keyed on the rendered left value
  auto backend = mock(
      R"({"rules":[{"contains":"L3","respond":"three"},{"contains":"L7","respond":"seven"}],
          "default":"other"})");
  CostLedger ledger;
  PhysicalPlan plan = er_plan(backend, ledger);
  RunContext ctx{backend, &ledger, {}};
  RunOptions options;

  RunResult result = run(plan, {{"load", Value::table(pair_table(10))}}, options, ctx);
  const Table& out = *result.outputs.at("save").as_table();
  REQUIRE(out.rows.size() == 10);
  for (int i = 0; i < 10; ++i) {
    std::string expected = i == 3 ? "three" : i == 7 ? "seven" : "other";
    CHECK(out.rows[i].as_record()[0].value == Value::text(expected));
  }
}

TEST_CASE("shape mismatch reported with the edge") {
  const char* source =
      "pipeline p {\n"
      "  node words: identity(out=\"text\");\n"
      "  node sink: save_csv(path=\"x.csv\");\n"  // wants a table
      "  words -> sink;\n"
      "}";
  CostLedger ledger;
  PhysicalPlan plan = compile(parse_pipeline(source), builtin_customs(), nullptr, ledger);
  RunContext ctx{nullptr, &ledger, {}};
  RunOptions options;
  options.mode = RunMode::Whole;
  try {
    run(plan, {{"words", Value::text("not a table")}}, options, ctx);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
    CHECK(std::string(e.what()).find("words -> sink") != std::string::npos);
  }
}

TEST_CASE("module errors abort with node id and record index") {
  auto backend = mock(R"({"rules":[{"contains":"L2","respond":"boom"}]})");
  // rule only matches row 2; other rows exhaust the mock -> module error
  CostLedger ledger;
  PhysicalPlan plan = er_plan(backend, ledger);
  RunContext ctx{backend, &ledger, {}};
  RunOptions options;

  try {
    run(plan, {{"load", Value::table(pair_table(4))}}, options, ctx);
    FAIL("expected ModuleError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ModuleError);
    CHECK(std::string(e.what()).find("match") != std::string::npos);
    CHECK(std::string(e.what()).find("record 0") != std::string::npos);
  }
}

TEST_CASE("skip-errors records failures and keeps going") {
  auto backend = mock(R"({"rules":[{"contains":"L1","respond":"ok1"},
                                   {"contains":"L3","respond":"ok3"}]})");
  CostLedger ledger;
  PhysicalPlan plan = er_plan(backend, ledger);
  RunContext ctx{backend, &ledger, {}};
  RunOptions options;
  options.skip_errors = true;

  RunResult result = run(plan, {{"load", Value::table(pair_table(4))}}, options, ctx);
  const Table& out = *result.outputs.at("save").as_table();
  CHECK(out.rows.size() == 2);  // rows 1 and 3 survived
  REQUIRE(result.report.errors.size() == 2);
  CHECK(result.report.errors[0].node == "match");
  CHECK(result.report.errors[0].record == 0);
  CHECK(result.report.errors[1].record == 2);

  // conservation: records in = records out + errored
  const NodeStats& match = result.report.nodes[1];
  CHECK(match.records == 4);
  CHECK(match.errors == 2);
  CHECK(out.rows.size() == match.records - match.errors);
}

TEST_CASE("per-node ledger deltas sum to final minus initial") {
  auto backend = mock(R"({"default":"yes"})");
  CostLedger ledger;
  ledger.add_llm_call("pre_existing", 5, 5);  // runs do not start from zero
  PhysicalPlan plan = er_plan(backend, ledger);
  RunContext ctx{backend, &ledger, {}};
  RunOptions options;

  RunResult result = run(plan, {{"load", Value::table(pair_table(6))}}, options, ctx);
  LedgerCounters sum;
  for (const NodeStats& n : result.report.nodes) {
    sum.llm_calls += n.ledger_delta.total.llm_calls;
    sum.prompt_tokens += n.ledger_delta.total.prompt_tokens;
    sum.completion_tokens += n.ledger_delta.total.completion_tokens;
    sum.cache_hits += n.ledger_delta.total.cache_hits;
    sum.simulated_calls += n.ledger_delta.total.simulated_calls;
  }
  LedgerCounters expected =
      result.report.ledger_final.diff_from(result.report.ledger_initial).total;
  CHECK(sum == expected);
  CHECK(result.report.ledger_initial.total.llm_calls == 1);
  CHECK(result.report.ledger_final.total.llm_calls == 7);
}

TEST_CASE("determinism: identical runs produce identical outputs and ledgers") {
  auto run_once = [](uint64_t seed) {
    auto backend = mock(
        R"({"rules":[{"contains":"L0","respond":"alpha"},{"contains":"L1","respond":"beta"}],
            "default":"gamma"})");
    CostLedger ledger;
    PhysicalPlan plan = er_plan(backend, ledger);
    RunContext ctx{backend, &ledger, {}};
    RunOptions options;
    options.seed = seed;
    options.clock_ms = [] { return 0.0; };
    RunResult result = run(plan, {{"load", Value::table(pair_table(5))}}, options, ctx);
    return result.report.to_json().dump() + "||" +
           value_to_json_text(result.outputs.at("save"));
  };
  CHECK(run_once(7) == run_once(7));
}

TEST_CASE("whole mode joins multiple inputs as a record keyed by source node") {
  const char* source =
      "pipeline p {\n"
      "  node a: identity();\n"
      "  node b: identity();\n"
      "  node join: identity();\n"
      "  a -> join;\n"
      "  b -> join;\n"
      "}";
  CostLedger ledger;
  PhysicalPlan plan = compile(parse_pipeline(source), builtin_customs(), nullptr, ledger);
  RunContext ctx{nullptr, &ledger, {}};
  RunOptions options;
  options.mode = RunMode::Whole;
  RunResult result = run(plan, {{"a", Value::integer(1)}, {"b", Value::integer(2)}},
                         options, ctx);
  Value joined = result.outputs.at("join");
  REQUIRE(joined.kind() == ValueKind::Record);
  CHECK(*joined.find("a") == Value::integer(1));
  CHECK(*joined.find("b") == Value::integer(2));
}

TEST_CASE("reassemble_rows infers columns and renders mixed kinds to text") {
  std::vector<Value> rows;
  rows.push_back(Value::record({{"n", Value::integer(1)}, {"t", Value::text("a")}}));
  rows.push_back(Value::record({{"n", Value::real(2.5)}, {"t", Value::null()}}));
  rows.push_back(Value::record({{"n", Value::integer(3)}, {"extra", Value::boolean(true)}}));

  Table t = reassemble_rows(rows);
  REQUIRE(t.schema.columns.size() == 3);
  CHECK(t.schema.columns[0].name == "n");
  CHECK(t.schema.columns[0].type == TypeTag::Float);  // int+float widen to float
  CHECK(t.schema.columns[1].type == TypeTag::Text);
  CHECK(t.rows[0].find("n")->as_float() == doctest::Approx(1.0));
  CHECK(t.rows[1].find("t")->is_null());
  CHECK(t.rows[0].find("extra")->is_null());
  CHECK(conform(t).empty());

  SUBCASE("non-record rows wrap into a value column") {
    Table w = reassemble_rows({Value::text("x"), Value::text("y")});
    REQUIRE(w.schema.columns.size() == 1);
    CHECK(w.schema.columns[0].name == "value");
    CHECK(w.rows.size() == 2);
  }

  SUBCASE("lists render as canonical JSON text") {
    Table w = reassemble_rows({Value::list({Value::integer(1), Value::integer(2)})});
    CHECK(w.rows[0].find("value")->as_text() == "[1,2]");
  }
}
