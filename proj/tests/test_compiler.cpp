#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "curator/compiler.hpp"
#include "curator/validator.hpp"
#include "curator/value_json.hpp"

using namespace curator;

namespace {

std::shared_ptr<MockBackend> mock(const char* json) {
  return std::make_shared<MockBackend>(MockScript::from_json_text(json));
}

const char* kErSource = R"(pipeline er {
  node load: load_csv(path="fixtures/er_pairs.csv");
  node match: resolve(in="record", out="text") llm(prompt="same? {input}", validate="one_of:yes,no", tag="er");
  node save: save_csv(path="out.csv");
  load -> match -> save;
})";

}  // namespace

TEST_CASE("compile resolves a three-node ER spec in topological order") {
  CostLedger ledger;
  PhysicalPlan plan = compile(parse_pipeline(kErSource), builtin_customs(), nullptr, ledger);
  REQUIRE(plan.order.size() == 3);
  CHECK(plan.order[0].first == "load");
  CHECK(plan.order[1].first == "match");
  CHECK(plan.order[2].first == "save");
  CHECK(plan.order[0].second->impl_kind() == "custom");
  CHECK(plan.order[1].second->impl_kind() == "llm");
  CHECK(plan.sources() == std::vector<std::string>{"load"});
  CHECK(plan.sinks() == std::vector<std::string>{"save"});
  CHECK(ledger.snapshot().total.llm_calls == 0);  // nothing generated
}

TEST_CASE("compile reports an unknown custom module") {
  CostLedger ledger;
  try {
    compile(parse_pipeline("pipeline p { node a: nope(); }"), builtin_customs(), nullptr,
            ledger);
    FAIL("expected UnknownCustomModule");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownCustomModule);
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
}

TEST_CASE("compile fails on unresolved parameters") {
  CostLedger ledger;
  try {
    compile(parse_pipeline("pipeline p { node a: load_csv(path=${missing}); }"),
            builtin_customs(), nullptr, ledger);
    FAIL("expected UnresolvedParam");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnresolvedParam);
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
}

TEST_CASE("params resolve from pipeline defaults") {
  CostLedger ledger;
  PhysicalPlan plan = compile(parse_pipeline("pipeline p {\n"
                                             "  param path = \"x.csv\";\n"
                                             "  node a: load_csv(path=${path});\n"
                                             "}"),
                              builtin_customs(), nullptr, ledger);
  const Value* path = plan.order[0].second->descriptor().config.find("path");
  REQUIRE(path != nullptr);
  CHECK(path->as_text() == "x.csv");
}

TEST_CASE("llmgc binding compiles through the backend into a script module") {
  auto backend = mock(
      R"({"rules":[{"contains":"Write a script","respond":"```\nreturn trim(input);\n```"}]})");
  CostLedger ledger;
  PhysicalPlan plan = compile(
      parse_pipeline("pipeline p {\n"
                     "  node load: load_csv(path=\"fixtures/products.csv\");\n"
                     "  node fix: impute() llmgc(task=\"trim the value\", tag=\"gen\");\n"
                     "  load -> fix;\n"
                     "}"),
      builtin_customs(), backend, ledger);
  CHECK(plan.order[1].second->impl_kind() == "script");
  CHECK(ledger.snapshot().total.llm_calls == 1);
  CHECK(ledger.snapshot().per_tag.at("gen").llm_calls == 1);

  // the generated module is callable as f: Value -> Value
  RunContext ctx{backend, &ledger, {}};
  CHECK(plan.order[1].second->invoke(Value::text("  hi  "), ctx) == Value::text("hi"));
}

TEST_CASE("llmgc_generate retries on parse errors with feedback") {
  script::ToolRegistry tools;
  CostLedger ledger;

  SUBCASE("first attempt parses: one call") {
    auto backend = mock(R"({"default":"```\nreturn trim(input);\n```"})");
    auto program = llmgc_generate("trim", {}, tools, *backend, ledger, 3, "gen");
    CHECK(program->statements.size() == 1);
    CHECK(ledger.snapshot().total.llm_calls == 1);
  }

  SUBCASE("garbage then valid: two calls, error fed back") {
    auto backend = mock(
        R"({"rules":[{"respond":"```\nreturn (1 +;\n```","once":true},
                     {"contains":"failed to parse","respond":"```\nreturn 1;\n```"}]})");
    auto program = llmgc_generate("x", {}, tools, *backend, ledger, 3, "gen");
    CHECK(program->statements.size() == 1);
    CHECK(ledger.snapshot().total.llm_calls == 2);
  }

  SUBCASE("always garbage: GenerationFailed after max_attempts") {
    auto backend = mock(R"({"default":"not even close to code ("})");
    try {
      llmgc_generate("x", {}, tools, *backend, ledger, 2, "gen");
      FAIL("expected GenerationFailed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GenerationFailed);
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
    CHECK(ledger.snapshot().total.llm_calls == 2);
  }

  SUBCASE("examples and tool signatures reach the prompt") {
    auto backend = mock(
        R"({"rules":[{"contains":"tool llm(input: text) -> text","respond":"```\nreturn 1;\n```"}]})");
    script::ToolRegistry with_llm;
    with_llm.add("llm", {[](const std::vector<Value>&, script::ToolCallContext&) {
                           return Value::null();
                         },
                         Shape::Text, Shape::Text});
    std::vector<TestCase> examples = {{Value::text("a"), Value::text("A")}};
    CHECK_NOTHROW(llmgc_generate("upper", examples, with_llm, *backend, ledger, 1, "gen"));
  }
}

TEST_CASE("extract_code_block") {
  CHECK(extract_code_block("```\nreturn 1;\n```") == "return 1;\n");
  CHECK(extract_code_block("prose\n```js\nreturn 1;\n```\ntrailer") == "return 1;\n");
  CHECK(extract_code_block("  return 1;  ") == "return 1;");
  CHECK(extract_code_block("```\nunterminated fence\n") == "unterminated fence\n");
}

TEST_CASE("decorations wrap innermost-first in declaration order") {
  std::string cases_path =
      (std::filesystem::temp_directory_path() / "curator_cases.json").string();
  {
    std::ofstream out(cases_path);
    out << R"([{"input":"a","expected":"a","comparator":"exact"}])";
  }
  std::string source =
      "pipeline p {\n"
      "  node load: load_csv(path=\"x.csv\");\n"
      "  node work: classify() llm(prompt=\"{input}\") "
      "with validator(cases=\"" + cases_path + "\") "
      "with simulator(learner=\"memo\", window=5);\n"
      "  load -> work;\n"
      "}";
  CostLedger ledger;
  PhysicalPlan plan = compile(parse_pipeline(source), builtin_customs(), nullptr, ledger);
  ModulePtr module = plan.find("work");
  REQUIRE(module);
  // outermost wrapper is the last decoration: simulator(validator(llm))
  CHECK(module->impl_kind() == "simulator");
  REQUIRE(module->inner());
  CHECK(module->inner()->impl_kind() == "validator");
  REQUIRE(module->inner()->inner());
  CHECK(module->inner()->inner()->impl_kind() == "llm");
  CHECK(innermost(module)->impl_kind() == "llm");

  // descriptor nesting mirrors the wrapping
  const ModuleDescriptor& d = module->descriptor();
  CHECK(d.kind == ModuleKind::Decorated);
  REQUIRE(d.inner);
  CHECK(d.inner->kind == ModuleKind::Decorated);
  std::remove(cases_path.c_str());
}

TEST_CASE("template registry ships the three demo templates") {
  TemplateRegistry registry = TemplateRegistry::with_builtins();
  auto listed = registry.list();
  REQUIRE(listed.size() == 3);
  std::vector<std::string> names;
  for (const TemplateInfo& t : listed) names.push_back(t.name);
  CHECK(std::find(names.begin(), names.end(), "entity_resolution") != names.end());
  CHECK(std::find(names.begin(), names.end(), "name_extraction") != names.end());
  CHECK(std::find(names.begin(), names.end(), "data_imputation") != names.end());
  for (const TemplateInfo& t : listed) CHECK_FALSE(t.description.empty());
}

TEST_CASE("template_instantiate binds params and validates") {
  TemplateRegistry registry = TemplateRegistry::with_builtins();

  SUBCASE("entity_resolution with data") {
    PipelineSpec spec =
        registry.instantiate("entity_resolution", {{"data", Value::text("beer.csv")}});
    CHECK(spec.nodes.size() == 3);
    CHECK(spec.edges.size() == 2);
    CHECK(validate_graph(spec).empty());
    REQUIRE(spec.find_param("data"));
    CHECK(spec.find_param("data")->as_text() == "beer.csv");

    // a bound template compiles; llm bindings do not need the backend yet
    CostLedger ledger;
    CHECK_NOTHROW(compile(spec, builtin_customs(), nullptr, ledger));
  }

  SUBCASE("missing required param") {
    try {
      registry.instantiate("entity_resolution", {});
      FAIL("expected MissingParam");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingParam);
      CHECK(std::string(e.what()).find("data") != std::string::npos);
    }
  }

  SUBCASE("unknown template") {
    try {
      registry.instantiate("nope", {});
      FAIL("expected UnknownTemplate");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownTemplate);
    }
  }

  SUBCASE("defaults can be overridden") {
    PipelineSpec spec = registry.instantiate(
        "entity_resolution",
        {{"data", Value::text("x.csv")}, {"out", Value::text("y.csv")}});
    CHECK(spec.find_param("out")->as_text() == "y.csv");
  }

  SUBCASE("unknown params are rejected") {
    CHECK_THROWS_AS(registry.instantiate("entity_resolution",
                                         {{"data", Value::text("x")},
                                          {"bogus", Value::text("y")}}),
                    Error);
  }
}

TEST_CASE("repository template files stay in sync with the built-ins") {
  TemplateRegistry builtins = TemplateRegistry::with_builtins();
  TemplateRegistry from_disk;
  from_disk.load_directory(std::string(CURATOR_SOURCE_DIR) + "/templates");
  auto disk_list = from_disk.list();
  REQUIRE(disk_list.size() == 3);
  for (const TemplateInfo& t : disk_list) {
    const TemplateInfo* built = builtins.find(t.name);
    REQUIRE(built != nullptr);
    CHECK(built->body == t.body);
  }
}

TEST_CASE("compilation is deterministic under a deterministic backend") {
  const char* source =
      "pipeline p {\n"
      "  node load: load_csv(path=\"x.csv\");\n"
      "  node gen: impute() llmgc(task=\"trim\", tag=\"g\");\n"
      "  load -> gen;\n"
      "}";
  auto make = [&] {
    auto backend = mock(R"({"default":"```\nreturn trim(input);\n```"})");
    CostLedger ledger;
    PhysicalPlan plan = compile(parse_pipeline(source), builtin_customs(), backend, ledger);
    auto* script = dynamic_cast<ScriptModule*>(plan.order[1].second.get());
    REQUIRE(script != nullptr);
    return script->program().source;
  };
  CHECK(make() == make());
}

TEST_CASE("prompt rendering") {
  Value input = Value::record({{"left", Value::text("Ann")}, {"n", Value::integer(3)}});
  CHECK(render_prompt("cmp {left} #{n}", input) == "cmp Ann #3");
  CHECK(render_prompt("{{literal}} {left}", input) == "{literal} Ann");
  CHECK(render_prompt("whole: {input}", Value::text("x")) == "whole: x");
  CHECK(render_prompt("json: {input}", input) == "json: " + value_to_json_text(input));
  CHECK_THROWS_AS(render_prompt("{missing}", input), Error);
  CHECK_THROWS_AS(render_prompt("{unterminated", input), Error);
}

TEST_CASE("llm output validation rules") {
  SUBCASE("one_of returns the canonical label and re-asks once") {
    auto backend = mock(
        R"({"rules":[{"contains":"invalid","respond":"yes"},
                     {"respond":"maybe?","once":true},
                     {"respond":"YES"}]})");
    CostLedger ledger;
    RunContext ctx{backend, &ledger, {}};
    ModuleDescriptor d;
    d.id = "m";
    d.kind = ModuleKind::Llm;
    LlmModule module(d, "{input}", "", OutputRule::parse("one_of:yes,no"), "t");
    // first answer "maybe?" violates; the corrective re-ask answers "yes"
    CHECK(module.invoke(Value::text("q"), ctx) == Value::text("yes"));
    CHECK(ledger.snapshot().total.llm_calls == 2);
  }

  SUBCASE("one_of normalizes before matching") {
    OutputRule rule = OutputRule::parse("one_of:yes,no");
    auto checked = rule.check("  YES ");
    CHECK(checked.ok);
    CHECK(checked.value == Value::text("yes"));  // canonical label
  }

  SUBCASE("numeric_range parses and bounds the value") {
    OutputRule rule = OutputRule::parse("numeric_range:0,100");
    CHECK(rule.check("42").ok);
    CHECK(rule.check(" 42.5 ").value.as_float() == doctest::Approx(42.5));
    CHECK_FALSE(rule.check("120").ok);
    CHECK_FALSE(rule.check("n/a").ok);
  }

  SUBCASE("regex rule") {
    OutputRule rule = OutputRule::parse("regex:[A-Z]+");
    CHECK(rule.check("ABC").ok);
    CHECK_FALSE(rule.check("abc").ok);
  }

  SUBCASE("double violation raises LlmOutputInvalid") {
    auto backend = mock(R"({"default":"never a number"})");
    CostLedger ledger;
    RunContext ctx{backend, &ledger, {}};
    ModuleDescriptor d;
    d.id = "m";
    d.kind = ModuleKind::Llm;
    LlmModule module(d, "{input}", "", OutputRule::parse("numeric_range:0,1"), "t");
    try {
      module.invoke(Value::text("q"), ctx);
      FAIL("expected LlmOutputInvalid");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LlmOutputInvalid);
    }
    CHECK(ledger.snapshot().total.llm_calls == 2);
  }

  SUBCASE("bad rule text") {
    CHECK_THROWS_AS(OutputRule::parse("whatever:x"), Error);
    CHECK_THROWS_AS(OutputRule::parse("numeric_range:5,1"), Error);
    CHECK_THROWS_AS(OutputRule::parse("one_of:"), Error);
  }
}

TEST_CASE("tool registry builds llm, calc and custom-module tools") {
  auto backend = mock(R"({"default":"Sony"})");
  auto tools =
      build_tool_registry({"llm", "calc", "identity"}, builtin_customs(), backend, "tag");
  CHECK(tools->find("llm") != nullptr);
  CHECK(tools->find("calc") != nullptr);
  CHECK(tools->find("identity") != nullptr);
  CHECK(tools->signatures().find("tool llm(input: text) -> text") != std::string::npos);

  CostLedger ledger;
  script::ToolCallContext ctx{&ledger, "tag"};
  CHECK(tools->find("llm")->fn({Value::text("who makes it?")}, ctx) == Value::text("Sony"));
  CHECK(ledger.snapshot().total.llm_calls == 1);
  CHECK(tools->find("calc")->fn({Value::text("2 * (3 + 4)")}, ctx) == Value::integer(14));
  CHECK(ledger.snapshot().total.llm_calls == 1);  // calc is local

  CHECK_THROWS_AS(build_tool_registry({"nosuch"}, builtin_customs(), backend, "t"), Error);
}
