#include <doctest.h>

#include <random>

#include "curator/ledger.hpp"
#include "curator/value.hpp"
#include "curator/value_json.hpp"

using namespace curator;

namespace {

Value rec(std::initializer_list<Field> fields) { return Value::record(fields); }

std::shared_ptr<Table> small_table() {
  auto t = std::make_shared<Table>();
  t->schema = Schema({{"name", TypeTag::Text}, {"qty", TypeTag::Int}});
  t->rows.push_back(rec({{"name", Value::text("a")}, {"qty", Value::integer(1)}}));
  t->rows.push_back(rec({{"name", Value::text("b")}, {"qty", Value::null()}}));
  return t;
}

}  // namespace

TEST_CASE("value_equal: exact, normalized and tolerant comparisons") {
  CHECK(value_equal(Value::text("Sony"), Value::text("Sony"), ComparatorSpec::exact()));
  CHECK(value_equal(Value::text("  SONY "), Value::text("sony"),
                    ComparatorSpec::normalized_text()));
  CHECK(value_equal(Value::real(3.000004), Value::real(3.0),
                    ComparatorSpec::numeric_tolerance(1e-5)));
  CHECK_FALSE(value_equal(Value::real(3.1), Value::real(3.0),
                          ComparatorSpec::numeric_tolerance(1e-5)));
  CHECK_FALSE(value_equal(Value::text("Sony"), Value::text("sony"), ComparatorSpec::exact()));

  SUBCASE("tolerance compares ints against floats") {
    CHECK(value_equal(Value::integer(3), Value::real(3.0 + 4e-6),
                      ComparatorSpec::numeric_tolerance(1e-5)));
  }
  SUBCASE("tolerance recurses structurally") {
    Value a = Value::list({Value::real(1.0), Value::real(2.0)});
    Value b = Value::list({Value::real(1.0 + 5e-6), Value::real(2.0)});
    CHECK(value_equal(a, b, ComparatorSpec::numeric_tolerance(1e-5)));
    CHECK_FALSE(value_equal(a, Value::list({Value::real(1.0)}),
                            ComparatorSpec::numeric_tolerance(1e-5)));
  }
  SUBCASE("tolerance on a non-numeric leaf is a type mismatch") {
    CHECK_THROWS_WITH_AS(value_equal(Value::text("a"), Value::text("a"),
                                     ComparatorSpec::numeric_tolerance(1e-5)),
                         doctest::Contains("non-numeric"), Error);
  }
  SUBCASE("epsilon must be positive") {
    CHECK_THROWS_AS(ComparatorSpec::numeric_tolerance(0.0), Error);
  }
}

TEST_CASE("value_equal exact is reflexive over assorted values") {
  std::vector<Value> values = {
      Value::null(),
      Value::boolean(true),
      Value::integer(-42),
      Value::real(2.5),
      Value::text("héllo  world"),
      Value::list({Value::integer(1), Value::text("x")}),
      rec({{"b", Value::integer(2)}, {"a", Value::null()}}),
      Value::table(small_table()),
  };
  for (const Value& v : values) {
    CAPTURE(value_kind_name(v.kind()));
    CHECK(value_equal(v, v, ComparatorSpec::exact()));
  }
}

TEST_CASE("normalized_text is symmetric and transitive over text variants") {
  std::mt19937 rng(7);
  std::vector<std::string> base = {"Ann Brown", "ANN  BROWN", " ann brown\t", "ann BROWN"};
  for (int i = 0; i < 50; ++i) {
    const std::string& a = base[rng() % base.size()];
    const std::string& b = base[rng() % base.size()];
    const std::string& c = base[rng() % base.size()];
    ComparatorSpec cmp = ComparatorSpec::normalized_text();
    bool ab = value_equal(Value::text(a), Value::text(b), cmp);
    bool ba = value_equal(Value::text(b), Value::text(a), cmp);
    CHECK(ab == ba);
    if (ab && value_equal(Value::text(b), Value::text(c), cmp)) {
      CHECK(value_equal(Value::text(a), Value::text(c), cmp));
    }
  }
}

TEST_CASE("normalize_text handles case folding and whitespace") {
  CHECK(normalize_text("  SONY ") == "sony");
  CHECK(normalize_text("a\t\tb\n c") == "a b c");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("   ") == "");
  CHECK(normalize_text("Straße") == "strasse");
  CHECK(normalize_text("ÉCOLE") == "école");
}

TEST_CASE("record invariants enforced at construction") {
  CHECK_THROWS_AS(Value::record({{"a", Value::integer(1)}, {"a", Value::integer(2)}}), Error);
  CHECK_THROWS_AS(Value::record({{"", Value::integer(1)}}), Error);

  SUBCASE("nesting depth is capped") {
    Value v = Value::integer(0);
    for (int i = 0; i < kMaxValueDepth - 1; ++i) v = Value::list({v});
    CHECK(v.depth() == kMaxValueDepth);
    CHECK_THROWS_AS(Value::list({v}), Error);
  }
}

TEST_CASE("conform reports table violations") {
  Table t;
  t.schema = Schema({{"name", TypeTag::Text}, {"qty", TypeTag::Int}});

  SUBCASE("empty table is vacuously conformant") { CHECK(conform(t).empty()); }

  SUBCASE("nulls are allowed in any cell") {
    t.rows.push_back(rec({{"name", Value::null()}, {"qty", Value::null()}}));
    CHECK(conform(t).empty());
  }

  SUBCASE("missing column") {
    t.rows.push_back(Value::record({{"name", Value::text("a")}}));
    auto violations = conform(t);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].row == 0);
    CHECK(violations[0].column == "qty");
    CHECK(violations[0].reason == "missing_column");
  }

  SUBCASE("type mismatch") {
    t.rows.push_back(rec({{"name", Value::integer(5)}, {"qty", Value::integer(1)}}));
    auto violations = conform(t);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].reason.find("type_mismatch") == 0);
  }

  SUBCASE("conform is deterministic") {
    t.rows.push_back(Value::record({{"name", Value::text("a")}}));
    auto first = conform(t);
    auto second = conform(t);
    REQUIRE(first.size() == second.size());
    for (size_t i = 0; i < first.size(); ++i) {
      CHECK(first[i].row == second[i].row);
      CHECK(first[i].column == second[i].column);
      CHECK(first[i].reason == second[i].reason);
    }
  }
}

TEST_CASE("canonical JSON round-trips values") {
  std::vector<Value> values = {
      Value::null(),
      Value::boolean(false),
      Value::integer(1234567890123),
      Value::real(0.1),
      Value::text("line\nbreak \"quoted\""),
      Value::list({Value::integer(1), Value::list({Value::text("x")})}),
      rec({{"a", Value::integer(1)}, {"b", Value::text("two")}}),
      Value::table(small_table()),
  };
  for (const Value& v : values) {
    CAPTURE(value_to_json_text(v));
    CHECK(value_from_json_text(value_to_json_text(v)) == v);
  }
}

TEST_CASE("canonical JSON keeps non-lexicographic field order via __order") {
  Value v = rec({{"zeta", Value::integer(1)}, {"alpha", Value::integer(2)}});
  std::string text = value_to_json_text(v);
  CHECK(text.find("__order") != std::string::npos);
  CHECK(value_from_json_text(text) == v);

  Value sorted = rec({{"alpha", Value::integer(1)}, {"zeta", Value::integer(2)}});
  CHECK(value_to_json_text(sorted).find("__order") == std::string::npos);
}

TEST_CASE("cost ledger totals equal the per-tag sums") {
  CostLedger ledger;
  ledger.add_llm_call("a", 10, 5);
  ledger.add_llm_call("b", 3, 2);
  ledger.add_llm_call("a", 1, 1);
  ledger.add_cache_hit("b");
  ledger.add_simulated_call("c");

  LedgerSnapshot snap = ledger.snapshot();
  LedgerCounters sum;
  for (const auto& [tag, c] : snap.per_tag) {
    sum.llm_calls += c.llm_calls;
    sum.prompt_tokens += c.prompt_tokens;
    sum.completion_tokens += c.completion_tokens;
    sum.cache_hits += c.cache_hits;
    sum.simulated_calls += c.simulated_calls;
  }
  CHECK(sum == snap.total);
  CHECK(snap.total.llm_calls == 3);
  CHECK(snap.total.cache_hits == 1);
  CHECK(snap.total.simulated_calls == 1);

  SUBCASE("snapshot diff") {
    LedgerSnapshot before = snap;
    ledger.add_llm_call("a", 2, 2);
    LedgerSnapshot delta = ledger.snapshot().diff_from(before);
    CHECK(delta.total.llm_calls == 1);
    CHECK(delta.per_tag.size() == 1);
    CHECK(delta.per_tag.at("a").prompt_tokens == 2);
  }

  SUBCASE("JSON round trip") {
    CHECK(LedgerSnapshot::from_json(snap.to_json()) == snap);
  }
}
