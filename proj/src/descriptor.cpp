#include "curator/descriptor.hpp"

#include "curator/value_json.hpp"

namespace curator {

using nlohmann::ordered_json;

const char* module_kind_name(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::Custom: return "custom";
    case ModuleKind::Llm: return "llm";
    case ModuleKind::Llmgc: return "llmgc";
    case ModuleKind::Decorated: return "decorated";
  }
  return "?";
}

const char* shape_name(Shape shape) {
  switch (shape) {
    case Shape::None: return "none";
    case Shape::Any: return "any";
    case Shape::Scalar: return "scalar";
    case Shape::Text: return "text";
    case Shape::Record: return "record";
    case Shape::List: return "list";
    case Shape::Table: return "table";
  }
  return "?";
}

Shape shape_from_name(const std::string& name) {
  if (name == "none") return Shape::None;
  if (name == "any") return Shape::Any;
  if (name == "scalar") return Shape::Scalar;
  if (name == "text") return Shape::Text;
  if (name == "record") return Shape::Record;
  if (name == "list") return Shape::List;
  if (name == "table") return Shape::Table;
  raise(ErrorCode::InvalidArgument, "unknown shape: " + name);
}

bool value_matches_shape(const Value& v, Shape shape) {
  if (shape == Shape::Any || shape == Shape::None) return true;
  if (v.is_null()) return true;  // missing data is admissible anywhere
  switch (shape) {
    case Shape::Scalar: return v.is_scalar();
    case Shape::Text: return v.kind() == ValueKind::Text;
    case Shape::Record: return v.kind() == ValueKind::Record;
    case Shape::List: return v.kind() == ValueKind::List;
    case Shape::Table: return v.kind() == ValueKind::TableRef;
    default: return true;
  }
}

bool ModuleDescriptor::operator==(const ModuleDescriptor& other) const {
  if (id != other.id || kind != other.kind || input_shape != other.input_shape ||
      output_shape != other.output_shape || !(config == other.config))
    return false;
  if (static_cast<bool>(inner) != static_cast<bool>(other.inner)) return false;
  return !inner || *inner == *other.inner;
}

namespace {

ComparatorSpec comparator_from_json(const ordered_json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "exact") return ComparatorSpec::exact();
    if (s == "normalized_text") return ComparatorSpec::normalized_text();
    raise(ErrorCode::InvalidArgument, "unknown comparator: " + s);
  }
  if (j.is_object() && j.contains("numeric_tolerance"))
    return ComparatorSpec::numeric_tolerance(j.at("numeric_tolerance").get<double>());
  raise(ErrorCode::InvalidArgument, "malformed comparator");
}

ordered_json comparator_to_json(const ComparatorSpec& c) {
  switch (c.mode) {
    case Comparator::Exact: return "exact";
    case Comparator::NormalizedText: return "normalized_text";
    case Comparator::NumericTolerance: return {{"numeric_tolerance", c.epsilon}};
  }
  return "exact";
}

}  // namespace

std::vector<TestCase> test_cases_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    raise(ErrorCode::InvalidArgument, "test cases must be a JSON array");
  std::vector<TestCase> cases;
  for (const auto& e : j) {
    TestCase tc;
    tc.input = value_from_json(e.at("input"));
    tc.expected = value_from_json(e.at("expected"));
    if (e.contains("comparator")) tc.comparator = comparator_from_json(e.at("comparator"));
    cases.push_back(std::move(tc));
  }
  return cases;
}

std::string test_cases_to_json_text(const std::vector<TestCase>& cases) {
  ordered_json arr = ordered_json::array();
  for (const TestCase& tc : cases) {
    arr.push_back({{"input", value_to_json(tc.input)},
                   {"expected", value_to_json(tc.expected)},
                   {"comparator", comparator_to_json(tc.comparator)}});
  }
  return arr.dump(2);
}

}  // namespace curator
