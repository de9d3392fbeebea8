#pragma once

#include <memory>
#include <string>
#include <vector>

#include "curator/value.hpp"

namespace curator {

enum class ModuleKind { Custom, Llm, Llmgc, Decorated };

const char* module_kind_name(ModuleKind kind);

// Declared value shape of a module port. `None` marks a port that needs no
// upstream input (pure sources); `Any` accepts everything.
enum class Shape { None, Any, Scalar, Text, Record, List, Table };

const char* shape_name(Shape shape);
Shape shape_from_name(const std::string& name);
bool value_matches_shape(const Value& v, Shape shape);

// Logical module in compiled-ready form: id, kind, declared port shapes and a
// kind-specific config record.
struct ModuleDescriptor {
  std::string id;
  ModuleKind kind = ModuleKind::Custom;
  Shape input_shape = Shape::Any;
  Shape output_shape = Shape::Any;
  Value config = Value::record({});  // kind-specific fields

  // Decorated descriptors nest to depth <= 4.
  std::shared_ptr<ModuleDescriptor> inner;

  bool operator==(const ModuleDescriptor& other) const;
};

struct TestCase {
  Value input;
  Value expected;
  ComparatorSpec comparator = ComparatorSpec::exact();
};

std::vector<TestCase> test_cases_from_json_text(const std::string& text);
std::string test_cases_to_json_text(const std::vector<TestCase>& cases);

inline constexpr int kMaxDecorationDepth = 4;

}  // namespace curator
