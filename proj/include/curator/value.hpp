#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "curator/error.hpp"

namespace curator {

class Value;
struct Table;

enum class ValueKind { Null, Bool, Int, Float, Text, List, Record, TableRef };

const char* value_kind_name(ValueKind kind);

// Values nested deeper than this are rejected at construction.
inline constexpr int kMaxValueDepth = 32;

struct Field;

// Immutable tagged value; the data flowing between modules.
class Value {
 public:
  using List = std::vector<Value>;
  using Record = std::vector<Field>;

  Value() : repr_(std::monostate{}) {}

  static Value null() { return Value(); }
  static Value boolean(bool b);
  static Value integer(int64_t i);
  static Value real(double d);
  static Value text(std::string s);
  static Value list(List items);
  static Value record(Record fields);
  static Value table(std::shared_ptr<const Table> t);

  ValueKind kind() const;
  int depth() const { return depth_; }

  bool is_null() const { return kind() == ValueKind::Null; }
  bool is_numeric() const {
    return kind() == ValueKind::Int || kind() == ValueKind::Float;
  }
  bool is_scalar() const {
    ValueKind k = kind();
    return k != ValueKind::List && k != ValueKind::Record && k != ValueKind::TableRef;
  }

  bool as_bool() const;
  int64_t as_int() const;
  double as_float() const;  // accepts Int or Float
  const std::string& as_text() const;
  const List& as_list() const;
  const Record& as_record() const;
  const std::shared_ptr<const Table>& as_table() const;

  // Record field lookup; null when absent.
  const Value* find(const std::string& name) const;

  bool operator==(const Value& other) const;
  bool operator!=(const Value& other) const { return !(*this == other); }

 private:
  using Repr = std::variant<std::monostate, bool, int64_t, double, std::string,
                            List, Record, std::shared_ptr<const Table>>;
  Repr repr_;
  int depth_ = 1;
};

struct Field {
  std::string name;
  Value value;

  bool operator==(const Field& other) const {
    return name == other.name && value == other.value;
  }
};

enum class TypeTag { Bool, Int, Float, Text };

const char* type_tag_name(TypeTag tag);
TypeTag type_tag_from_name(const std::string& name);

struct Column {
  std::string name;
  TypeTag type = TypeTag::Text;

  bool operator==(const Column& other) const {
    return name == other.name && type == other.type;
  }
};

// Ordered, uniquely named columns.
struct Schema {
  std::vector<Column> columns;

  Schema() = default;
  explicit Schema(std::vector<Column> cols);

  int index_of(const std::string& name) const;  // -1 when absent
  bool operator==(const Schema& other) const { return columns == other.columns; }
};

struct Table {
  Schema schema;
  std::vector<Value> rows;  // each a Record matching the schema

  bool operator==(const Table& other) const {
    return schema == other.schema && rows == other.rows;
  }
};

struct TableViolation {
  int row = -1;  // -1 = schema-level problem
  std::string column;
  std::string reason;
};

// Every Table invariant, reported instead of thrown.
std::vector<TableViolation> conform(const Table& table);

enum class Comparator { Exact, NormalizedText, NumericTolerance };

struct ComparatorSpec {
  Comparator mode = Comparator::Exact;
  double epsilon = 0.0;  // NumericTolerance only; must be > 0

  static ComparatorSpec exact() { return {Comparator::Exact, 0.0}; }
  static ComparatorSpec normalized_text() { return {Comparator::NormalizedText, 0.0}; }
  static ComparatorSpec numeric_tolerance(double eps);
};

// casefold + trim + collapse internal whitespace (UTF-8 aware)
std::string normalize_text(const std::string& text);

bool value_equal(const Value& a, const Value& b, const ComparatorSpec& cmp);

// Scalar rendering used by prompts, CSV cells, and table rendering.
// Text is passed through raw; containers render as canonical JSON.
std::string render_scalar(const Value& v);

std::string float_to_string(double d);

}  // namespace curator
