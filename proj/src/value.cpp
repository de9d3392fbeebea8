#include "curator/value.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace curator {

const char* value_kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::Null: return "null";
    case ValueKind::Bool: return "bool";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Text: return "text";
    case ValueKind::List: return "list";
    case ValueKind::Record: return "record";
    case ValueKind::TableRef: return "table";
  }
  return "?";
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ScriptParseError: return "ScriptParseError";
    case ErrorCode::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorCode::ResourceLimitExceeded: return "ResourceLimitExceeded";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::ToolError: return "ToolError";
    case ErrorCode::UnknownCustomModule: return "UnknownCustomModule";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::UnresolvedParam: return "UnresolvedParam";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::MissingParam: return "MissingParam";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::MockExhausted: return "MockExhausted";
    case ErrorCode::LlmOutputInvalid: return "LlmOutputInvalid";
    case ErrorCode::CsvError: return "CsvError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownQuery: return "UnknownQuery";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::ModuleError: return "ModuleError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LearnerShapeError: return "LearnerShapeError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "?";
}

Value Value::boolean(bool b) {
  Value v;
  v.repr_ = b;
  return v;
}

Value Value::integer(int64_t i) {
  Value v;
  v.repr_ = i;
  return v;
}

Value Value::real(double d) {
  Value v;
  v.repr_ = d;
  return v;
}

Value Value::text(std::string s) {
  Value v;
  v.repr_ = std::move(s);
  return v;
}

Value Value::list(List items) {
  int depth = 1;
  for (const Value& item : items) depth = std::max(depth, item.depth() + 1);
  if (depth > kMaxValueDepth)
    raise(ErrorCode::InvalidArgument, "value nesting exceeds depth limit");
  Value v;
  v.repr_ = std::move(items);
  v.depth_ = depth;
  return v;
}

Value Value::record(Record fields) {
  int depth = 1;
  std::unordered_set<std::string> seen;
  for (const Field& f : fields) {
    if (f.name.empty())
      raise(ErrorCode::InvalidArgument, "record field name must be non-empty");
    if (!seen.insert(f.name).second)
      raise(ErrorCode::InvalidArgument, "duplicate record field: " + f.name);
    depth = std::max(depth, f.value.depth() + 1);
  }
  if (depth > kMaxValueDepth)
    raise(ErrorCode::InvalidArgument, "value nesting exceeds depth limit");
  Value v;
  v.repr_ = std::move(fields);
  v.depth_ = depth;
  return v;
}

Value Value::table(std::shared_ptr<const Table> t) {
  if (!t) raise(ErrorCode::InvalidArgument, "table handle must be non-null");
  Value v;
  v.repr_ = std::move(t);
  return v;
}

ValueKind Value::kind() const {
  return static_cast<ValueKind>(repr_.index());
}

bool Value::as_bool() const {
  if (kind() != ValueKind::Bool)
    raise(ErrorCode::TypeError, std::string("expected bool, got ") + value_kind_name(kind()));
  return std::get<bool>(repr_);
}

int64_t Value::as_int() const {
  if (kind() != ValueKind::Int)
    raise(ErrorCode::TypeError, std::string("expected int, got ") + value_kind_name(kind()));
  return std::get<int64_t>(repr_);
}

double Value::as_float() const {
  if (kind() == ValueKind::Int) return static_cast<double>(std::get<int64_t>(repr_));
  if (kind() != ValueKind::Float)
    raise(ErrorCode::TypeError, std::string("expected number, got ") + value_kind_name(kind()));
  return std::get<double>(repr_);
}

const std::string& Value::as_text() const {
  if (kind() != ValueKind::Text)
    raise(ErrorCode::TypeError, std::string("expected text, got ") + value_kind_name(kind()));
  return std::get<std::string>(repr_);
}

const Value::List& Value::as_list() const {
  if (kind() != ValueKind::List)
    raise(ErrorCode::TypeError, std::string("expected list, got ") + value_kind_name(kind()));
  return std::get<List>(repr_);
}

const Value::Record& Value::as_record() const {
  if (kind() != ValueKind::Record)
    raise(ErrorCode::TypeError, std::string("expected record, got ") + value_kind_name(kind()));
  return std::get<Record>(repr_);
}

const std::shared_ptr<const Table>& Value::as_table() const {
  if (kind() != ValueKind::TableRef)
    raise(ErrorCode::TypeError, std::string("expected table, got ") + value_kind_name(kind()));
  return std::get<std::shared_ptr<const Table>>(repr_);
}

const Value* Value::find(const std::string& name) const {
  if (kind() != ValueKind::Record) return nullptr;
  for (const Field& f : std::get<Record>(repr_)) {
    if (f.name == name) return &f.value;
  }
  return nullptr;
}

bool Value::operator==(const Value& other) const {
  if (kind() != other.kind()) return false;
  switch (kind()) {
    case ValueKind::Null: return true;
    case ValueKind::Bool: return std::get<bool>(repr_) == std::get<bool>(other.repr_);
    case ValueKind::Int: return std::get<int64_t>(repr_) == std::get<int64_t>(other.repr_);
    case ValueKind::Float: {
      // bit-wise equality keeps == an equivalence relation (NaN == NaN)
      double a = std::get<double>(repr_), b = std::get<double>(other.repr_);
      return a == b || (std::isnan(a) && std::isnan(b));
    }
    case ValueKind::Text: return std::get<std::string>(repr_) == std::get<std::string>(other.repr_);
    case ValueKind::List: return std::get<List>(repr_) == std::get<List>(other.repr_);
    case ValueKind::Record: return std::get<Record>(repr_) == std::get<Record>(other.repr_);
    case ValueKind::TableRef: {
      const auto& a = std::get<std::shared_ptr<const Table>>(repr_);
      const auto& b = std::get<std::shared_ptr<const Table>>(other.repr_);
      return a == b || *a == *b;
    }
  }
  return false;
}

const char* type_tag_name(TypeTag tag) {
  switch (tag) {
    case TypeTag::Bool: return "bool";
    case TypeTag::Int: return "int";
    case TypeTag::Float: return "float";
    case TypeTag::Text: return "text";
  }
  return "?";
}

TypeTag type_tag_from_name(const std::string& name) {
  if (name == "bool") return TypeTag::Bool;
  if (name == "int") return TypeTag::Int;
  if (name == "float") return TypeTag::Float;
  if (name == "text") return TypeTag::Text;
  raise(ErrorCode::InvalidArgument, "unknown column type: " + name);
}

Schema::Schema(std::vector<Column> cols) : columns(std::move(cols)) {
  if (columns.empty())
    raise(ErrorCode::InvalidArgument, "schema needs at least one column");
  std::unordered_set<std::string> seen;
  for (const Column& c : columns) {
    if (c.name.empty())
      raise(ErrorCode::InvalidArgument, "schema column name must be non-empty");
    if (!seen.insert(c.name).second)
      raise(ErrorCode::InvalidArgument, "duplicate schema column: " + c.name);
  }
}

int Schema::index_of(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

bool cell_matches(const Value& cell, TypeTag tag) {
  if (cell.is_null()) return true;  // Null stands for missing data in any cell
  switch (tag) {
    case TypeTag::Bool: return cell.kind() == ValueKind::Bool;
    case TypeTag::Int: return cell.kind() == ValueKind::Int;
    case TypeTag::Float:
      return cell.kind() == ValueKind::Float || cell.kind() == ValueKind::Int;
    case TypeTag::Text: return cell.kind() == ValueKind::Text;
  }
  return false;
}

}  // namespace

std::vector<TableViolation> conform(const Table& table) {
  std::vector<TableViolation> out;
  if (table.schema.columns.empty()) {
    out.push_back({-1, "", "schema has no columns"});
    return out;
  }
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const Value& row = table.rows[r];
    int ri = static_cast<int>(r);
    if (row.kind() != ValueKind::Record) {
      out.push_back({ri, "", std::string("row is not a record: ") + value_kind_name(row.kind())});
      continue;
    }
    const Value::Record& rec = row.as_record();
    size_t ncols = table.schema.columns.size();
    for (size_t c = 0; c < ncols; ++c) {
      const Column& col = table.schema.columns[c];
      if (c >= rec.size()) {
        out.push_back({ri, col.name, "missing_column"});
        continue;
      }
      if (rec[c].name != col.name) {
        out.push_back({ri, col.name, "column_order: found " + rec[c].name});
        continue;
      }
      if (!cell_matches(rec[c].value, col.type)) {
        out.push_back({ri, col.name,
                       std::string("type_mismatch: ") + value_kind_name(rec[c].value.kind()) +
                           " in " + type_tag_name(col.type) + " column"});
      }
    }
    for (size_t c = ncols; c < rec.size(); ++c) {
      out.push_back({ri, rec[c].name, "extra_column"});
    }
  }
  return out;
}

ComparatorSpec ComparatorSpec::numeric_tolerance(double eps) {
  if (!(eps > 0.0))
    raise(ErrorCode::InvalidArgument, "numeric_tolerance epsilon must be > 0");
  return {Comparator::NumericTolerance, eps};
}

// ---- text normalization ----------------------------------------------------

namespace {

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::vector<uint32_t> decode_utf8(const std::string& s) {
  std::vector<uint32_t> cps;
  cps.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    uint32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      cps.push_back(0xFFFD);  // stray continuation byte
      ++i;
      continue;
    }
    if (i + extra >= s.size()) {
      cps.push_back(0xFFFD);  // truncated sequence
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      cps.push_back(0xFFFD);
      ++i;
      continue;
    }
    cps.push_back(cp);
    i += extra + 1;
  }
  return cps;
}

bool is_ws_cp(uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Casefold covering ASCII, Latin-1 and Latin Extended-A; other
// codepoints pass through unchanged. SS-folding for U+00DF.
void casefold_cp(uint32_t cp, std::vector<uint32_t>& out) {
  if (cp >= 'A' && cp <= 'Z') {
    out.push_back(cp + 0x20);
    return;
  }
  if (cp == 0xDF) {  // sharp s
    out.push_back('s');
    out.push_back('s');
    return;
  }
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
    out.push_back(cp + 0x20);
    return;
  }
  if (cp >= 0x100 && cp <= 0x137) {
    out.push_back(cp | 1u);
    return;
  }
  if (cp >= 0x139 && cp <= 0x148) {
    out.push_back(((cp + 1) | 1u) - 1);  // odd codepoints are uppercase here
    return;
  }
  if (cp >= 0x14A && cp <= 0x177) {
    out.push_back(cp | 1u);
    return;
  }
  if (cp == 0x178) {
    out.push_back(0xFF);
    return;
  }
  if (cp >= 0x179 && cp <= 0x17E) {
    out.push_back(((cp + 1) | 1u) - 1);
    return;
  }
  out.push_back(cp);
}

}  // namespace

std::string normalize_text(const std::string& text) {
  std::vector<uint32_t> cps = decode_utf8(text);
  std::vector<uint32_t> folded;
  folded.reserve(cps.size());
  for (uint32_t cp : cps) casefold_cp(cp, folded);

  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  bool emitted = false;
  for (uint32_t cp : folded) {
    if (is_ws_cp(cp)) {
      if (emitted) pending_space = true;  // leading whitespace dropped
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    append_utf8(out, cp);
    emitted = true;
  }
  return out;  // trailing whitespace never flushed
}

// ---- comparison ------------------------------------------------------------

namespace {

bool equal_normalized(const Value& a, const Value& b) {
  if (a.kind() == ValueKind::Text && b.kind() == ValueKind::Text)
    return normalize_text(a.as_text()) == normalize_text(b.as_text());
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ValueKind::List: {
      const auto& la = a.as_list();
      const auto& lb = b.as_list();
      if (la.size() != lb.size()) return false;
      for (size_t i = 0; i < la.size(); ++i)
        if (!equal_normalized(la[i], lb[i])) return false;
      return true;
    }
    case ValueKind::Record: {
      const auto& ra = a.as_record();
      const auto& rb = b.as_record();
      if (ra.size() != rb.size()) return false;
      for (size_t i = 0; i < ra.size(); ++i) {
        if (ra[i].name != rb[i].name) return false;
        if (!equal_normalized(ra[i].value, rb[i].value)) return false;
      }
      return true;
    }
    case ValueKind::TableRef: {
      const Table& ta = *a.as_table();
      const Table& tb = *b.as_table();
      if (!(ta.schema == tb.schema) || ta.rows.size() != tb.rows.size()) return false;
      for (size_t i = 0; i < ta.rows.size(); ++i)
        if (!equal_normalized(ta.rows[i], tb.rows[i])) return false;
      return true;
    }
    default:
      return a == b;
  }
}

bool equal_tolerant(const Value& a, const Value& b, double eps) {
  if (a.is_numeric() && b.is_numeric())
    return std::fabs(a.as_float() - b.as_float()) <= eps;
  if (a.is_null() && b.is_null()) return true;
  if (a.kind() != b.kind())
    raise(ErrorCode::TypeMismatch,
          std::string("numeric_tolerance cannot compare ") + value_kind_name(a.kind()) +
              " with " + value_kind_name(b.kind()));
  switch (a.kind()) {
    case ValueKind::List: {
      const auto& la = a.as_list();
      const auto& lb = b.as_list();
      if (la.size() != lb.size()) return false;
      for (size_t i = 0; i < la.size(); ++i)
        if (!equal_tolerant(la[i], lb[i], eps)) return false;
      return true;
    }
    case ValueKind::Record: {
      const auto& ra = a.as_record();
      const auto& rb = b.as_record();
      if (ra.size() != rb.size()) return false;
      for (size_t i = 0; i < ra.size(); ++i) {
        if (ra[i].name != rb[i].name) return false;
        if (!equal_tolerant(ra[i].value, rb[i].value, eps)) return false;
      }
      return true;
    }
    default:
      raise(ErrorCode::TypeMismatch,
            std::string("numeric_tolerance applied to non-numeric leaf: ") +
                value_kind_name(a.kind()));
  }
}

}  // namespace

bool value_equal(const Value& a, const Value& b, const ComparatorSpec& cmp) {
  switch (cmp.mode) {
    case Comparator::Exact: return a == b;
    case Comparator::NormalizedText: return equal_normalized(a, b);
    case Comparator::NumericTolerance: return equal_tolerant(a, b, cmp.epsilon);
  }
  return false;
}

std::string float_to_string(double d) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, ptr);
  // keep floats visually distinct from ints
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

}  // namespace curator
