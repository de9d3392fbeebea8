#include "curator/value_json.hpp"

#include <algorithm>

namespace curator {

using nlohmann::ordered_json;

nlohmann::ordered_json schema_to_json(const Schema& schema) {
  ordered_json cols = ordered_json::array();
  for (const Column& c : schema.columns) {
    cols.push_back({{"name", c.name}, {"type", type_tag_name(c.type)}});
  }
  return cols;
}

Schema schema_from_json(const ordered_json& j) {
  if (!j.is_array()) raise(ErrorCode::InvalidArgument, "schema JSON must be an array");
  std::vector<Column> cols;
  for (const auto& e : j) {
    cols.push_back({e.at("name").get<std::string>(),
                    type_tag_from_name(e.at("type").get<std::string>())});
  }
  return Schema(std::move(cols));
}

ordered_json value_to_json(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return nullptr;
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::Int: return v.as_int();
    case ValueKind::Float: return v.as_float();
    case ValueKind::Text: return v.as_text();
    case ValueKind::List: {
      ordered_json arr = ordered_json::array();
      for (const Value& item : v.as_list()) arr.push_back(value_to_json(item));
      return arr;
    }
    case ValueKind::Record: {
      const Value::Record& rec = v.as_record();
      ordered_json obj = ordered_json::object();
      bool lex = true;
      for (size_t i = 0; i + 1 < rec.size(); ++i) {
        if (!(rec[i].name < rec[i + 1].name)) {
          lex = false;
          break;
        }
      }
      for (const Field& f : rec) obj[f.name] = value_to_json(f.value);
      if (!lex) {
        ordered_json order = ordered_json::array();
        for (const Field& f : rec) order.push_back(f.name);
        obj["__order"] = std::move(order);
      }
      return obj;
    }
    case ValueKind::TableRef: {
      const Table& t = *v.as_table();
      ordered_json rows = ordered_json::array();
      for (const Value& row : t.rows) rows.push_back(value_to_json(row));
      return {{"schema", schema_to_json(t.schema)}, {"rows", std::move(rows)}};
    }
  }
  return nullptr;
}

namespace {

bool looks_like_table(const ordered_json& j) {
  if (!j.is_object() || j.size() != 2 || !j.contains("schema") || !j.contains("rows"))
    return false;
  const auto& schema = j.at("schema");
  if (!schema.is_array() || !j.at("rows").is_array()) return false;
  for (const auto& col : schema) {
    if (!col.is_object() || !col.contains("name") || !col.contains("type")) return false;
  }
  return true;
}

}  // namespace

Value value_from_json(const ordered_json& j) {
  switch (j.type()) {
    case ordered_json::value_t::null: return Value::null();
    case ordered_json::value_t::boolean: return Value::boolean(j.get<bool>());
    case ordered_json::value_t::number_integer:
    case ordered_json::value_t::number_unsigned:
      return Value::integer(j.get<int64_t>());
    case ordered_json::value_t::number_float: return Value::real(j.get<double>());
    case ordered_json::value_t::string: return Value::text(j.get<std::string>());
    case ordered_json::value_t::array: {
      Value::List items;
      items.reserve(j.size());
      for (const auto& e : j) items.push_back(value_from_json(e));
      return Value::list(std::move(items));
    }
    case ordered_json::value_t::object: {
      if (looks_like_table(j)) {
        auto table = std::make_shared<Table>();
        table->schema = schema_from_json(j.at("schema"));
        for (const auto& row : j.at("rows")) table->rows.push_back(value_from_json(row));
        return Value::table(std::move(table));
      }
      Value::Record fields;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "__order") continue;
        fields.push_back({it.key(), value_from_json(it.value())});
      }
      if (j.contains("__order")) {
        const auto& order = j.at("__order");
        Value::Record reordered;
        for (const auto& name : order) {
          std::string n = name.get<std::string>();
          auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const Field& f) { return f.name == n; });
          if (it == fields.end())
            raise(ErrorCode::InvalidArgument, "__order names unknown field: " + n);
          reordered.push_back(std::move(*it));
          fields.erase(it);
        }
        for (Field& f : fields) reordered.push_back(std::move(f));  // stragglers keep order
        return Value::record(std::move(reordered));
      }
      return Value::record(std::move(fields));
    }
    default:
      raise(ErrorCode::InvalidArgument, "unsupported JSON value");
  }
}

std::string value_to_json_text(const Value& v) { return value_to_json(v).dump(); }

Value value_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::InvalidArgument, "malformed JSON value");
  return value_from_json(j);
}

std::string render_scalar(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return "";
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return float_to_string(v.as_float());
    case ValueKind::Text: return v.as_text();
    default: return value_to_json_text(v);
  }
}

}  // namespace curator
