#include "curator/connector.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "curator/value_json.hpp"

namespace curator {

using nlohmann::ordered_json;

void ConnectorPolicy::check() const {
  if (max_rows_per_query == 0)
    raise(ErrorCode::InvalidArgument, "max_rows_per_query must be positive");
  if (total_row_budget == 0)
    raise(ErrorCode::InvalidArgument, "total_row_budget must be positive");
  auto whitelisted = [&](const std::string& column) {
    return std::find(column_whitelist.begin(), column_whitelist.end(), column) !=
           column_whitelist.end();
  };
  for (const auto& [name, tmpl] : queries) {
    if (tmpl.select.empty())
      raise(ErrorCode::InvalidArgument, "query \"" + name + "\" projects no columns");
    for (const std::string& col : tmpl.select) {
      if (!whitelisted(col))
        raise(ErrorCode::InvalidArgument,
              "query \"" + name + "\" projects non-whitelisted column \"" + col + "\"");
    }
    for (const QueryPredicate& p : tmpl.where) {
      if (!whitelisted(p.column))
        raise(ErrorCode::InvalidArgument,
              "query \"" + name + "\" filters non-whitelisted column \"" + p.column + "\"");
      if (p.op != "eq" && p.op != "lt" && p.op != "le" && p.op != "gt" && p.op != "ge")
        raise(ErrorCode::InvalidArgument, "unknown predicate op \"" + p.op + "\"");
      if (!p.param && !p.constant)
        raise(ErrorCode::InvalidArgument,
              "predicate on \"" + p.column + "\" needs a param or a value");
    }
  }
}

ConnectorPolicy ConnectorPolicy::from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::InvalidArgument, "malformed connector policy JSON");
  ConnectorPolicy policy;
  for (const auto& c : j.value("columns", ordered_json::array()))
    policy.column_whitelist.push_back(c.get<std::string>());
  policy.max_rows_per_query = j.value("max_rows_per_query", 50ull);
  policy.total_row_budget = j.value("total_row_budget", 1000ull);
  if (j.contains("audit_path")) policy.audit_path = j.at("audit_path").get<std::string>();
  for (const auto& q : j.value("queries", ordered_json::array())) {
    QueryTemplate tmpl;
    tmpl.name = q.at("name").get<std::string>();
    for (const auto& col : q.at("select")) tmpl.select.push_back(col.get<std::string>());
    for (const auto& w : q.value("where", ordered_json::array())) {
      QueryPredicate pred;
      pred.column = w.at("column").get<std::string>();
      pred.op = w.value("op", std::string("eq"));
      if (w.contains("param")) pred.param = w.at("param").get<std::string>();
      if (w.contains("value")) pred.constant = value_from_json(w.at("value"));
      tmpl.where.push_back(std::move(pred));
    }
    policy.queries[tmpl.name] = std::move(tmpl);
  }
  policy.check();
  return policy;
}

ConnectorPolicy ConnectorPolicy::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read connector policy: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

uint64_t ConnectorPolicy::rows_used() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return rows_used_;
}

std::vector<AuditEntry> ConnectorPolicy::audit_log() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return audit_;
}

size_t ConnectorPolicy::audit_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return audit_.size();
}

void ConnectorPolicy::append_audit(const std::string& query, const ordered_json& params,
                                   uint64_t rows, const std::string& status) {
  AuditEntry entry;
  entry.ts = clock ? clock()
                   : std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  entry.query = query;
  entry.params = params;
  entry.rows = rows;
  entry.status = status;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    audit_.push_back(entry);
  }
  if (audit_path) {
    ordered_json line = {{"ts", entry.ts},
                         {"query", entry.query},
                         {"params", entry.params},
                         {"rows", entry.rows},
                         {"status", entry.status}};
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(*audit_path, std::ios::app);
    if (out) out << line.dump() << "\n";
  }
}

namespace {

ordered_json params_to_json(const std::map<std::string, Value>& params) {
  ordered_json out = ordered_json::object();
  for (const auto& [name, value] : params) out[name] = value_to_json(value);
  return out;
}

// three-way compare for predicate evaluation; nullopt = incomparable
std::optional<int> compare_cells(const Value& cell, const Value& rhs) {
  if (cell.is_null() || rhs.is_null()) return std::nullopt;
  if (cell.is_numeric() && rhs.is_numeric()) {
    double a = cell.as_float(), b = rhs.as_float();
    return a < b ? -1 : a == b ? 0 : 1;
  }
  if (cell.kind() == ValueKind::Text && rhs.kind() == ValueKind::Text) {
    int c = cell.as_text().compare(rhs.as_text());
    return c < 0 ? -1 : c == 0 ? 0 : 1;
  }
  if (cell.kind() == ValueKind::Bool && rhs.kind() == ValueKind::Bool) {
    return cell.as_bool() == rhs.as_bool() ? 0 : (cell.as_bool() ? 1 : -1);
  }
  return std::nullopt;
}

bool predicate_holds(const std::string& op, const Value& cell, const Value& rhs) {
  std::optional<int> c = compare_cells(cell, rhs);
  if (!c) return false;
  if (op == "eq") return *c == 0;
  if (op == "lt") return *c < 0;
  if (op == "le") return *c <= 0;
  if (op == "gt") return *c > 0;
  return *c >= 0;  // ge
}

}  // namespace

Table connector_execute(ConnectorPolicy& policy, const std::string& query_name,
                        const std::map<std::string, Value>& params, const Table& table) {
  ordered_json params_json = params_to_json(params);

  auto it = policy.queries.find(query_name);
  if (it == policy.queries.end()) {
    policy.append_audit(query_name, params_json, 0, "rejected");
    raise(ErrorCode::UnknownQuery, "query \"" + query_name + "\" is not registered");
  }
  const QueryTemplate& tmpl = it->second;

  // params must bind exactly the declared placeholders
  std::vector<std::string> declared;
  for (const QueryPredicate& p : tmpl.where) {
    if (p.param) declared.push_back(*p.param);
  }
  for (const std::string& name : declared) {
    if (!params.count(name)) {
      policy.append_audit(query_name, params_json, 0, "rejected");
      raise(ErrorCode::BadParams, "query \"" + query_name + "\" needs param \"" + name + "\"");
    }
  }
  for (const auto& [name, value] : params) {
    if (std::find(declared.begin(), declared.end(), name) == declared.end()) {
      policy.append_audit(query_name, params_json, 0, "rejected");
      raise(ErrorCode::BadParams,
            "query \"" + query_name + "\" does not declare param \"" + name + "\"");
    }
  }

  // selection
  std::vector<const Value::Record*> matches;
  for (const Value& row : table.rows) {
    const Value::Record& rec = row.as_record();
    bool all = true;
    for (const QueryPredicate& p : tmpl.where) {
      const Value* cell = row.find(p.column);
      const Value& rhs = p.param ? params.at(*p.param) : *p.constant;
      if (!cell || !predicate_holds(p.op, *cell, rhs)) {
        all = false;
        break;
      }
    }
    if (all) matches.push_back(&rec);
  }

  bool truncated = matches.size() > policy.max_rows_per_query;
  uint64_t returned = truncated ? policy.max_rows_per_query
                                : static_cast<uint64_t>(matches.size());

  // reserve against the run budget atomically, then audit the outcome
  bool over_budget = false;
  {
    std::lock_guard<std::mutex> lock(policy.mutex_);
    if (policy.rows_used_ + returned > policy.total_row_budget) {
      over_budget = true;
    } else {
      policy.rows_used_ += returned;
    }
  }
  if (over_budget) {
    policy.append_audit(query_name, params_json, 0, "rejected");
    raise(ErrorCode::BudgetExceeded,
          "row budget exhausted (" + std::to_string(policy.total_row_budget) + ")");
  }

  // projection to whitelisted columns only
  std::vector<Column> cols;
  for (const std::string& name : tmpl.select) {
    TypeTag tag = TypeTag::Text;
    int idx = table.schema.index_of(name);
    if (idx >= 0) tag = table.schema.columns[idx].type;
    cols.push_back({name, tag});
  }
  Table out;
  out.schema = Schema(std::move(cols));
  for (uint64_t r = 0; r < returned; ++r) {
    const Value::Record& rec = *matches[r];
    Value::Record projected;
    for (const std::string& name : tmpl.select) {
      const Value* cell = nullptr;
      for (const Field& f : rec) {
        if (f.name == name) {
          cell = &f.value;
          break;
        }
      }
      projected.push_back({name, cell ? *cell : Value::null()});
    }
    out.rows.push_back(Value::record(std::move(projected)));
  }

  policy.append_audit(query_name, params_json, returned,
                      truncated ? "truncated" : "accepted");
  return out;
}

std::string render_for_prompt(const Table& table, uint64_t max_cells) {
  std::string out;
  for (size_t c = 0; c < table.schema.columns.size(); ++c) {
    if (c) out.push_back('|');
    out += table.schema.columns[c].name;
  }
  out.push_back('\n');

  uint64_t cells = 0;
  size_t emitted = 0;
  const uint64_t row_width = table.schema.columns.size();
  for (const Value& row : table.rows) {
    if (cells + row_width > max_cells) break;
    const Value::Record& rec = row.as_record();
    for (size_t c = 0; c < rec.size(); ++c) {
      if (c) out.push_back('|');
      out += render_scalar(rec[c].value);
    }
    out.push_back('\n');
    cells += row_width;
    ++emitted;
  }
  if (emitted < table.rows.size()) out += "… truncated\n";
  return out;
}

Value ConnectorModule::invoke(const Value& input, RunContext& ctx) {
  std::map<std::string, Value> params;
  for (const auto& [param, field] : binds_) {
    const Value* v = input.find(field);
    if (!v)
      raise(ErrorCode::BadParams,
            "connector bind needs input field \"" + field + "\"");
    params[param] = *v;
  }
  Table result = connector_execute(*policy_, query_, params, *side_table_);
  std::string rendered = render_for_prompt(result, max_cells_);

  Value::Record enriched;
  if (input.kind() == ValueKind::Record) enriched = input.as_record();
  else if (!input.is_null()) enriched.push_back({"value", input});
  enriched.push_back({"__context", Value::text(std::move(rendered))});
  return inner_->invoke(Value::record(std::move(enriched)), ctx);
}

}  // namespace curator
