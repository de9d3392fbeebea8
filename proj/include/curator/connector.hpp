#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "curator/module.hpp"

namespace curator {

struct QueryPredicate {
  std::string column;
  std::string op;                     // eq | lt | le | gt | ge
  std::optional<std::string> param;   // bound at execution
  std::optional<Value> constant;      // or fixed in the template
};

struct QueryTemplate {
  std::string name;
  std::vector<QueryPredicate> where;
  std::vector<std::string> select;  // projected columns, subset of the whitelist
};

struct AuditEntry {
  int64_t ts = 0;
  std::string query;
  nlohmann::ordered_json params;
  uint64_t rows = 0;
  std::string status;  // accepted | rejected | truncated
};

// The sole channel from local tables to prompts: pre-registered parameterized
// selections with caps, budgets and a complete audit trail.
class ConnectorPolicy {
 public:
  std::vector<std::string> column_whitelist;
  std::map<std::string, QueryTemplate> queries;
  uint64_t max_rows_per_query = 50;
  uint64_t total_row_budget = 1000;
  std::optional<std::string> audit_path;      // JSON-lines sink
  std::function<int64_t()> clock;             // injectable for reproducible audits

  ConnectorPolicy() = default;
  ConnectorPolicy(ConnectorPolicy&& other) noexcept
      : column_whitelist(std::move(other.column_whitelist)),
        queries(std::move(other.queries)),
        max_rows_per_query(other.max_rows_per_query),
        total_row_budget(other.total_row_budget),
        audit_path(std::move(other.audit_path)),
        clock(std::move(other.clock)),
        rows_used_(other.rows_used_),
        audit_(std::move(other.audit_)) {}

  void check() const;
  static ConnectorPolicy from_json_text(const std::string& text);
  static ConnectorPolicy from_file(const std::string& path);

  uint64_t rows_used() const;
  std::vector<AuditEntry> audit_log() const;
  size_t audit_size() const;

  void append_audit(const std::string& query, const nlohmann::ordered_json& params,
                    uint64_t rows, const std::string& status);

 private:
  mutable std::mutex mutex_;
  uint64_t rows_used_ = 0;
  std::vector<AuditEntry> audit_;

  friend Table connector_execute(ConnectorPolicy&, const std::string&,
                                 const std::map<std::string, Value>&, const Table&);
};

// Executes a registered template over a local table. Every invocation,
// including rejected ones, appends one audit entry. Throws UnknownQuery /
// BadParams / BudgetExceeded.
Table connector_execute(ConnectorPolicy& policy, const std::string& query_name,
                        const std::map<std::string, Value>& params, const Table& table);

// Pipe-delimited header + rows, cut to max_cells data cells with an explicit
// truncation marker; deterministic.
std::string render_for_prompt(const Table& table, uint64_t max_cells);

// Wraps a module so each input is enriched with a "__context" text field
// holding rendered connector results; the inner prompt may reference it.
class ConnectorModule : public PhysicalModule {
 public:
  ConnectorModule(ModuleDescriptor descriptor, ModulePtr inner,
                  std::shared_ptr<ConnectorPolicy> policy, std::string query,
                  std::vector<std::pair<std::string, std::string>> binds,
                  std::shared_ptr<const Table> side_table, uint64_t max_cells)
      : PhysicalModule(std::move(descriptor)),
        inner_(std::move(inner)),
        policy_(std::move(policy)),
        query_(std::move(query)),
        binds_(std::move(binds)),
        side_table_(std::move(side_table)),
        max_cells_(max_cells) {}

  Value invoke(const Value& input, RunContext& ctx) override;
  std::string impl_kind() const override { return "connector"; }
  std::shared_ptr<PhysicalModule> inner() const override { return inner_; }
  const std::shared_ptr<ConnectorPolicy>& policy() const { return policy_; }

 private:
  ModulePtr inner_;
  std::shared_ptr<ConnectorPolicy> policy_;
  std::string query_;
  std::vector<std::pair<std::string, std::string>> binds_;  // param -> input field
  std::shared_ptr<const Table> side_table_;
  uint64_t max_cells_ = 200;
};

}  // namespace curator
