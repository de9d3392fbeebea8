#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "curator/compiler.hpp"

namespace curator {

enum class RunMode { Whole, PerRecord };

struct RunOptions {
  RunMode mode = RunMode::PerRecord;
  bool skip_errors = false;  // downgrade per-record failures to report entries
  uint64_t seed = 0;
  std::string run_id;                 // derived from the seed when empty
  std::function<double()> clock_ms;   // null = wall clock; inject for reproducible reports
};

struct NodeStats {
  std::string node;
  uint64_t records = 0;  // invocations (rows for streamed nodes)
  uint64_t errors = 0;
  double wall_ms = 0.0;
  LedgerSnapshot ledger_delta;
};

struct RunError {
  std::string node;
  int64_t record = -1;  // -1 for whole-value invocations
  std::string message;
};

struct RunReport {
  std::string run_id;
  std::string backend_kind;
  uint64_t seed = 0;
  std::vector<NodeStats> nodes;       // plan order; deltas sum to final - initial
  std::vector<RunError> errors;
  LedgerSnapshot ledger_initial;
  LedgerSnapshot ledger_final;

  nlohmann::ordered_json to_json() const;
};

struct RunResult {
  std::map<std::string, Value> outputs;  // sink node -> value
  RunReport report;
};

// Runs a compiled plan. Whole mode invokes each module once on its joined
// inputs; per-record mode streams tables row-by-row through record-shaped
// nodes and reassembles tables in input order. Module errors abort with node
// id and record index unless skip_errors is set.
RunResult run(PhysicalPlan& plan, const std::map<std::string, Value>& inputs,
              const RunOptions& options, RunContext& ctx);

// Row list -> Table: field names in first-seen order, column types from the
// first non-null cell, everything else rendered to text.
Table reassemble_rows(const std::vector<Value>& rows);

}  // namespace curator
