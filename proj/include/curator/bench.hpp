#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "curator/compiler.hpp"
#include "curator/executor.hpp"

namespace curator {

struct EvalResult {
  std::string task;  // er | imputation | ner
  std::vector<std::pair<std::string, double>> metrics;  // kept ordered for reports
  LedgerSnapshot ledger;
  std::string dataset_id;
  uint64_t n_examples = 0;

  double metric(const std::string& name) const;
  nlohmann::ordered_json to_json() const;
  static EvalResult from_json(const nlohmann::ordered_json& j);
};

// precision / recall / F1 over the positive (match) class
EvalResult eval_er(const std::vector<bool>& predictions, const std::vector<bool>& gold);

// accuracy under text-normalized equality
EvalResult eval_imputation(const std::vector<Value>& predicted,
                           const std::vector<Value>& gold);

// micro-averaged set precision / recall / F1 over normalized names; two empty
// sets count as agreement
EvalResult eval_ner(const std::vector<std::vector<std::string>>& predicted,
                    const std::vector<std::vector<std::string>>& gold);

enum class ReportFormat { Json, Markdown };

// Markdown mirrors the benchmark-table layout: one row per dataset, metric
// columns, an LLM-calls column and a calls-per-record ratio.
std::string emit_report(const std::vector<EvalResult>& results, ReportFormat format);
std::vector<EvalResult> report_from_json_text(const std::string& text);

// ---- reference pipelines ----------------------------------------------------

struct BenchOptions {
  std::string data;       // input CSV
  std::string gold;       // gold CSV
  std::string out_csv;    // where the pipeline writes its output table
  uint64_t seed = 0;
  bool per_record = true;
};

struct BenchOutcome {
  EvalResult result;
  RunReport run_report;
};

BenchOutcome bench_er(const TemplateRegistry& templates, const CustomRegistry& customs,
                      std::shared_ptr<LlmBackend> backend, const BenchOptions& options);

// set baseline=true for the pure-LLM variant used in call-ratio comparisons
BenchOutcome bench_imputation(const TemplateRegistry& templates,
                              const CustomRegistry& customs,
                              std::shared_ptr<LlmBackend> backend, const BenchOptions& options,
                              bool baseline = false);

BenchOutcome bench_ner(const TemplateRegistry& templates, const CustomRegistry& customs,
                       std::shared_ptr<LlmBackend> backend, const BenchOptions& options);

// "a; b; c" -> normalized name set entries
std::vector<std::string> split_name_list(const std::string& text);

}  // namespace curator
