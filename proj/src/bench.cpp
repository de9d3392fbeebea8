#include "curator/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "curator/csv.hpp"
#include "curator/value_json.hpp"

namespace curator {

using nlohmann::ordered_json;

double EvalResult::metric(const std::string& name) const {
  for (const auto& [key, value] : metrics) {
    if (key == name) return value;
  }
  raise(ErrorCode::InvalidArgument, "no metric named \"" + name + "\"");
}

ordered_json EvalResult::to_json() const {
  ordered_json metrics_json = ordered_json::object();
  for (const auto& [key, value] : metrics) metrics_json[key] = value;
  return {{"task", task},
          {"dataset", dataset_id},
          {"n_examples", n_examples},
          {"metrics", std::move(metrics_json)},
          {"ledger", ledger.to_json()}};
}

EvalResult EvalResult::from_json(const ordered_json& j) {
  EvalResult r;
  r.task = j.at("task").get<std::string>();
  r.dataset_id = j.at("dataset").get<std::string>();
  r.n_examples = j.at("n_examples").get<uint64_t>();
  for (auto it = j.at("metrics").begin(); it != j.at("metrics").end(); ++it) {
    r.metrics.emplace_back(it.key(), it.value().get<double>());
  }
  r.ledger = LedgerSnapshot::from_json(j.at("ledger"));
  return r;
}

namespace {

double f1_of(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

EvalResult eval_er(const std::vector<bool>& predictions, const std::vector<bool>& gold) {
  if (predictions.size() != gold.size())
    raise(ErrorCode::LengthMismatch,
          "predictions (" + std::to_string(predictions.size()) + ") and gold (" +
              std::to_string(gold.size()) + ") differ in length");
  if (predictions.empty()) raise(ErrorCode::LengthMismatch, "nothing to evaluate");

  uint64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] && gold[i]) ++tp;
    if (predictions[i] && !gold[i]) ++fp;
    if (!predictions[i] && gold[i]) ++fn;
  }
  double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;

  EvalResult r;
  r.task = "er";
  r.n_examples = predictions.size();
  r.metrics = {{"precision", precision}, {"recall", recall}, {"f1", f1_of(precision, recall)}};
  return r;
}

EvalResult eval_imputation(const std::vector<Value>& predicted,
                           const std::vector<Value>& gold) {
  if (predicted.size() != gold.size())
    raise(ErrorCode::LengthMismatch,
          "predicted (" + std::to_string(predicted.size()) + ") and gold (" +
              std::to_string(gold.size()) + ") differ in length");
  if (predicted.empty()) raise(ErrorCode::LengthMismatch, "nothing to evaluate");

  uint64_t correct = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (value_equal(predicted[i], gold[i], ComparatorSpec::normalized_text())) ++correct;
  }
  EvalResult r;
  r.task = "imputation";
  r.n_examples = predicted.size();
  r.metrics = {{"accuracy", static_cast<double>(correct) / predicted.size()}};
  return r;
}

EvalResult eval_ner(const std::vector<std::vector<std::string>>& predicted,
                    const std::vector<std::vector<std::string>>& gold) {
  if (predicted.size() != gold.size())
    raise(ErrorCode::LengthMismatch,
          "predicted (" + std::to_string(predicted.size()) + ") and gold (" +
              std::to_string(gold.size()) + ") differ in length");

  uint64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    std::set<std::string> pred, ref;
    for (const std::string& name : predicted[i]) pred.insert(normalize_text(name));
    for (const std::string& name : gold[i]) ref.insert(normalize_text(name));
    for (const std::string& name : pred) {
      if (ref.count(name)) ++tp;
      else ++fp;
    }
    for (const std::string& name : ref) {
      if (!pred.count(name)) ++fn;
    }
  }
  // vacuous agreement: no names anywhere is a perfect score
  double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 1.0;
  double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 1.0;
  double f1 = (tp + fp + fn) == 0 ? 1.0 : f1_of(precision, recall);

  EvalResult r;
  r.task = "ner";
  r.n_examples = predicted.size();
  r.metrics = {{"precision", precision}, {"recall", recall}, {"f1", f1}};
  return r;
}

// ---- reports -----------------------------------------------------------------

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string emit_report(const std::vector<EvalResult>& results, ReportFormat format) {
  if (format == ReportFormat::Json) {
    ordered_json arr = ordered_json::array();
    for (const EvalResult& r : results) arr.push_back(r.to_json());
    return arr.dump(2);
  }

  // metric columns in first-seen order across the result list
  std::vector<std::string> metric_names;
  for (const EvalResult& r : results) {
    for (const auto& [name, value] : r.metrics) {
      if (std::find(metric_names.begin(), metric_names.end(), name) == metric_names.end())
        metric_names.push_back(name);
    }
  }

  std::ostringstream out;
  out << "| Dataset |";
  for (const std::string& name : metric_names) out << " " << name << " |";
  out << " LLM Calls | Calls/Record |\n";
  out << "| --- |";
  for (size_t i = 0; i < metric_names.size(); ++i) out << " --- |";
  out << " --- | --- |\n";

  for (const EvalResult& r : results) {
    out << "| " << r.dataset_id << " |";
    for (const std::string& name : metric_names) {
      bool has = std::any_of(r.metrics.begin(), r.metrics.end(),
                             [&](const auto& m) { return m.first == name; });
      out << " " << (has ? fixed4(r.metric(name)) : "-") << " |";
    }
    double ratio = r.n_examples > 0
                       ? static_cast<double>(r.ledger.total.llm_calls) / r.n_examples
                       : 0.0;
    out << " " << r.ledger.total.llm_calls << " | " << fixed4(ratio) << " |\n";
  }
  return out.str();
}

std::vector<EvalResult> report_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    raise(ErrorCode::InvalidArgument, "malformed report JSON");
  std::vector<EvalResult> out;
  for (const auto& e : j) out.push_back(EvalResult::from_json(e));
  return out;
}

// ---- reference pipeline drivers ------------------------------------------------

namespace {

std::string dataset_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::vector<Value> output_column(const RunResult& result, const std::string& sink) {
  auto it = result.outputs.find(sink);
  if (it == result.outputs.end())
    raise(ErrorCode::InvalidArgument, "pipeline produced no output at node " + sink);
  const Table& table = *it->second.as_table();
  std::vector<Value> out;
  for (const Value& row : table.rows) {
    const Value::Record& rec = row.as_record();
    if (rec.empty()) raise(ErrorCode::InvalidArgument, "output table has no columns");
    out.push_back(rec[0].value);  // single-column result tables
  }
  return out;
}

BenchOutcome run_spec(const PipelineSpec& spec, const CustomRegistry& customs,
                      std::shared_ptr<LlmBackend> backend, const BenchOptions& options,
                      const std::string& task, std::vector<Value>& predictions_out) {
  CostLedger ledger;
  RunContext ctx{backend, &ledger, {}};
  PhysicalPlan plan = compile(spec, customs, backend, ledger);

  RunOptions run_options;
  run_options.mode = options.per_record ? RunMode::PerRecord : RunMode::Whole;
  run_options.seed = options.seed;
  run_options.clock_ms = [] { return 0.0; };  // bench timing lives outside reports

  RunResult run_result = run(plan, {}, run_options, ctx);
  predictions_out = output_column(run_result, plan.sinks().at(0));

  BenchOutcome outcome;
  outcome.result.task = task;
  outcome.result.dataset_id = dataset_stem(options.data);
  outcome.result.n_examples = predictions_out.size();
  outcome.result.ledger = ledger.snapshot();
  outcome.run_report = std::move(run_result.report);
  return outcome;
}

}  // namespace

std::vector<std::string> split_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::string norm = normalize_text(text);
  if (norm.empty() || norm == "none") return out;
  size_t start = 0;
  while (start <= norm.size()) {
    size_t at = norm.find(';', start);
    std::string piece =
        at == std::string::npos ? norm.substr(start) : norm.substr(start, at - start);
    std::string trimmed = normalize_text(piece);
    if (!trimmed.empty()) out.push_back(trimmed);
    if (at == std::string::npos) break;
    start = at + 1;
  }
  return out;
}

BenchOutcome bench_er(const TemplateRegistry& templates, const CustomRegistry& customs,
                      std::shared_ptr<LlmBackend> backend, const BenchOptions& options) {
  PipelineSpec spec = templates.instantiate(
      "entity_resolution",
      {{"data", Value::text(options.data)}, {"out", Value::text(options.out_csv)}});

  std::vector<Value> predictions;
  BenchOutcome outcome = run_spec(spec, customs, backend, options, "er", predictions);

  Table gold_table = load_csv(options.gold, Schema({{"label", TypeTag::Int}}));
  std::vector<bool> gold, predicted;
  for (const Value& row : gold_table.rows) {
    gold.push_back(row.as_record()[0].value.as_int() != 0);
  }
  for (const Value& p : predictions) {
    predicted.push_back(normalize_text(p.is_null() ? "" : p.as_text()) == "yes");
  }

  EvalResult scored = eval_er(predicted, gold);
  scored.dataset_id = outcome.result.dataset_id;
  scored.ledger = outcome.result.ledger;
  outcome.result = std::move(scored);
  return outcome;
}

BenchOutcome bench_imputation(const TemplateRegistry& templates,
                              const CustomRegistry& customs,
                              std::shared_ptr<LlmBackend> backend, const BenchOptions& options,
                              bool baseline) {
  PipelineSpec spec;
  if (baseline) {
    // pure-LLM variant: every record costs one call
    std::ostringstream source;
    source << "pipeline imputation_baseline {\n"
           << "  node load: load_csv(path=\"" << options.data << "\");\n"
           << "  node impute: impute(in=\"record\", out=\"text\") llm(prompt=\"Manufacturer "
              "of product: {name}. {description}. Answer with the brand name only.\", "
              "tag=\"impute_llm\");\n"
           << "  node save: save_csv(path=\"" << options.out_csv << "\");\n"
           << "  load -> impute -> save;\n}\n";
    spec = parse_pipeline(source.str());
  } else {
    spec = templates.instantiate(
        "data_imputation",
        {{"data", Value::text(options.data)}, {"out", Value::text(options.out_csv)}});
  }

  std::vector<Value> predictions;
  BenchOutcome outcome = run_spec(spec, customs, backend, options,
                                  baseline ? "imputation_baseline" : "imputation", predictions);

  Table gold_table = load_csv(options.gold, Schema({{"manufacturer", TypeTag::Text}}));
  std::vector<Value> gold;
  for (const Value& row : gold_table.rows) gold.push_back(row.as_record()[0].value);

  EvalResult scored = eval_imputation(predictions, gold);
  scored.task = outcome.result.task;
  scored.dataset_id = outcome.result.dataset_id;
  scored.ledger = outcome.result.ledger;
  outcome.result = std::move(scored);
  return outcome;
}

BenchOutcome bench_ner(const TemplateRegistry& templates, const CustomRegistry& customs,
                       std::shared_ptr<LlmBackend> backend, const BenchOptions& options) {
  PipelineSpec spec = templates.instantiate(
      "name_extraction",
      {{"data", Value::text(options.data)}, {"out", Value::text(options.out_csv)}});

  std::vector<Value> predictions;
  BenchOutcome outcome = run_spec(spec, customs, backend, options, "ner", predictions);

  Table gold_table = load_csv(options.gold, Schema({{"names", TypeTag::Text}}));
  std::vector<std::vector<std::string>> gold, predicted;
  for (const Value& row : gold_table.rows) {
    const Value& cell = row.as_record()[0].value;
    gold.push_back(split_name_list(cell.is_null() ? "" : cell.as_text()));
  }
  for (const Value& p : predictions) {
    predicted.push_back(split_name_list(p.is_null() ? "" : p.as_text()));
  }

  EvalResult scored = eval_ner(predicted, gold);
  scored.dataset_id = outcome.result.dataset_id;
  scored.ledger = outcome.result.ledger;
  outcome.result = std::move(scored);
  return outcome;
}

}  // namespace curator
