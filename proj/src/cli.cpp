#include "curator/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "curator/bench.hpp"
#include "curator/csv.hpp"
#include "curator/validator.hpp"
#include "curator/value_json.hpp"

namespace curator {

namespace {

constexpr const char* kUsage =
    R"(usage: curator <command> [options]

commands:
  run <pipeline.lm>       parse, validate, compile and run a pipeline
      --data NODE=FILE    bind a CSV table to a source node (repeatable)
      --backend SEL       mock:<script.json> | http:<config.json> |
                          cached:<cache.jsonl>+<selector>
      --report FILE       write the run report JSON
      --seed N            fixed seed; also makes report timings reproducible
      --skip-errors       record per-record failures instead of aborting
      --whole             run in whole mode (default is per-record)
  compile <pipeline.lm>   compile only
      --explain           print the physical plan
      --backend SEL
  validate <pipeline.lm>  run validator decorations and print reports
      --backend SEL, --node ID, --seed N
  bench <er|imputation|ner>
      --pairs FILE        ER pair table (er)
      --data FILE         input CSV (imputation, ner)
      --gold FILE         gold CSV
      --backend SEL, --report FILE, --format json|markdown,
      --out FILE          pipeline output CSV (default bench_out.csv)
      --baseline          imputation only: pure-LLM variant for call ratios
      --seed N
  templates list
  templates show <name>

exit codes: 0 ok, 1 parse/validate/compile failure, 2 runtime failure
config: ./curation.toml may set backend, templates_dir, report and seed
)";

struct CliConfig {
  std::string backend_selector;
  std::string templates_dir = "templates";
  std::string report_path;
  uint64_t seed = 0;
  bool seed_set = false;
};

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// minimal key = value file; quoted strings allowed, # comments
CliConfig load_config_file(const std::string& path) {
  CliConfig config;
  std::ifstream in(path);
  if (!in) return config;
  std::string line;
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key == "backend") config.backend_selector = value;
    else if (key == "templates_dir") config.templates_dir = value;
    else if (key == "report") config.report_path = value;
    else if (key == "seed") {
      config.seed = std::stoull(value);
      config.seed_set = true;
    }
  }
  return config;
}

struct Args {
  std::vector<std::string> positional;
  std::map<std::string, std::vector<std::string>> options;
  std::vector<std::string> flags;

  bool has_flag(const std::string& name) const {
    return std::find(flags.begin(), flags.end(), name) != flags.end();
  }
  std::optional<std::string> option(const std::string& name) const {
    auto it = options.find(name);
    if (it == options.end() || it->second.empty()) return std::nullopt;
    return it->second.back();
  }
};

const std::vector<std::string> kValueOptions = {"--data",   "--backend", "--report",
                                                "--seed",   "--node",    "--pairs",
                                                "--gold",   "--format",  "--out"};
const std::vector<std::string> kFlagOptions = {"--skip-errors", "--whole", "--explain",
                                               "--baseline"};

Args parse_args(const std::vector<std::string>& argv, std::ostream& err, bool& ok) {
  Args args;
  ok = true;
  for (size_t i = 0; i < argv.size(); ++i) {
    const std::string& a = argv[i];
    if (a.rfind("--", 0) != 0) {
      args.positional.push_back(a);
      continue;
    }
    if (std::find(kFlagOptions.begin(), kFlagOptions.end(), a) != kFlagOptions.end()) {
      args.flags.push_back(a);
      continue;
    }
    if (std::find(kValueOptions.begin(), kValueOptions.end(), a) != kValueOptions.end()) {
      if (i + 1 >= argv.size()) {
        err << "error: " << a << " needs a value\n";
        ok = false;
        return args;
      }
      args.options[a].push_back(argv[++i]);
      continue;
    }
    err << "error: unknown option " << a << "\n";
    ok = false;
    return args;
  }
  return args;
}

void print_error(std::ostream& err, const Error& e) {
  err << "error [" << error_code_name(e.code()) << "]";
  if (e.loc()) err << " at line " << e.loc()->line << ", col " << e.loc()->col;
  err << ": " << e.what() << "\n";
}

int runtime_exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::ScriptParseError:
    case ErrorCode::UnknownCustomModule:
    case ErrorCode::UnresolvedParam:
    case ErrorCode::UnknownTemplate:
    case ErrorCode::MissingParam:
    case ErrorCode::GenerationFailed:
    case ErrorCode::InvalidArgument:
    case ErrorCode::IoError:
    case ErrorCode::SchemaMismatch:
      return 1;
    default:
      return 2;
  }
}

struct Session {
  CliConfig config;
  std::shared_ptr<LlmBackend> backend;
  CustomRegistry customs = builtin_customs();
  TemplateRegistry templates = TemplateRegistry::with_builtins();
};

Session make_session(const Args& args) {
  Session session;
  session.config = load_config_file("curation.toml");
  if (auto backend = args.option("--backend")) session.config.backend_selector = *backend;
  if (auto report = args.option("--report")) session.config.report_path = *report;
  if (auto seed = args.option("--seed")) {
    session.config.seed = std::stoull(*seed);
    session.config.seed_set = true;
  }
  if (!session.config.backend_selector.empty())
    session.backend = make_backend(session.config.backend_selector);
  session.templates.load_directory(session.config.templates_dir);
  return session;
}

std::string read_pipeline_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read pipeline file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string describe_module(const ModulePtr& module) {
  std::string out = module->impl_kind();
  for (ModulePtr m = module->inner(); m; m = m->inner()) {
    out += " -> " + m->impl_kind();
  }
  return out;
}

void explain_plan(const PhysicalPlan& plan, std::ostream& out) {
  out << "pipeline " << plan.spec.name << " (" << plan.order.size() << " nodes)\n";
  for (const auto& [id, module] : plan.order) {
    const NodeSpec* node = plan.spec.find_node(id);
    out << "  " << id << ": " << (node ? node->op : "?") << " [" << describe_module(module)
        << "]  in=" << shape_name(module->descriptor().input_shape)
        << " out=" << shape_name(module->descriptor().output_shape) << "\n";
  }
  for (const EdgeSpec& e : plan.edges) {
    out << "  " << e.from << " -> " << e.to << "\n";
  }
}

void write_report_file(const std::string& path, const nlohmann::ordered_json& report,
                       std::ostream& err) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    err << "warning: cannot write report to " << path << "\n";
    return;
  }
  out << report.dump(2) << "\n";
}

int cmd_run(const Args& args, std::ostream& out, std::ostream& err) {
  if (args.positional.size() < 2) {
    err << "error: run needs a pipeline file\n";
    return 1;
  }
  Session session;
  PhysicalPlan plan;
  CostLedger ledger;
  std::map<std::string, Value> inputs;
  try {
    session = make_session(args);
    PipelineSpec spec = parse_pipeline(read_pipeline_file(args.positional[1]));
    std::vector<Diagnostic> diags = validate_graph(spec);
    if (!diags.empty()) {
      for (const Diagnostic& d : diags) {
        err << "diagnostic [" << d.code << "] at " << d.node << ": " << d.message << "\n";
      }
      return 1;
    }
    plan = compile(spec, session.customs, session.backend, ledger);

    auto it = args.options.find("--data");
    if (it != args.options.end()) {
      for (const std::string& binding : it->second) {
        size_t eq = binding.find('=');
        if (eq == std::string::npos)
          raise(ErrorCode::InvalidArgument, "--data expects NODE=FILE, got " + binding);
        std::string node = binding.substr(0, eq);
        if (!plan.find(node))
          raise(ErrorCode::InvalidArgument, "--data names unknown node \"" + node + "\"");
        inputs[node] =
            Value::table(std::make_shared<Table>(load_csv_infer(binding.substr(eq + 1))));
      }
    }
  } catch (const Error& e) {
    print_error(err, e);
    return 1;
  }

  try {
    RunOptions options;
    options.mode = args.has_flag("--whole") ? RunMode::Whole : RunMode::PerRecord;
    options.skip_errors = args.has_flag("--skip-errors");
    options.seed = session.config.seed;
    if (session.config.seed_set) options.clock_ms = [] { return 0.0; };

    RunContext ctx{session.backend, &ledger, {}};
    RunResult result = run(plan, inputs, options, ctx);

    for (const auto& [sink, value] : result.outputs) {
      if (value.kind() == ValueKind::TableRef) {
        out << sink << ": table with " << value.as_table()->rows.size() << " row(s)\n";
      } else {
        out << sink << ": " << value_to_json_text(value) << "\n";
      }
    }
    const LedgerCounters& totals = result.report.ledger_final.total;
    out << "llm_calls=" << totals.llm_calls << " cache_hits=" << totals.cache_hits
        << " simulated_calls=" << totals.simulated_calls << "\n";
    write_report_file(session.config.report_path, result.report.to_json(), err);
    return 0;
  } catch (const Error& e) {
    print_error(err, e);
    return runtime_exit_code(e);
  }
}

int cmd_compile(const Args& args, std::ostream& out, std::ostream& err) {
  if (args.positional.size() < 2) {
    err << "error: compile needs a pipeline file\n";
    return 1;
  }
  try {
    Session session = make_session(args);
    CostLedger ledger;
    PipelineSpec spec = parse_pipeline(read_pipeline_file(args.positional[1]));
    std::vector<Diagnostic> diags = validate_graph(spec);
    if (!diags.empty()) {
      for (const Diagnostic& d : diags) {
        err << "diagnostic [" << d.code << "] at " << d.node << ": " << d.message << "\n";
      }
      return 1;
    }
    PhysicalPlan plan = compile(spec, session.customs, session.backend, ledger);
    explain_plan(plan, out);  // --explain is the default behavior as well
    return 0;
  } catch (const Error& e) {
    print_error(err, e);
    return 1;
  }
}

int cmd_validate(const Args& args, std::ostream& out, std::ostream& err) {
  if (args.positional.size() < 2) {
    err << "error: validate needs a pipeline file\n";
    return 1;
  }
  PhysicalPlan plan;
  Session session;
  CostLedger ledger;
  try {
    session = make_session(args);
    PipelineSpec spec = parse_pipeline(read_pipeline_file(args.positional[1]));
    plan = compile(spec, session.customs, session.backend, ledger);
  } catch (const Error& e) {
    print_error(err, e);
    return 1;
  }

  std::optional<std::string> only = args.option("--node");
  bool all_passed = true;
  bool any = false;
  try {
    RunContext ctx{session.backend, &ledger, {}};
    for (auto& [id, module] : plan.order) {
      if (only && *only != id) continue;
      // find a validator wrapper anywhere in the decoration chain
      ModulePtr walker = module;
      std::shared_ptr<ValidatorModule> validator;
      while (walker) {
        validator = std::dynamic_pointer_cast<ValidatorModule>(walker);
        if (validator) break;
        walker = walker->inner();
      }
      if (!validator) continue;
      any = true;
      auto [repaired, report] = validate_and_repair(validator->inner(), validator->config(), ctx);
      validator->set_inner(repaired);
      out << "node " << id << ": " << (report.passed ? "passed" : "failed")
          << " rounds_used=" << report.rounds_used
          << " regenerations_used=" << report.regenerations_used << "\n";
      out << report.to_json().dump(2) << "\n";
      all_passed = all_passed && report.passed;
    }
  } catch (const Error& e) {
    print_error(err, e);
    return runtime_exit_code(e);
  }
  if (!any) out << "no validator decorations" << (only ? " on node " + *only : "") << "\n";
  return all_passed ? 0 : 1;
}

int cmd_bench(const Args& args, std::ostream& out, std::ostream& err) {
  if (args.positional.size() < 2) {
    err << "error: bench needs a task (er | imputation | ner)\n";
    return 1;
  }
  std::string task = args.positional[1];
  try {
    Session session = make_session(args);
    BenchOptions options;
    options.data = args.option("--pairs").value_or(args.option("--data").value_or(""));
    options.gold = args.option("--gold").value_or("");
    options.out_csv = args.option("--out").value_or("bench_out.csv");
    options.seed = session.config.seed;
    if (options.data.empty() || options.gold.empty()) {
      err << "error: bench needs --" << (task == "er" ? "pairs" : "data")
          << " and --gold\n";
      return 1;
    }

    std::vector<EvalResult> results;
    if (task == "er") {
      results.push_back(
          bench_er(session.templates, session.customs, session.backend, options).result);
    } else if (task == "imputation") {
      results.push_back(
          bench_imputation(session.templates, session.customs, session.backend, options)
              .result);
      if (args.has_flag("--baseline")) {
        results.push_back(bench_imputation(session.templates, session.customs,
                                           session.backend, options, /*baseline=*/true)
                              .result);
      }
    } else if (task == "ner") {
      results.push_back(
          bench_ner(session.templates, session.customs, session.backend, options).result);
    } else {
      err << "error: unknown bench task \"" << task << "\"\n";
      return 1;
    }

    std::string format = args.option("--format").value_or("markdown");
    out << emit_report(results,
                       format == "json" ? ReportFormat::Json : ReportFormat::Markdown);
    if (!session.config.report_path.empty()) {
      std::ofstream report_out(session.config.report_path, std::ios::binary);
      if (report_out) report_out << emit_report(results, ReportFormat::Json) << "\n";
    }
    return 0;
  } catch (const Error& e) {
    print_error(err, e);
    return runtime_exit_code(e);
  }
}

int cmd_templates(const Args& args, std::ostream& out, std::ostream& err) {
  if (args.positional.size() < 2) {
    err << "error: templates needs list or show\n";
    return 1;
  }
  try {
    Session session = make_session(args);
    if (args.positional[1] == "list") {
      for (const TemplateInfo& t : session.templates.list()) {
        out << t.name << " - " << t.description << "\n";
      }
      return 0;
    }
    if (args.positional[1] == "show") {
      if (args.positional.size() < 3) {
        err << "error: templates show needs a name\n";
        return 1;
      }
      const TemplateInfo* info = session.templates.find(args.positional[2]);
      if (!info) {
        err << "error: unknown template \"" << args.positional[2] << "\"\n";
        return 1;
      }
      out << info->body;
      return 0;
    }
    err << "error: unknown templates subcommand \"" << args.positional[1] << "\"\n";
    return 1;
  } catch (const Error& e) {
    print_error(err, e);
    return 1;
  }
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  bool ok = false;
  Args parsed = parse_args(args, err, ok);
  if (!ok) return 1;
  if (parsed.positional.empty()) {
    out << kUsage;
    return parsed.flags.empty() && parsed.options.empty() ? 0 : 1;
  }
  const std::string& command = parsed.positional[0];
  if (command == "run") return cmd_run(parsed, out, err);
  if (command == "compile") return cmd_compile(parsed, out, err);
  if (command == "validate") return cmd_validate(parsed, out, err);
  if (command == "bench") return cmd_bench(parsed, out, err);
  if (command == "templates") return cmd_templates(parsed, out, err);
  if (command == "help" || command == "--help") {
    out << kUsage;
    return 0;
  }
  err << "error: unknown command \"" << command << "\"\n";
  out << kUsage;
  return 1;
}

}  // namespace curator
