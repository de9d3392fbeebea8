#include "curator/compiler.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "curator/connector.hpp"
#include "curator/csv.hpp"
#include "curator/simulator.hpp"
#include "curator/validator.hpp"
#include "curator/value_json.hpp"

namespace curator {

ModulePtr PhysicalPlan::find(const std::string& node_id) const {
  for (const auto& [id, module] : order) {
    if (id == node_id) return module;
  }
  return nullptr;
}

std::vector<std::string> PhysicalPlan::sources() const {
  std::vector<std::string> out;
  for (const auto& [id, module] : order) {
    bool incoming = std::any_of(edges.begin(), edges.end(),
                                [&](const EdgeSpec& e) { return e.to == id; });
    if (!incoming) out.push_back(id);
  }
  return out;
}

std::vector<std::string> PhysicalPlan::sinks() const {
  std::vector<std::string> out;
  for (const auto& [id, module] : order) {
    bool outgoing = std::any_of(edges.begin(), edges.end(),
                                [&](const EdgeSpec& e) { return e.from == id; });
    if (!outgoing) out.push_back(id);
  }
  return out;
}

// ---- code extraction ---------------------------------------------------------

std::string extract_code_block(const std::string& response) {
  size_t open = response.find("```");
  if (open == std::string::npos) {
    // whole response, trimmed
    size_t b = response.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = response.find_last_not_of(" \t\r\n");
    return response.substr(b, e - b + 1);
  }
  size_t body = response.find('\n', open + 3);  // skip the ```lang line
  if (body == std::string::npos) return "";
  ++body;
  size_t close = response.find("```", body);
  if (close == std::string::npos) close = response.size();
  return response.substr(body, close - body);
}

// ---- tool registry -------------------------------------------------------------

std::shared_ptr<script::ToolRegistry> build_tool_registry(
    const std::vector<std::string>& tool_names, const CustomRegistry& customs,
    std::shared_ptr<LlmBackend> backend, const std::string& tag) {
  auto registry = std::make_shared<script::ToolRegistry>();
  for (const std::string& name : tool_names) {
    if (name == "llm") {
      registry->add("llm", {[backend, tag](const std::vector<Value>& args,
                                           script::ToolCallContext& ctx) {
                              if (args.size() != 1 || args[0].kind() != ValueKind::Text)
                                raise(ErrorCode::InvalidArgument,
                                      "llm tool expects one text prompt");
                              if (!backend)
                                raise(ErrorCode::BackendUnavailable, "no backend configured");
                              LlmRequest request = LlmRequest::prompt(
                                  "You answer data curation questions with a short answer "
                                  "and nothing else.",
                                  args[0].as_text(), tag);
                              return Value::text(
                                  backend->complete(request, *ctx.ledger).text);
                            },
                            Shape::Text, Shape::Text});
      continue;
    }
    if (name == "calc") {
      registry->add("calc", {[](const std::vector<Value>& args, script::ToolCallContext&) {
                               if (args.size() != 1 || args[0].kind() != ValueKind::Text)
                                 raise(ErrorCode::InvalidArgument,
                                       "calc tool expects one text expression");
                               auto program =
                                   script::parse_script("return " + args[0].as_text() + ";");
                               script::ToolRegistry empty;
                               script::Limits tight{10'000, 10'000, 1'000};
                               CostLedger scratch;
                               return script::eval(*program, Value::null(), empty, tight,
                                                   scratch);
                             },
                             Shape::Text, Shape::Scalar});
      continue;
    }
    const CustomEntry* entry = customs.find(name);
    if (!entry) raise(ErrorCode::UnknownTool, "unknown tool: " + name);
    CustomEntry copy = *entry;
    registry->add(name, {[copy, backend](const std::vector<Value>& args,
                                         script::ToolCallContext& ctx) {
                           if (args.size() != 1)
                             raise(ErrorCode::InvalidArgument,
                                   "module tools take exactly one argument");
                           RunContext rc{backend, ctx.ledger, {}};
                           return copy.fn(args[0], Value::record({}), rc);
                         },
                         entry->input_shape, entry->output_shape});
  }
  return registry;
}

// ---- llmgc generation ------------------------------------------------------------

namespace {

std::string render_examples(const std::vector<TestCase>& examples) {
  if (examples.empty()) return "";
  std::string out = "Examples:\n";
  for (const TestCase& tc : examples) {
    out += "  input: " + value_to_json_text(tc.input) +
           "  ->  expected: " + value_to_json_text(tc.expected) + "\n";
  }
  return out;
}

}  // namespace

std::shared_ptr<const script::Script> llmgc_generate(
    const std::string& task, const std::vector<TestCase>& examples,
    const script::ToolRegistry& tools, LlmBackend& backend, CostLedger& ledger,
    int max_attempts, const std::string& tag, const std::string& instructions,
    const std::string& snippets) {
  if (max_attempts < 1) raise(ErrorCode::InvalidArgument, "max_attempts must be >= 1");

  std::string prompt =
      "Write a script that implements the task below. The script language is:\n\n" +
      script::language_reference() + "\n\n";
  std::string signatures = tools.signatures();
  if (!signatures.empty()) prompt += "Available tools:\n" + signatures + "\n";
  prompt += "Task: " + task + "\n";
  if (!instructions.empty()) prompt += "Instructions: " + instructions + "\n";
  if (!snippets.empty()) prompt += "Reference snippets:\n" + snippets + "\n";
  prompt += render_examples(examples);

  std::string attempt_prompt = prompt;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    LlmRequest request = LlmRequest::prompt("You write small data curation scripts.",
                                            attempt_prompt, tag);
    LlmResponse response = backend.complete(request, ledger);
    std::string code = extract_code_block(response.text);
    try {
      return script::parse_script(code);
    } catch (const Error& err) {
      last_error = err.what();
      if (err.loc())
        last_error = "line " + std::to_string(err.loc()->line) + ", col " +
                     std::to_string(err.loc()->col) + ": " + last_error;
      attempt_prompt = prompt + "\nYour previous script failed to parse (" + last_error +
                       "):\n```\n" + code + "\n```\nReturn a corrected script.";
    }
  }
  raise(ErrorCode::GenerationFailed,
        "generation failed after " + std::to_string(max_attempts) +
            " attempt(s); last parse error: " + last_error);
}

// ---- compilation -------------------------------------------------------------------

namespace {

class ParamResolver {
 public:
  explicit ParamResolver(const PipelineSpec& spec) : spec_(spec) {}

  Value resolve(const ArgValue& arg) const {
    switch (arg.kind) {
      case ArgValue::Kind::Literal:
        return arg.literal;
      case ArgValue::Kind::ParamRef: {
        const Value* v = spec_.find_param(arg.param);
        if (!v) raise(ErrorCode::UnresolvedParam, "unresolved parameter ${" + arg.param + "}");
        return *v;
      }
      case ArgValue::Kind::List: {
        Value::List items;
        for (const ArgValue& item : arg.items) items.push_back(resolve(item));
        return Value::list(std::move(items));
      }
    }
    return Value::null();
  }

  Value resolve_args(const ArgList& args) const {
    Value::Record fields;
    for (const Arg& a : args) fields.push_back({a.name, resolve(a.value)});
    return Value::record(std::move(fields));
  }

 private:
  const PipelineSpec& spec_;
};

std::string text_or(const Value& config, const std::string& key, const std::string& fallback) {
  const Value* v = config.find(key);
  if (!v || v->is_null()) return fallback;
  return v->kind() == ValueKind::Text ? v->as_text() : render_scalar(*v);
}

int64_t int_or(const Value& config, const std::string& key, int64_t fallback) {
  const Value* v = config.find(key);
  if (!v || v->is_null()) return fallback;
  if (v->kind() == ValueKind::Int) return v->as_int();
  raise(ErrorCode::InvalidArgument, "argument " + key + " must be an int");
}

double float_or(const Value& config, const std::string& key, double fallback) {
  const Value* v = config.find(key);
  if (!v || v->is_null()) return fallback;
  return v->as_float();
}

Value merge_config(const Value& base, const Value& extra) {
  Value::Record fields = base.as_record();
  for (const Field& f : extra.as_record()) {
    bool replaced = false;
    for (Field& existing : fields) {
      if (existing.name == f.name) {
        existing.value = f.value;
        replaced = true;
        break;
      }
    }
    if (!replaced) fields.push_back(f);
  }
  return Value::record(std::move(fields));
}

std::vector<TestCase> load_cases_arg(const Value& config, const std::string& key) {
  const Value* v = config.find(key);
  if (!v || v->is_null()) return {};
  std::string path = v->as_text();
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read test cases: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return test_cases_from_json_text(buf.str());
}

Value probe_for_shape(Shape shape) {
  switch (shape) {
    case Shape::Text: return Value::text("");
    case Shape::Scalar: return Value::text("");
    case Shape::Record: return Value::record({{"probe", Value::text("")}});
    case Shape::List: return Value::list({});
    case Shape::Table: {
      auto t = std::make_shared<Table>();
      t->schema = Schema({{"probe", TypeTag::Text}});
      return Value::table(std::move(t));
    }
    default: return Value::null();
  }
}

std::vector<std::string> topological_order(const PipelineSpec& spec) {
  std::unordered_map<std::string, int> indegree;
  for (const NodeSpec& n : spec.nodes) indegree[n.id] = 0;
  for (const EdgeSpec& e : spec.edges) indegree[e.to] += 1;

  std::vector<std::string> order;
  std::vector<std::string> ready;
  // declaration order among ready nodes keeps compilation deterministic
  for (const NodeSpec& n : spec.nodes) {
    if (indegree[n.id] == 0) ready.push_back(n.id);
  }
  while (!ready.empty()) {
    std::string id = ready.front();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const NodeSpec& n : spec.nodes) {
      bool became_ready = false;
      for (const EdgeSpec& e : spec.edges) {
        if (e.from == id && e.to == n.id) {
          if (--indegree[n.id] == 0) became_ready = true;
        }
      }
      if (became_ready) ready.push_back(n.id);
    }
  }
  return order;
}

}  // namespace

PhysicalPlan compile(const PipelineSpec& spec, const CustomRegistry& customs,
                     std::shared_ptr<LlmBackend> backend, CostLedger& ledger) {
  std::vector<Diagnostic> diags = validate_graph(spec);
  if (!diags.empty()) {
    raise(ErrorCode::InvalidArgument,
          "pipeline graph invalid: " + diags[0].code + " at " + diags[0].node + ": " +
              diags[0].message);
  }

  ParamResolver resolver(spec);
  PhysicalPlan plan;
  plan.spec = spec;
  plan.edges = spec.edges;

  std::unordered_map<std::string, ModulePtr> built;
  for (const NodeSpec& node : spec.nodes) {
    Value op_config = resolver.resolve_args(node.op_args);
    ModuleKind kind = node.binding ? node.binding->kind : ModuleKind::Custom;
    Value binding_config =
        node.binding ? resolver.resolve_args(node.binding->args) : Value::record({});
    Value config = merge_config(op_config, binding_config);

    ModuleDescriptor descriptor;
    descriptor.id = node.id;
    descriptor.kind = kind;
    descriptor.config = config;
    auto [in_shape, out_shape] = node_declared_shapes(node);
    descriptor.input_shape = in_shape;
    descriptor.output_shape = out_shape;

    std::string tag = text_or(config, "tag", node.id);
    ModulePtr module;

    switch (kind) {
      case ModuleKind::Custom: {
        std::string impl_name = text_or(config, "name", node.op);
        const CustomEntry* entry = customs.find(impl_name);
        if (!entry)
          raise(ErrorCode::UnknownCustomModule, "unknown custom module \"" + impl_name +
                                                    "\" at node " + node.id);
        if (descriptor.input_shape == Shape::Any) descriptor.input_shape = entry->input_shape;
        if (descriptor.output_shape == Shape::Any)
          descriptor.output_shape = entry->output_shape;
        auto custom = std::make_shared<CustomModule>(descriptor, *entry);
        if (entry->pure) {
          // compile-time smoke call: every plan module must behave as f(Value)->Value
          RunContext probe_ctx{backend, &ledger, {}};
          custom->invoke(probe_for_shape(descriptor.input_shape), probe_ctx);
        }
        module = std::move(custom);
        break;
      }
      case ModuleKind::Llm: {
        std::string prompt = text_or(config, "prompt", "");
        if (prompt.empty())
          raise(ErrorCode::InvalidArgument, "llm binding needs prompt=... at node " + node.id);
        OutputRule rule = OutputRule::parse(text_or(config, "validate", "none"));
        std::string system = text_or(config, "system",
                                     "You are a careful data curation assistant. Answer "
                                     "with only what is asked, no explanations.");
        if (descriptor.output_shape == Shape::Any) descriptor.output_shape = Shape::Text;
        module = std::make_shared<LlmModule>(descriptor, prompt, system, rule, tag);
        break;
      }
      case ModuleKind::Llmgc: {
        if (!backend)
          raise(ErrorCode::BackendUnavailable,
                "llmgc binding needs a backend at node " + node.id);
        std::string task = text_or(config, "task", "");
        if (task.empty())
          raise(ErrorCode::InvalidArgument, "llmgc binding needs task=... at node " + node.id);
        std::vector<std::string> tool_names;
        if (const Value* tools_arg = config.find("tools");
            tools_arg && tools_arg->kind() == ValueKind::List) {
          for (const Value& t : tools_arg->as_list()) tool_names.push_back(t.as_text());
        }
        auto tools = build_tool_registry(tool_names, customs, backend, tag);
        std::vector<TestCase> examples = load_cases_arg(config, "examples");
        int attempts = static_cast<int>(int_or(config, "attempts", 3));
        auto program = llmgc_generate(task, examples, *tools, *backend, ledger, attempts,
                                      tag, text_or(config, "instructions", ""),
                                      text_or(config, "snippets", ""));
        module = std::make_shared<ScriptModule>(descriptor, program, tools,
                                                script::Limits{}, tag);
        break;
      }
      case ModuleKind::Decorated:
        raise(ErrorCode::InvalidArgument, "decorated is not a bindable kind");
    }

    // decorations wrap innermost-first, in declaration order
    for (const Decoration& deco : node.decorations) {
      Value deco_config = resolver.resolve_args(deco.args);
      ModuleDescriptor wrapper;
      wrapper.id = node.id;
      wrapper.kind = ModuleKind::Decorated;
      wrapper.config = deco_config;
      wrapper.input_shape = module->descriptor().input_shape;
      wrapper.output_shape = module->descriptor().output_shape;
      wrapper.inner = std::make_shared<ModuleDescriptor>(module->descriptor());

      int depth = 1;
      for (const ModuleDescriptor* d = wrapper.inner.get(); d; d = d->inner.get()) ++depth;
      if (depth > kMaxDecorationDepth)
        raise(ErrorCode::InvalidArgument,
              "decorations nest deeper than " + std::to_string(kMaxDecorationDepth) +
                  " at node " + node.id);

      switch (deco.kind) {
        case DecorationKind::Validator: {
          ValidatorConfig vcfg;
          vcfg.cases = load_cases_arg(deco_config, "cases");
          vcfg.max_repair_rounds = static_cast<int>(int_or(deco_config, "rounds", 3));
          vcfg.max_regenerations = static_cast<int>(int_or(deco_config, "regens", 2));
          if (const Value* cap = deco_config.find("wall_clock_cap"); cap && !cap->is_null())
            vcfg.wall_clock_cap_seconds = cap->as_float();
          vcfg.check();
          module = std::make_shared<ValidatorModule>(wrapper, module, std::move(vcfg));
          break;
        }
        case DecorationKind::Simulator: {
          SimulatorConfig scfg;
          std::string learner = text_or(deco_config, "learner", "memo");
          if (learner == "memo") {
            scfg.learner = SimulatorConfig::Learner::Memo;
          } else if (learner == "logreg" || learner == "hashed_logreg") {
            scfg.learner = SimulatorConfig::Learner::HashedLogreg;
          } else {
            raise(ErrorCode::InvalidArgument, "unknown learner \"" + learner + "\"");
          }
          scfg.shadow_window = static_cast<int>(int_or(deco_config, "window", 200));
          scfg.agreement_threshold = float_or(deco_config, "tau", 0.95);
          scfg.confidence_gate = float_or(deco_config, "gamma", 0.3);
          if (const Value* labels = deco_config.find("labels");
              labels && labels->kind() == ValueKind::List)
            scfg.label_space = labels->as_list();
          scfg.check();
          module = std::make_shared<SimulatorModule>(wrapper, module, std::move(scfg), tag);
          break;
        }
        case DecorationKind::Connector: {
          std::string policy_path = text_or(deco_config, "policy", "");
          if (policy_path.empty())
            raise(ErrorCode::InvalidArgument,
                  "connector needs policy=... at node " + node.id);
          auto policy = std::make_shared<ConnectorPolicy>(
              ConnectorPolicy::from_file(policy_path));
          std::string query = text_or(deco_config, "query", "");
          if (query.empty())
            raise(ErrorCode::InvalidArgument, "connector needs query=... at node " + node.id);
          std::string table_path = text_or(deco_config, "table", "");
          if (table_path.empty())
            raise(ErrorCode::InvalidArgument, "connector needs table=... at node " + node.id);
          auto side_table = std::make_shared<const Table>(load_csv_infer(table_path));
          std::vector<std::pair<std::string, std::string>> binds;
          for (const Field& f : deco_config.as_record()) {
            if (f.name.rfind("bind_", 0) == 0)
              binds.emplace_back(f.name.substr(5), f.value.as_text());
          }
          uint64_t max_cells =
              static_cast<uint64_t>(int_or(deco_config, "max_cells", 200));
          module = std::make_shared<ConnectorModule>(wrapper, module, policy, query,
                                                     std::move(binds), side_table, max_cells);
          break;
        }
      }
    }

    built[node.id] = std::move(module);
  }

  for (const std::string& id : topological_order(spec)) {
    plan.order.emplace_back(id, built.at(id));
  }
  return plan;
}

}  // namespace curator
