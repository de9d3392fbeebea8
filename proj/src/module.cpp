#include "curator/module.hpp"

#include <cstdlib>

#include "curator/csv.hpp"
#include "curator/regex_lite.hpp"
#include "curator/value_json.hpp"

namespace curator {

void CustomRegistry::add(const std::string& name, CustomEntry entry) {
  if (entries_.count(name))
    raise(ErrorCode::InvalidArgument, "custom module already registered: " + name);
  entries_[name] = std::move(entry);
}

const CustomEntry* CustomRegistry::find(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> CustomRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

// ---- prompt rendering --------------------------------------------------------

std::string render_prompt(const std::string& prompt_template, const Value& input) {
  std::string out;
  out.reserve(prompt_template.size());
  size_t i = 0;
  while (i < prompt_template.size()) {
    char c = prompt_template[i];
    if (c == '{' && i + 1 < prompt_template.size() && prompt_template[i + 1] == '{') {
      out.push_back('{');
      i += 2;
      continue;
    }
    if (c == '}' && i + 1 < prompt_template.size() && prompt_template[i + 1] == '}') {
      out.push_back('}');
      i += 2;
      continue;
    }
    if (c == '{') {
      size_t close = prompt_template.find('}', i + 1);
      if (close == std::string::npos)
        raise(ErrorCode::InvalidArgument, "unterminated {placeholder} in prompt");
      std::string name = prompt_template.substr(i + 1, close - i - 1);
      if (name == "input") {
        out += render_scalar(input);
      } else {
        const Value* field = input.find(name);
        if (!field)
          raise(ErrorCode::InvalidArgument,
                "prompt placeholder {" + name + "} has no matching input field");
        out += render_scalar(*field);
      }
      i = close + 1;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

// ---- output validation -------------------------------------------------------

OutputRule OutputRule::parse(const std::string& text) {
  OutputRule rule;
  if (text.empty() || text == "none") return rule;
  if (text.rfind("numeric_range:", 0) == 0) {
    std::string rest = text.substr(14);
    size_t comma = rest.find(',');
    if (comma == std::string::npos)
      raise(ErrorCode::InvalidArgument, "numeric_range needs \"lo,hi\": " + text);
    rule.kind = Kind::NumericRange;
    rule.lo = std::strtod(rest.substr(0, comma).c_str(), nullptr);
    rule.hi = std::strtod(rest.substr(comma + 1).c_str(), nullptr);
    if (rule.lo > rule.hi)
      raise(ErrorCode::InvalidArgument, "numeric_range bounds out of order: " + text);
    return rule;
  }
  if (text.rfind("one_of:", 0) == 0) {
    rule.kind = Kind::OneOf;
    std::string rest = text.substr(7);
    size_t start = 0;
    while (true) {
      size_t comma = rest.find(',', start);
      std::string label =
          comma == std::string::npos ? rest.substr(start) : rest.substr(start, comma - start);
      if (!label.empty()) rule.labels.push_back(label);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rule.labels.empty())
      raise(ErrorCode::InvalidArgument, "one_of needs at least one label");
    return rule;
  }
  if (text.rfind("regex:", 0) == 0) {
    rule.kind = Kind::Regex;
    rule.pattern = text.substr(6);
    rx::Regex::compile(rule.pattern);  // fail fast on a bad pattern
    return rule;
  }
  raise(ErrorCode::InvalidArgument, "unknown output validation rule: " + text);
}

OutputRule::Checked OutputRule::check(const std::string& response) const {
  Checked out;
  switch (kind) {
    case Kind::None:
      out.ok = true;
      out.value = Value::text(response);
      return out;
    case Kind::NumericRange: {
      std::string trimmed = normalize_text(response);
      char* endp = nullptr;
      double v = std::strtod(trimmed.c_str(), &endp);
      if (trimmed.empty() || endp != trimmed.c_str() + trimmed.size()) {
        out.violation = "expected a number, got \"" + response + "\"";
        return out;
      }
      if (v < lo || v > hi) {
        out.violation = "value " + float_to_string(v) + " outside [" + float_to_string(lo) +
                        ", " + float_to_string(hi) + "]";
        return out;
      }
      out.ok = true;
      out.value = Value::real(v);
      return out;
    }
    case Kind::OneOf: {
      std::string norm = normalize_text(response);
      for (const std::string& label : labels) {
        if (normalize_text(label) == norm) {
          out.ok = true;
          out.value = Value::text(label);  // canonical label
          return out;
        }
      }
      out.violation = "expected one of the allowed labels, got \"" + response + "\"";
      return out;
    }
    case Kind::Regex: {
      rx::Regex re = rx::Regex::compile(pattern);
      if (!re.full_match(response)) {
        out.violation = "response does not match /" + pattern + "/";
        return out;
      }
      out.ok = true;
      out.value = Value::text(response);
      return out;
    }
  }
  return out;
}

// ---- llm module ---------------------------------------------------------------

LlmModule::LlmModule(ModuleDescriptor descriptor, std::string prompt_template,
                     std::string system, OutputRule rule, std::string tag)
    : PhysicalModule(std::move(descriptor)),
      prompt_template_(std::move(prompt_template)),
      system_(std::move(system)),
      rule_(std::move(rule)),
      tag_(std::move(tag)) {}

Value LlmModule::invoke(const Value& input, RunContext& ctx) {
  if (!ctx.backend) raise(ErrorCode::BackendUnavailable, "no backend configured");
  std::string prompt = render_prompt(prompt_template_, input);
  LlmRequest request = LlmRequest::prompt(system_, prompt, tag_);
  LlmResponse response = ctx.backend->complete(request, ctx.ledger_ref());

  OutputRule::Checked checked = rule_.check(response.text);
  if (checked.ok) return checked.value;

  // one corrective re-ask with the violation appended
  LlmRequest retry = request;
  retry.messages.push_back({ChatRole::Assistant, response.text});
  retry.messages.push_back(
      {ChatRole::User, "That answer is invalid: " + checked.violation + ". Answer again."});
  LlmResponse second = ctx.backend->complete(retry, ctx.ledger_ref());
  checked = rule_.check(second.text);
  if (checked.ok) return checked.value;
  raise(ErrorCode::LlmOutputInvalid,
        "output failed validation twice: " + checked.violation);
}

// ---- script module --------------------------------------------------------------

ScriptModule::ScriptModule(ModuleDescriptor descriptor,
                           std::shared_ptr<const script::Script> program,
                           std::shared_ptr<const script::ToolRegistry> tools,
                           script::Limits limits, std::string tag)
    : PhysicalModule(std::move(descriptor)),
      program_(std::move(program)),
      tools_(std::move(tools)),
      limits_(limits),
      tag_(std::move(tag)) {}

Value ScriptModule::invoke(const Value& input, RunContext& ctx) {
  static const script::ToolRegistry kEmpty;
  const script::ToolRegistry& tools = tools_ ? *tools_ : kEmpty;
  return script::eval(*program_, input, tools, limits_, ctx.ledger_ref());
}

ModulePtr innermost(ModulePtr module) {
  while (module && module->inner()) module = module->inner();
  return module;
}

// ---- built-in custom operators ---------------------------------------------------

namespace {

std::string config_text(const Value& config, const std::string& key,
                        const std::string& fallback = "") {
  const Value* v = config.find(key);
  if (!v || v->is_null()) return fallback;
  return v->kind() == ValueKind::Text ? v->as_text() : render_scalar(*v);
}

Value op_load_csv(const Value& input, const Value& config, RunContext&) {
  if (input.kind() == ValueKind::TableRef) return input;  // data bound by the caller
  std::string path = config_text(config, "path");
  if (path.empty())
    raise(ErrorCode::InvalidArgument, "load_csv needs path=... or a bound input table");
  CsvOptions opt;
  std::string delim = config_text(config, "delimiter");
  if (!delim.empty()) opt.delimiter = delim[0];
  return Value::table(std::make_shared<Table>(load_csv_infer(path, opt)));
}

Value op_save_csv(const Value& input, const Value& config, RunContext&) {
  if (input.kind() != ValueKind::TableRef)
    raise(ErrorCode::TypeError,
          std::string("save_csv expects a table, got ") + value_kind_name(input.kind()));
  std::string path = config_text(config, "path");
  if (path.empty()) raise(ErrorCode::InvalidArgument, "save_csv needs path=...");
  save_csv(path, *input.as_table());
  return input;  // pass-through so downstream nodes and outputs see the table
}

}  // namespace

Value op_field_get(const Value& input, const Value& config, RunContext&) {
  std::string name = config_text(config, "name");
  if (name.empty()) raise(ErrorCode::InvalidArgument, "field_get needs name=...");
  const Value* field = input.find(name);
  if (!field)
    raise(ErrorCode::TypeError, "input record has no field \"" + name + "\"");
  return *field;
}

CustomRegistry builtin_customs() {
  CustomRegistry reg;
  reg.add("load_csv", {op_load_csv, Shape::Any, Shape::Table, false});
  reg.add("save_csv", {op_save_csv, Shape::Table, Shape::Table, false});
  reg.add("identity", {[](const Value& input, const Value&, RunContext&) { return input; },
                       Shape::Any, Shape::Any, true});
  reg.add("to_text", {[](const Value& input, const Value&, RunContext&) {
                        return Value::text(render_scalar(input));
                      },
                      Shape::Any, Shape::Text, true});
  reg.add("field_get", {op_field_get, Shape::Record, Shape::Any, false});
  return reg;
}

}  // namespace curator
