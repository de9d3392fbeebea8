#include <sstream>

#include "curator/dsl.hpp"

namespace curator {

namespace {

std::string quote_string(const std::string& s) {
  // triple quotes keep multi-line prompts readable
  if (s.find('\n') != std::string::npos && s.find("\"\"\"") == std::string::npos &&
      s.front() != '"' && s.back() != '"') {
    return "\"\"\"" + s + "\"\"\"";
  }
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string print_value_literal(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Text: return quote_string(v.as_text());
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return float_to_string(v.as_float());
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    default:
      raise(ErrorCode::InvalidArgument,
            std::string("value kind not expressible in the DSL: ") +
                value_kind_name(v.kind()));
  }
}

std::string print_arg_value(const ArgValue& v) {
  switch (v.kind) {
    case ArgValue::Kind::Literal: return print_value_literal(v.literal);
    case ArgValue::Kind::ParamRef: return "${" + v.param + "}";
    case ArgValue::Kind::List: {
      std::string out = "[";
      for (size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += " ";
        out += print_arg_value(v.items[i]);
      }
      out += "]";
      return out;
    }
  }
  return "";
}

std::string print_args(const ArgList& args) {
  std::string out;
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].name + "=" + print_arg_value(args[i].value);
  }
  return out;
}

const char* binding_keyword(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::Custom: return "custom";
    case ModuleKind::Llm: return "llm";
    case ModuleKind::Llmgc: return "llmgc";
    default: return "custom";
  }
}

}  // namespace

std::string pretty_print(const PipelineSpec& spec) {
  std::ostringstream out;
  out << "pipeline " << spec.name << " {\n";

  for (const auto& [name, def] : spec.params) {
    out << "  param " << name << " = " << print_value_literal(def) << ";\n";
  }
  if (!spec.params.empty()) out << "\n";

  for (const NodeSpec& node : spec.nodes) {
    out << "  node " << node.id << ": " << node.op << "(" << print_args(node.op_args) << ")";
    if (node.binding) {
      out << " " << binding_keyword(node.binding->kind) << "("
          << print_args(node.binding->args) << ")";
    }
    for (const Decoration& deco : node.decorations) {
      out << " with " << decoration_kind_name(deco.kind) << "(" << print_args(deco.args) << ")";
    }
    out << ";\n";
  }

  // edges re-grouped into maximal arrow chains, in declaration order
  if (!spec.edges.empty()) out << "\n";
  size_t i = 0;
  while (i < spec.edges.size()) {
    out << "  " << spec.edges[i].from << " -> " << spec.edges[i].to;
    size_t j = i;
    while (j + 1 < spec.edges.size() && spec.edges[j + 1].from == spec.edges[j].to) {
      ++j;
      out << " -> " << spec.edges[j].to;
    }
    out << ";\n";
    i = j + 1;
  }

  out << "}\n";
  return out.str();
}

}  // namespace curator
