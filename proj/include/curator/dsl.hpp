#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curator/descriptor.hpp"
#include "curator/value.hpp"

namespace curator {

// Argument literal as written in the source: a plain value, a ${param}
// reference resolved at compile time, or a flat list of those.
struct ArgValue {
  enum class Kind { Literal, ParamRef, List };

  Kind kind = Kind::Literal;
  Value literal;
  std::string param;
  std::vector<ArgValue> items;

  static ArgValue of(Value v) {
    ArgValue a;
    a.literal = std::move(v);
    return a;
  }
  static ArgValue param_ref(std::string name) {
    ArgValue a;
    a.kind = Kind::ParamRef;
    a.param = std::move(name);
    return a;
  }
  static ArgValue list(std::vector<ArgValue> items) {
    ArgValue a;
    a.kind = Kind::List;
    a.items = std::move(items);
    return a;
  }

  bool operator==(const ArgValue& other) const;
};

struct Arg {
  std::string name;
  ArgValue value;

  bool operator==(const Arg&) const = default;
};

using ArgList = std::vector<Arg>;

const ArgValue* arg_find(const ArgList& args, const std::string& name);

enum class DecorationKind { Validator, Simulator, Connector };

const char* decoration_kind_name(DecorationKind kind);

struct Decoration {
  DecorationKind kind = DecorationKind::Validator;
  ArgList args;

  bool operator==(const Decoration&) const = default;
};

// `custom(...)`, `llm(...)` or `llmgc(...)` clause on a node.
struct BindingSpec {
  ModuleKind kind = ModuleKind::Custom;
  ArgList args;

  bool operator==(const BindingSpec&) const = default;
};

struct NodeSpec {
  std::string id;
  std::string op;  // logical operator name
  ArgList op_args;
  std::optional<BindingSpec> binding;
  std::vector<Decoration> decorations;  // applied innermost-first

  bool operator==(const NodeSpec&) const = default;
};

struct EdgeSpec {
  std::string from;
  std::string from_port = "out";
  std::string to;
  std::string to_port = "in";
  SourceLoc loc;  // diagnostics only

  bool operator==(const EdgeSpec& other) const {
    return from == other.from && from_port == other.from_port && to == other.to &&
           to_port == other.to_port;
  }
};

struct PipelineSpec {
  std::string name;
  std::vector<std::pair<std::string, Value>> params;  // name -> default
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;

  const NodeSpec* find_node(const std::string& id) const;
  const Value* find_param(const std::string& name) const;

  bool operator==(const PipelineSpec& other) const {
    return name == other.name && params == other.params && nodes == other.nodes &&
           edges == other.edges;
  }
};

// Throws Error(ParseError) with 1-based line/column and an expected-token
// message; stops at the first error.
PipelineSpec parse_pipeline(const std::string& source);

struct Diagnostic {
  std::string code;     // cycle | dangling_edge | shape_mismatch | unbound_input | ...
  std::string node;     // offending node id (or "a->b" for edges)
  std::string message;
};

// Re-checks PipelineSpec invariants on an arbitrary (possibly hand-built)
// spec; empty result means ok.
std::vector<Diagnostic> validate_graph(const PipelineSpec& spec);

// Canonical formatter; parse_pipeline(pretty_print(s)) == s for valid s.
std::string pretty_print(const PipelineSpec& spec);

// Declared port shapes of a node, from binding kind defaults and any
// explicit in=/out= args.
std::pair<Shape, Shape> node_declared_shapes(const NodeSpec& node);

}  // namespace curator
