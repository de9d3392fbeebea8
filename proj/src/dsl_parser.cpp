#include <charconv>
#include <cstdlib>
#include <unordered_map>
#include <unordered_set>

#include "curator/dsl.hpp"
#include "curator/dsl_lexer.hpp"

namespace curator {

bool ArgValue::operator==(const ArgValue& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case Kind::Literal: return literal == other.literal;
    case Kind::ParamRef: return param == other.param;
    case Kind::List: return items == other.items;
  }
  return false;
}

const ArgValue* arg_find(const ArgList& args, const std::string& name) {
  for (const Arg& a : args) {
    if (a.name == name) return &a.value;
  }
  return nullptr;
}

const char* decoration_kind_name(DecorationKind kind) {
  switch (kind) {
    case DecorationKind::Validator: return "validator";
    case DecorationKind::Simulator: return "simulator";
    case DecorationKind::Connector: return "connector";
  }
  return "?";
}

const NodeSpec* PipelineSpec::find_node(const std::string& id) const {
  for (const NodeSpec& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const Value* PipelineSpec::find_param(const std::string& name) const {
  for (const auto& [pname, v] : params) {
    if (pname == name) return &v;
  }
  return nullptr;
}

namespace {

using dsl::Token;
using dsl::TokenType;

class Parser {
 public:
  explicit Parser(const std::string& source) : tokens_(dsl::tokenize(source)) {}

  PipelineSpec parse() {
    PipelineSpec spec;
    expect_keyword("pipeline");
    spec.name = expect_ident("pipeline name");
    expect_punct("{");
    while (!at_punct("}")) {
      if (at_end()) fail(cur(), "expected \"}\"");
      parse_item(spec);
    }
    expect_punct("}");
    if (!at_end()) fail(cur(), "expected end of input");
    check_graph(spec);
    return spec;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }

  [[noreturn]] void fail(const Token& at, const std::string& message) {
    std::string got = at.type == TokenType::End ? "end of input" : "\"" + at.text + "\"";
    raise_at(ErrorCode::ParseError, at.loc, message + ", got " + got);
  }

  bool at_end() const { return cur().type == TokenType::End; }

  bool at_punct(const std::string& p) const {
    return cur().type == TokenType::Punct && cur().text == p;
  }

  bool at_keyword(const std::string& kw) const {
    return cur().type == TokenType::Ident && cur().text == kw;
  }

  Token take() { return tokens_[pos_++]; }

  void expect_punct(const std::string& p) {
    if (!at_punct(p)) fail(cur(), "expected \"" + p + "\"");
    ++pos_;
  }

  void expect_keyword(const std::string& kw) {
    if (!at_keyword(kw)) fail(cur(), "expected \"" + kw + "\"");
    ++pos_;
  }

  std::string expect_ident(const std::string& what) {
    if (cur().type != TokenType::Ident) fail(cur(), "expected " + what);
    return take().text;
  }

  void parse_item(PipelineSpec& spec) {
    if (at_keyword("param")) {
      parse_param(spec);
    } else if (at_keyword("node")) {
      parse_node(spec);
    } else if (cur().type == TokenType::Ident) {
      parse_chain(spec);
    } else {
      fail(cur(), "expected \"param\", \"node\" or a chain");
    }
  }

  void parse_param(PipelineSpec& spec) {
    ++pos_;  // param
    Token name = tokens_[pos_];
    std::string pname = expect_ident("parameter name");
    if (spec.find_param(pname)) fail(name, "duplicate parameter \"" + pname + "\"");
    expect_punct("=");
    ArgValue v = parse_literal();
    if (v.kind != ArgValue::Kind::Literal)
      fail(tokens_[pos_ - 1], "parameter default must be a plain literal");
    expect_punct(";");
    spec.params.emplace_back(std::move(pname), std::move(v.literal));
  }

  void parse_node(PipelineSpec& spec) {
    ++pos_;  // node
    Token id_tok = cur();
    NodeSpec node;
    node.id = expect_ident("node id");
    if (spec.find_node(node.id)) fail(id_tok, "duplicate node id \"" + node.id + "\"");
    expect_punct(":");
    Token op_tok = cur();
    node.op = expect_ident("operator name");
    if (node.op.empty()) fail(op_tok, "expected operator name");
    expect_punct("(");
    node.op_args = parse_args();
    expect_punct(")");

    // binding?
    if (at_keyword("custom") || at_keyword("llm") || at_keyword("llmgc")) {
      BindingSpec binding;
      std::string kind = take().text;
      binding.kind = kind == "custom" ? ModuleKind::Custom
                     : kind == "llm"  ? ModuleKind::Llm
                                      : ModuleKind::Llmgc;
      expect_punct("(");
      binding.args = parse_args();
      expect_punct(")");
      node.binding = std::move(binding);
    }

    // deco*
    while (at_keyword("with")) {
      ++pos_;
      Token kind_tok = cur();
      std::string kind = expect_ident("decoration kind");
      Decoration deco;
      if (kind == "validator") {
        deco.kind = DecorationKind::Validator;
      } else if (kind == "simulator") {
        deco.kind = DecorationKind::Simulator;
      } else if (kind == "connector") {
        deco.kind = DecorationKind::Connector;
      } else {
        fail(kind_tok, "expected \"validator\", \"simulator\" or \"connector\"");
      }
      for (const Decoration& existing : node.decorations) {
        if (existing.kind == deco.kind)
          fail(kind_tok, "duplicate \"" + kind + "\" decoration on node \"" + node.id + "\"");
      }
      expect_punct("(");
      deco.args = parse_args();
      expect_punct(")");
      node.decorations.push_back(std::move(deco));
    }

    expect_punct(";");
    spec.nodes.push_back(std::move(node));
  }

  void parse_chain(PipelineSpec& spec) {
    Token first = cur();
    std::string from = expect_ident("node id");
    endpoint_locs_.push_back({from, first.loc});
    if (cur().type != TokenType::Arrow) fail(cur(), "expected \"->\"");
    while (cur().type == TokenType::Arrow) {
      Token arrow = take();
      Token to_tok = cur();
      std::string to = expect_ident("node id");
      endpoint_locs_.push_back({to, to_tok.loc});
      EdgeSpec edge{from, "out", to, "in", arrow.loc};
      for (const EdgeSpec& e : spec.edges) {
        if (e == edge)
          raise_at(ErrorCode::ParseError, arrow.loc,
                   "duplicate edge \"" + from + " -> " + to + "\"");
      }
      spec.edges.push_back(std::move(edge));
      from = std::move(to);
    }
    expect_punct(";");
  }

  ArgList parse_args() {
    ArgList args;
    if (at_punct(")")) return args;
    while (true) {
      Token name_tok = cur();
      Arg arg;
      arg.name = expect_ident("argument name");
      if (arg_find(args, arg.name)) fail(name_tok, "duplicate argument \"" + arg.name + "\"");
      expect_punct("=");
      if (at_punct("[")) {
        ++pos_;
        std::vector<ArgValue> items;
        while (!at_punct("]")) {
          if (at_end()) fail(cur(), "expected \"]\"");
          items.push_back(parse_literal());
          if (at_punct(",")) ++pos_;  // separators are optional inside lists
        }
        ++pos_;
        arg.value = ArgValue::list(std::move(items));
      } else {
        arg.value = parse_literal();
      }
      args.push_back(std::move(arg));
      if (at_punct(",")) {
        ++pos_;
        continue;
      }
      break;
    }
    return args;
  }

  ArgValue parse_literal() {
    const Token& t = cur();
    switch (t.type) {
      case TokenType::String:
        return ArgValue::of(Value::text(take().text));
      case TokenType::Int: {
        int64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{}) fail(t, "integer literal out of range");
        ++pos_;
        return ArgValue::of(Value::integer(v));
      }
      case TokenType::Float: {
        double v = std::strtod(t.text.c_str(), nullptr);
        ++pos_;
        return ArgValue::of(Value::real(v));
      }
      case TokenType::ParamRef:
        return ArgValue::param_ref(take().text);
      case TokenType::Ident:
        if (t.text == "true") {
          ++pos_;
          return ArgValue::of(Value::boolean(true));
        }
        if (t.text == "false") {
          ++pos_;
          return ArgValue::of(Value::boolean(false));
        }
        fail(t, "expected a literal");
      default:
        fail(t, "expected a literal");
    }
  }

  // DAG invariant is part of parsing: report the back edge that closes a cycle.
  void check_graph(const PipelineSpec& spec) {
    for (const auto& [id, loc] : endpoint_locs_) {
      if (!spec.find_node(id))
        raise_at(ErrorCode::ParseError, loc, "unknown node \"" + id + "\" in chain");
    }

    std::unordered_map<std::string, int> state;  // 0 new, 1 visiting, 2 done
    std::unordered_map<std::string, std::vector<const EdgeSpec*>> out;
    for (const EdgeSpec& e : spec.edges) out[e.from].push_back(&e);

    const EdgeSpec* back_edge = nullptr;
    auto dfs = [&](auto&& self, const std::string& id) -> void {
      state[id] = 1;
      for (const EdgeSpec* e : out[id]) {
        if (back_edge) return;
        int s = state[e->to];
        if (s == 1) {
          back_edge = e;
          return;
        }
        if (s == 0) self(self, e->to);
      }
      state[id] = 2;
    };
    for (const NodeSpec& n : spec.nodes) {
      if (state[n.id] == 0) dfs(dfs, n.id);
      if (back_edge)
        raise_at(ErrorCode::ParseError, back_edge->loc,
                 "edge \"" + back_edge->from + " -> " + back_edge->to + "\" creates a cycle");
    }
  }

  std::vector<Token> tokens_;
  std::vector<std::pair<std::string, SourceLoc>> endpoint_locs_;
  size_t pos_ = 0;
};

}  // namespace

PipelineSpec parse_pipeline(const std::string& source) { return Parser(source).parse(); }

std::pair<Shape, Shape> node_declared_shapes(const NodeSpec& node) {
  Shape in = Shape::Any;
  Shape out = Shape::Any;
  if (node.binding && node.binding->kind == ModuleKind::Llm) out = Shape::Text;
  const ArgList* lists[] = {&node.op_args, node.binding ? &node.binding->args : nullptr};
  for (const ArgList* args : lists) {
    if (!args) continue;
    if (const ArgValue* v = arg_find(*args, "in");
        v && v->kind == ArgValue::Kind::Literal && v->literal.kind() == ValueKind::Text)
      in = shape_from_name(v->literal.as_text());
    if (const ArgValue* v = arg_find(*args, "out");
        v && v->kind == ArgValue::Kind::Literal && v->literal.kind() == ValueKind::Text)
      out = shape_from_name(v->literal.as_text());
  }
  return {in, out};
}

namespace {

// Tables stream row-by-row into record-shaped consumers and per-record
// results reassemble into tables, so either side being a table is fine
// statically; the executor still checks concrete values in whole mode.
bool shapes_compatible(Shape out, Shape in) {
  if (out == Shape::Any || in == Shape::Any || in == Shape::None) return true;
  if (out == Shape::Table || in == Shape::Table) return true;
  if (in == Shape::Scalar) return out == Shape::Scalar || out == Shape::Text;
  return out == in;
}

}  // namespace

std::vector<Diagnostic> validate_graph(const PipelineSpec& spec) {
  std::vector<Diagnostic> diags;

  std::unordered_set<std::string> ids;
  for (const NodeSpec& n : spec.nodes) {
    if (!ids.insert(n.id).second)
      diags.push_back({"duplicate_node", n.id, "node id declared twice"});
    if (n.op.empty()) diags.push_back({"empty_operator", n.id, "operator name is empty"});
  }

  std::unordered_map<std::string, int> indegree;
  for (const NodeSpec& n : spec.nodes) indegree[n.id] = 0;
  bool edges_ok = true;
  for (const EdgeSpec& e : spec.edges) {
    std::string label = e.from + "->" + e.to;
    if (!ids.count(e.from) || !ids.count(e.to)) {
      diags.push_back({"dangling_edge", label, "edge endpoint is not a declared node"});
      edges_ok = false;
      continue;
    }
    indegree[e.to] += 1;
  }

  // cycle check (Kahn)
  if (edges_ok) {
    std::unordered_map<std::string, std::vector<std::string>> out;
    for (const EdgeSpec& e : spec.edges) out[e.from].push_back(e.to);
    std::unordered_map<std::string, int> deg = indegree;
    std::vector<std::string> queue;
    for (const auto& [id, d] : deg)
      if (d == 0) queue.push_back(id);
    size_t seen = 0;
    for (size_t i = 0; i < queue.size(); ++i) {
      ++seen;
      for (const std::string& next : out[queue[i]]) {
        if (--deg[next] == 0) queue.push_back(next);
      }
    }
    if (seen != spec.nodes.size()) {
      std::string members;
      for (const auto& [id, d] : deg) {
        if (d > 0) members += (members.empty() ? "" : ",") + id;
      }
      diags.push_back({"cycle", members, "nodes form a cycle"});
    }

    // reachability from the indegree-0 sources
    std::unordered_set<std::string> reach(queue.begin(), queue.end());
    for (const NodeSpec& n : spec.nodes) {
      if (indegree[n.id] == 0) reach.insert(n.id);
    }
    std::vector<std::string> stack(reach.begin(), reach.end());
    while (!stack.empty()) {
      std::string id = stack.back();
      stack.pop_back();
      for (const std::string& next : out[id]) {
        if (reach.insert(next).second) stack.push_back(next);
      }
    }
    for (const NodeSpec& n : spec.nodes) {
      if (!reach.count(n.id))
        diags.push_back({"unreachable", n.id, "node is unreachable from any source"});
    }
  }

  for (const NodeSpec& n : spec.nodes) {
    auto [in, out_shape] = node_declared_shapes(n);
    if (indegree[n.id] == 0 && in != Shape::Any && in != Shape::None)
      diags.push_back({"unbound_input", n.id,
                       std::string("required ") + shape_name(in) + " input is unconnected"});
  }

  for (const EdgeSpec& e : spec.edges) {
    const NodeSpec* from = spec.find_node(e.from);
    const NodeSpec* to = spec.find_node(e.to);
    if (!from || !to) continue;
    Shape out_shape = node_declared_shapes(*from).second;
    Shape in_shape = node_declared_shapes(*to).first;
    if (!shapes_compatible(out_shape, in_shape)) {
      diags.push_back({"shape_mismatch", e.from + "->" + e.to,
                       std::string(shape_name(out_shape)) + " output feeds " +
                           shape_name(in_shape) + " input"});
    }
  }

  return diags;
}

}  // namespace curator
