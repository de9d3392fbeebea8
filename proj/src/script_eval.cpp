#include <cmath>
#include <optional>
#include <unordered_map>

#include "curator/regex_lite.hpp"
#include "curator/script.hpp"
#include "curator/value_json.hpp"

namespace curator::script {

namespace {

int64_t wrap_add(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
int64_t wrap_sub(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}
int64_t wrap_mul(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
}

class Interp {
 public:
  Interp(const Value& input, const ToolRegistry& registry, const Limits& limits,
         CostLedger& ledger)
      : input_(input), registry_(registry), limits_(limits), ledger_(ledger) {
    scopes_.emplace_back();
  }

  Value run(const Script& script) {
    std::optional<Value> result = exec_block(script.statements);
    return result.value_or(Value::null());
  }

 private:
  using Scope = std::unordered_map<std::string, Value>;

  [[noreturn]] void fail(ErrorCode code, SourceLoc loc, const std::string& msg) {
    raise_at(code, loc, msg);
  }

  void charge(SourceLoc loc, uint64_t n = 1) {
    steps_ += n;
    if (steps_ > limits_.max_steps)
      fail(ErrorCode::StepLimitExceeded, loc,
           "step limit exceeded (" + std::to_string(limits_.max_steps) + ")");
  }

  void check_string(SourceLoc loc, size_t len) {
    if (len > limits_.max_string_len)
      fail(ErrorCode::ResourceLimitExceeded, loc, "string length limit exceeded");
  }

  void check_collection(SourceLoc loc, size_t len) {
    if (len > limits_.max_collection_size)
      fail(ErrorCode::ResourceLimitExceeded, loc, "collection size limit exceeded");
  }

  Value* lookup(const std::string& name) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto found = it->find(name);
      if (found != it->end()) return &found->second;
    }
    return nullptr;
  }

  // returns the value of a `return` statement, if one fired
  std::optional<Value> exec_block(const std::vector<StmtPtr>& stmts) {
    for (const StmtPtr& stmt : stmts) {
      std::optional<Value> r = exec_stmt(*stmt);
      if (r) return r;
    }
    return std::nullopt;
  }

  std::optional<Value> exec_scoped(const std::vector<StmtPtr>& stmts) {
    scopes_.emplace_back();
    std::optional<Value> r = exec_block(stmts);
    scopes_.pop_back();
    return r;
  }

  std::optional<Value> exec_stmt(const Stmt& stmt) {
    switch (stmt.kind) {
      case Stmt::Kind::Let: {
        if (scopes_.back().count(stmt.name))
          fail(ErrorCode::TypeError, stmt.loc, "variable already declared: " + stmt.name);
        scopes_.back()[stmt.name] = eval_expr(*stmt.expr);
        return std::nullopt;
      }
      case Stmt::Kind::Assign: {
        Value* slot = lookup(stmt.name);
        if (!slot) fail(ErrorCode::TypeError, stmt.loc, "undefined variable: " + stmt.name);
        *slot = eval_expr(*stmt.expr);
        return std::nullopt;
      }
      case Stmt::Kind::If: {
        if (truthy(*stmt.expr)) return exec_scoped(stmt.body);
        return exec_scoped(stmt.else_body);
      }
      case Stmt::Kind::While: {
        while (true) {
          if (!truthy(*stmt.expr)) return std::nullopt;
          charge(stmt.loc);  // one step per iteration
          std::optional<Value> r = exec_scoped(stmt.body);
          if (r) return r;
        }
      }
      case Stmt::Kind::ForEach: {
        Value iterable = eval_expr(*stmt.expr);
        if (iterable.kind() != ValueKind::List)
          fail(ErrorCode::TypeError, stmt.loc,
               std::string("for expects a list, got ") + value_kind_name(iterable.kind()));
        for (const Value& item : iterable.as_list()) {
          charge(stmt.loc);
          scopes_.emplace_back();
          scopes_.back()[stmt.name] = item;
          std::optional<Value> r = exec_block(stmt.body);
          scopes_.pop_back();
          if (r) return r;
        }
        return std::nullopt;
      }
      case Stmt::Kind::Return:
        return eval_expr(*stmt.expr);
    }
    return std::nullopt;
  }

  bool truthy(const Expr& e) {
    Value v = eval_expr(e);
    if (v.kind() != ValueKind::Bool)
      fail(ErrorCode::TypeError, e.loc,
           std::string("condition must be bool, got ") + value_kind_name(v.kind()));
    return v.as_bool();
  }

  Value eval_expr(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Literal: return e.literal;
      case Expr::Kind::Input: return input_;
      case Expr::Kind::Ident: {
        Value* slot = lookup(e.name);
        if (!slot) fail(ErrorCode::TypeError, e.loc, "undefined variable: " + e.name);
        return *slot;
      }
      case Expr::Kind::Unary: return eval_unary(e);
      case Expr::Kind::Binary: return eval_binary(e);
      case Expr::Kind::Ternary: {
        charge(e.loc);
        return truthy(*e.children[0]) ? eval_expr(*e.children[1])
                                      : eval_expr(*e.children[2]);
      }
      case Expr::Kind::Field: {
        charge(e.loc);
        Value base = eval_expr(*e.children[0]);
        if (base.kind() != ValueKind::Record)
          fail(ErrorCode::TypeError, e.loc,
               std::string("field access on ") + value_kind_name(base.kind()));
        const Value* f = base.find(e.name);
        if (!f) fail(ErrorCode::TypeError, e.loc, "record has no field: " + e.name);
        return *f;
      }
      case Expr::Kind::ListLit: {
        charge(e.loc);
        check_collection(e.loc, e.children.size());
        Value::List items;
        items.reserve(e.children.size());
        for (const ExprPtr& c : e.children) items.push_back(eval_expr(*c));
        return Value::list(std::move(items));
      }
      case Expr::Kind::RecordLit: {
        charge(e.loc);
        Value::Record fields;
        for (size_t i = 0; i < e.children.size(); ++i) {
          fields.push_back({e.keys[i], eval_expr(*e.children[i])});
        }
        try {
          return Value::record(std::move(fields));
        } catch (const Error& err) {
          fail(ErrorCode::TypeError, e.loc, err.what());
        }
      }
      case Expr::Kind::Lambda:
        fail(ErrorCode::TypeError, e.loc,
             "lambda is only allowed as the 2nd argument of map/filter");
      case Expr::Kind::ToolCall: return eval_tool_call(e);
      case Expr::Kind::Builtin: return eval_builtin(e);
    }
    fail(ErrorCode::TypeError, e.loc, "unreachable expression kind");
  }

  Value eval_unary(const Expr& e) {
    charge(e.loc);
    Value v = eval_expr(*e.children[0]);
    if (e.name == "!") {
      if (v.kind() != ValueKind::Bool)
        fail(ErrorCode::TypeError, e.loc,
             std::string("! expects bool, got ") + value_kind_name(v.kind()));
      return Value::boolean(!v.as_bool());
    }
    // unary minus
    if (v.kind() == ValueKind::Int) return Value::integer(wrap_sub(0, v.as_int()));
    if (v.kind() == ValueKind::Float) return Value::real(-v.as_float());
    fail(ErrorCode::TypeError, e.loc,
         std::string("unary - expects a number, got ") + value_kind_name(v.kind()));
  }

  Value eval_binary(const Expr& e) {
    const std::string& op = e.name;
    charge(e.loc);

    if (op == "&&" || op == "||") {
      bool left = truthy(*e.children[0]);
      if (op == "&&" && !left) return Value::boolean(false);
      if (op == "||" && left) return Value::boolean(true);
      return Value::boolean(truthy(*e.children[1]));
    }

    Value a = eval_expr(*e.children[0]);
    Value b = eval_expr(*e.children[1]);

    if (op == "==") return Value::boolean(a == b);
    if (op == "!=") return Value::boolean(!(a == b));

    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      int c;
      if (a.is_numeric() && b.is_numeric()) {
        if (a.kind() == ValueKind::Int && b.kind() == ValueKind::Int) {
          c = a.as_int() < b.as_int() ? -1 : a.as_int() == b.as_int() ? 0 : 1;
        } else {
          double x = a.as_float(), y = b.as_float();
          c = x < y ? -1 : x == y ? 0 : 1;
        }
      } else if (a.kind() == ValueKind::Text && b.kind() == ValueKind::Text) {
        int r = a.as_text().compare(b.as_text());
        c = r < 0 ? -1 : r == 0 ? 0 : 1;
      } else {
        fail(ErrorCode::TypeError, e.loc,
             op + " expects two numbers or two texts, got " +
                 value_kind_name(a.kind()) + " and " + value_kind_name(b.kind()));
      }
      bool r = op == "<" ? c < 0 : op == "<=" ? c <= 0 : op == ">" ? c > 0 : c >= 0;
      return Value::boolean(r);
    }

    if (op == "+") {
      if (a.kind() == ValueKind::Text || b.kind() == ValueKind::Text) {
        std::string sa = a.kind() == ValueKind::Text ? a.as_text() : scalar_text(a, e.loc);
        std::string sb = b.kind() == ValueKind::Text ? b.as_text() : scalar_text(b, e.loc);
        check_string(e.loc, sa.size() + sb.size());
        return Value::text(sa + sb);
      }
      if (a.kind() == ValueKind::Int && b.kind() == ValueKind::Int)
        return Value::integer(wrap_add(a.as_int(), b.as_int()));
      if (a.is_numeric() && b.is_numeric()) return Value::real(a.as_float() + b.as_float());
      fail(ErrorCode::TypeError, e.loc,
           std::string("+ cannot combine ") + value_kind_name(a.kind()) + " and " +
               value_kind_name(b.kind()));
    }

    if (!a.is_numeric() || !b.is_numeric())
      fail(ErrorCode::TypeError, e.loc,
           op + " expects numbers, got " + value_kind_name(a.kind()) + " and " +
               value_kind_name(b.kind()));

    bool both_int = a.kind() == ValueKind::Int && b.kind() == ValueKind::Int;
    if (op == "-") {
      if (both_int) return Value::integer(wrap_sub(a.as_int(), b.as_int()));
      return Value::real(a.as_float() - b.as_float());
    }
    if (op == "*") {
      if (both_int) return Value::integer(wrap_mul(a.as_int(), b.as_int()));
      return Value::real(a.as_float() * b.as_float());
    }
    if (op == "/") {
      if (both_int) {
        int64_t d = b.as_int();
        if (d == 0) fail(ErrorCode::TypeError, e.loc, "division by zero");
        if (d == -1) return Value::integer(wrap_sub(0, a.as_int()));
        return Value::integer(a.as_int() / d);
      }
      if (b.as_float() == 0.0) fail(ErrorCode::TypeError, e.loc, "division by zero");
      return Value::real(a.as_float() / b.as_float());
    }
    if (op == "%") {
      if (!both_int)
        fail(ErrorCode::TypeError, e.loc, "% expects two ints");
      int64_t d = b.as_int();
      if (d == 0) fail(ErrorCode::TypeError, e.loc, "modulo by zero");
      if (d == -1) return Value::integer(0);
      return Value::integer(a.as_int() % d);
    }
    fail(ErrorCode::TypeError, e.loc, "unknown operator " + op);
  }

  std::string scalar_text(const Value& v, SourceLoc loc) {
    if (!v.is_scalar() && v.kind() != ValueKind::List && v.kind() != ValueKind::Record)
      fail(ErrorCode::TypeError, loc, "cannot render table into text");
    return render_scalar(v);
  }

  Value eval_tool_call(const Expr& e) {
    charge(e.loc);
    const ToolEntry* tool = registry_.find(e.tool);
    if (!tool) fail(ErrorCode::UnknownTool, e.loc, "unknown tool: " + e.tool);
    std::vector<Value> args;
    args.reserve(e.children.size());
    for (const ExprPtr& c : e.children) args.push_back(eval_expr(*c));
    ToolCallContext ctx{&ledger_, tag_};
    try {
      return tool->fn(args, ctx);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::BackendUnavailable || err.code() == ErrorCode::MockExhausted)
        throw;  // backend failures keep their identity
      fail(ErrorCode::ToolError, e.loc, "tool \"" + e.tool + "\" failed: " + err.what());
    }
  }

  const Expr& lambda_arg(const Expr& call, size_t idx) {
    if (idx >= call.children.size() || call.children[idx]->kind != Expr::Kind::Lambda)
      fail(ErrorCode::TypeError, call.loc,
           call.name + " expects a lambda like (x => ...) as argument " +
               std::to_string(idx + 1));
    return *call.children[idx];
  }

  Value apply_lambda(const Expr& lambda, const Value& arg) {
    scopes_.emplace_back();
    scopes_.back()[lambda.name] = arg;
    Value out = eval_expr(*lambda.children[0]);
    scopes_.pop_back();
    return out;
  }

  Value eval_builtin(const Expr& e);

  const Value& input_;
  const ToolRegistry& registry_;
  const Limits& limits_;
  CostLedger& ledger_;
  std::vector<Scope> scopes_;
  uint64_t steps_ = 0;
  std::string tag_ = "script";
};

Value Interp::eval_builtin(const Expr& e) {
  const std::string& name = e.name;
  charge(e.loc);

  // map/filter interpret their lambda argument structurally
  if (name == "map" || name == "filter") {
    if (e.children.size() != 2)
      fail(ErrorCode::TypeError, e.loc, name + " expects (list, lambda)");
    Value list = eval_expr(*e.children[0]);
    if (list.kind() != ValueKind::List)
      fail(ErrorCode::TypeError, e.loc,
           name + " expects a list, got " + value_kind_name(list.kind()));
    const Expr& lambda = lambda_arg(e, 1);
    Value::List out;
    for (const Value& item : list.as_list()) {
      charge(e.loc);
      Value mapped = apply_lambda(lambda, item);
      if (name == "map") {
        out.push_back(std::move(mapped));
      } else {
        if (mapped.kind() != ValueKind::Bool)
          fail(ErrorCode::TypeError, e.loc,
               std::string("filter lambda must return bool, got ") +
                   value_kind_name(mapped.kind()));
        if (mapped.as_bool()) out.push_back(item);
      }
    }
    return Value::list(std::move(out));
  }

  std::vector<Value> args;
  args.reserve(e.children.size());
  for (const ExprPtr& c : e.children) args.push_back(eval_expr(*c));

  auto want = [&](size_t n) {
    if (args.size() != n)
      fail(ErrorCode::TypeError, e.loc,
           name + " expects " + std::to_string(n) + " argument(s), got " +
               std::to_string(args.size()));
  };
  auto text_arg = [&](size_t i) -> const std::string& {
    if (args[i].kind() != ValueKind::Text)
      fail(ErrorCode::TypeError, e.loc,
           name + " expects text, got " + value_kind_name(args[i].kind()));
    return args[i].as_text();
  };

  if (name == "lower" || name == "upper") {
    want(1);
    std::string s = text_arg(0);
    for (char& c : s) {
      if (name == "lower" && c >= 'A' && c <= 'Z') c += 32;
      if (name == "upper" && c >= 'a' && c <= 'z') c -= 32;
    }
    return Value::text(std::move(s));
  }
  if (name == "trim") {
    want(1);
    const std::string& s = text_arg(0);
    size_t b = s.find_first_not_of(" \t\r\n");
    size_t end = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return Value::text("");
    return Value::text(s.substr(b, end - b + 1));
  }
  if (name == "split") {
    want(2);
    const std::string& s = text_arg(0);
    const std::string& sep = text_arg(1);
    if (sep.empty()) fail(ErrorCode::TypeError, e.loc, "split separator must be non-empty");
    Value::List parts;
    size_t start = 0;
    while (true) {
      size_t at = s.find(sep, start);
      check_collection(e.loc, parts.size() + 1);
      if (at == std::string::npos) {
        parts.push_back(Value::text(s.substr(start)));
        break;
      }
      parts.push_back(Value::text(s.substr(start, at - start)));
      start = at + sep.size();
    }
    return Value::list(std::move(parts));
  }
  if (name == "join") {
    want(2);
    if (args[0].kind() != ValueKind::List)
      fail(ErrorCode::TypeError, e.loc, "join expects a list");
    const std::string& sep = text_arg(1);
    std::string out;
    bool first = true;
    for (const Value& item : args[0].as_list()) {
      if (!first) out += sep;
      first = false;
      if (item.kind() != ValueKind::Text && !item.is_scalar())
        fail(ErrorCode::TypeError, e.loc, "join expects scalar elements");
      out += render_scalar(item);
      check_string(e.loc, out.size());
    }
    return Value::text(std::move(out));
  }
  if (name == "contains") {
    want(2);
    return Value::boolean(text_arg(0).find(text_arg(1)) != std::string::npos);
  }
  if (name == "replace") {
    want(3);
    const std::string& s = text_arg(0);
    const std::string& from = text_arg(1);
    const std::string& to = text_arg(2);
    if (from.empty()) fail(ErrorCode::TypeError, e.loc, "replace pattern must be non-empty");
    std::string out;
    size_t start = 0;
    while (true) {
      size_t at = s.find(from, start);
      if (at == std::string::npos) {
        out += s.substr(start);
        break;
      }
      out += s.substr(start, at - start);
      out += to;
      start = at + from.size();
      check_string(e.loc, out.size());
    }
    check_string(e.loc, out.size());
    return Value::text(std::move(out));
  }
  if (name == "regex_match" || name == "regex_findall") {
    want(2);
    const std::string& s = text_arg(0);
    const std::string& pattern = text_arg(1);
    charge(e.loc, 1 + s.size() / 16);  // scan cost
    rx::Regex re = [&] {
      try {
        return rx::Regex::compile(pattern);
      } catch (const Error& err) {
        fail(ErrorCode::TypeError, e.loc, err.what());
      }
    }();
    if (name == "regex_match") return Value::boolean(re.full_match(s));
    std::vector<std::string> found = re.find_all(s);
    check_collection(e.loc, found.size());
    Value::List out;
    for (std::string& m : found) out.push_back(Value::text(std::move(m)));
    return Value::list(std::move(out));
  }
  if (name == "len") {
    want(1);
    switch (args[0].kind()) {
      case ValueKind::Text:
        return Value::integer(static_cast<int64_t>(args[0].as_text().size()));
      case ValueKind::List:
        return Value::integer(static_cast<int64_t>(args[0].as_list().size()));
      case ValueKind::Record:
        return Value::integer(static_cast<int64_t>(args[0].as_record().size()));
      default:
        fail(ErrorCode::TypeError, e.loc,
             std::string("len expects text, list or record, got ") +
                 value_kind_name(args[0].kind()));
    }
  }
  if (name == "append") {
    want(2);
    if (args[0].kind() != ValueKind::List)
      fail(ErrorCode::TypeError, e.loc, "append expects a list");
    Value::List out = args[0].as_list();
    check_collection(e.loc, out.size() + 1);
    out.push_back(args[1]);
    return Value::list(std::move(out));
  }
  if (name == "get") {
    want(2);
    if (args[0].kind() == ValueKind::List) {
      if (args[1].kind() != ValueKind::Int)
        fail(ErrorCode::TypeError, e.loc, "get index must be an int");
      int64_t i = args[1].as_int();
      const Value::List& list = args[0].as_list();
      if (i < 0 || static_cast<size_t>(i) >= list.size())
        fail(ErrorCode::TypeError, e.loc,
             "index " + std::to_string(i) + " out of range (len " +
                 std::to_string(list.size()) + ")");
      return list[static_cast<size_t>(i)];
    }
    if (args[0].kind() == ValueKind::Record) {
      const Value* f = args[0].find(text_arg(1));
      if (!f) fail(ErrorCode::TypeError, e.loc, "record has no field: " + args[1].as_text());
      return *f;
    }
    fail(ErrorCode::TypeError, e.loc,
         std::string("get expects a list or record, got ") + value_kind_name(args[0].kind()));
  }
  fail(ErrorCode::TypeError, e.loc, "unknown builtin: " + name);
}

}  // namespace

Value eval(const Script& script, const Value& input, const ToolRegistry& registry,
           const Limits& limits, CostLedger& ledger) {
  Interp interp(input, registry, limits, ledger);
  return interp.run(script);
}

}  // namespace curator::script
