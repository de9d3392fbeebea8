#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "curator/script.hpp"

namespace curator::script {

void ToolRegistry::add(const std::string& name, ToolEntry entry) {
  if (tools_.count(name))
    raise(ErrorCode::InvalidArgument, "tool already registered: " + name);
  tools_[name] = std::move(entry);
}

const ToolEntry* ToolRegistry::find(const std::string& name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : tools_) out.push_back(name);
  return out;
}

std::string ToolRegistry::signatures() const {
  std::string out;
  for (const auto& [name, entry] : tools_) {
    out += "tool " + name + "(input: " + shape_name(entry.input_shape) + ") -> " +
           shape_name(entry.output_shape) + "\n";
  }
  return out;
}

namespace {

enum class Tok { Ident, Int, Float, String, Op, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  SourceLoc loc;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      Token t = next();
      bool end = t.type == Tok::End;
      out.push_back(std::move(t));
      if (end) return out;
    }
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    raise_at(ErrorCode::ScriptParseError, {line_, col_}, msg);
  }

  char peek(size_t k = 0) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#' || (c == '/' && peek(1) == '/')) {
        while (pos_ < src_.size() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  Token next() {
    skip_trivia();
    Token t;
    t.loc = {line_, col_};
    if (pos_ >= src_.size()) return t;

    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.type = Tok::Ident;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
        t.text.push_back(advance());
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      bool is_float = false;
      while (std::isdigit(static_cast<unsigned char>(peek()))) t.text.push_back(advance());
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        is_float = true;
        t.text.push_back(advance());
        while (std::isdigit(static_cast<unsigned char>(peek()))) t.text.push_back(advance());
      }
      if ((peek() == 'e' || peek() == 'E') &&
          (std::isdigit(static_cast<unsigned char>(peek(1))) ||
           ((peek(1) == '+' || peek(1) == '-') &&
            std::isdigit(static_cast<unsigned char>(peek(2)))))) {
        is_float = true;
        t.text.push_back(advance());
        if (peek() == '+' || peek() == '-') t.text.push_back(advance());
        while (std::isdigit(static_cast<unsigned char>(peek()))) t.text.push_back(advance());
      }
      t.type = is_float ? Tok::Float : Tok::Int;
      return t;
    }
    if (c == '"') {
      advance();
      t.type = Tok::String;
      while (true) {
        if (pos_ >= src_.size()) fail("unterminated string");
        char ch = advance();
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= src_.size()) fail("unterminated escape");
          char e = advance();
          switch (e) {
            case 'n': t.text.push_back('\n'); break;
            case 't': t.text.push_back('\t'); break;
            case 'r': t.text.push_back('\r'); break;
            case '"': t.text.push_back('"'); break;
            case '\\': t.text.push_back('\\'); break;
            default: fail(std::string("unknown escape \\") + e);
          }
        } else {
          t.text.push_back(ch);
        }
      }
      return t;
    }

    t.type = Tok::Op;
    static const char* two_char[] = {"==", "!=", "<=", ">=", "&&", "||", "=>"};
    for (const char* op : two_char) {
      if (c == op[0] && peek(1) == op[1]) {
        advance();
        advance();
        t.text = op;
        return t;
      }
    }
    switch (c) {
      case '+': case '-': case '*': case '/': case '%': case '<': case '>':
      case '!': case '=': case '?': case ':': case '.': case ',': case ';':
      case '(': case ')': case '{': case '}': case '[': case ']':
        advance();
        t.text = std::string(1, c);
        return t;
      default:
        fail(std::string("unexpected character \"") + c + "\"");
    }
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {
    tokens_ = Lexer(source_).run();
  }

  std::shared_ptr<const Script> parse() {
    auto script = std::make_shared<Script>();
    script->source = source_;
    while (!at_end()) script->statements.push_back(parse_stmt());
    return script;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  const Token& ahead(size_t k = 1) const {
    return tokens_[std::min(pos_ + k, tokens_.size() - 1)];
  }
  bool at_end() const { return cur().type == Tok::End; }

  [[noreturn]] void fail(const Token& at, const std::string& msg) {
    std::string got = at.type == Tok::End ? "end of input" : "\"" + at.text + "\"";
    raise_at(ErrorCode::ScriptParseError, at.loc, msg + ", got " + got);
  }

  bool at_op(const std::string& op) const { return cur().type == Tok::Op && cur().text == op; }
  bool at_kw(const std::string& kw) const {
    return cur().type == Tok::Ident && cur().text == kw;
  }

  Token take() { return tokens_[pos_++]; }

  void expect_op(const std::string& op) {
    if (!at_op(op)) fail(cur(), "expected \"" + op + "\"");
    ++pos_;
  }

  std::string expect_ident(const std::string& what) {
    if (cur().type != Tok::Ident) fail(cur(), "expected " + what);
    return take().text;
  }

  StmtPtr parse_stmt() {
    auto stmt = std::make_unique<Stmt>();
    stmt->loc = cur().loc;
    if (at_kw("let")) {
      ++pos_;
      stmt->kind = Stmt::Kind::Let;
      stmt->name = expect_ident("variable name");
      expect_op("=");
      stmt->expr = parse_expr();
      expect_op(";");
      return stmt;
    }
    if (at_kw("return")) {
      ++pos_;
      stmt->kind = Stmt::Kind::Return;
      stmt->expr = parse_expr();
      expect_op(";");
      return stmt;
    }
    if (at_kw("if")) {
      ++pos_;
      stmt->kind = Stmt::Kind::If;
      expect_op("(");
      stmt->expr = parse_expr();
      expect_op(")");
      stmt->body = parse_block();
      if (at_kw("else")) {
        ++pos_;
        if (at_kw("if")) {
          stmt->else_body.push_back(parse_stmt());  // else-if chain
        } else {
          stmt->else_body = parse_block();
        }
      }
      return stmt;
    }
    if (at_kw("while")) {
      ++pos_;
      stmt->kind = Stmt::Kind::While;
      expect_op("(");
      stmt->expr = parse_expr();
      expect_op(")");
      stmt->body = parse_block();
      return stmt;
    }
    if (at_kw("for")) {
      ++pos_;
      stmt->kind = Stmt::Kind::ForEach;
      expect_op("(");
      stmt->name = expect_ident("loop variable");
      if (!at_kw("in")) fail(cur(), "expected \"in\"");
      ++pos_;
      stmt->expr = parse_expr();
      expect_op(")");
      stmt->body = parse_block();
      return stmt;
    }
    if (cur().type == Tok::Ident && ahead().type == Tok::Op && ahead().text == "=") {
      stmt->kind = Stmt::Kind::Assign;
      stmt->name = take().text;
      ++pos_;  // =
      stmt->expr = parse_expr();
      expect_op(";");
      return stmt;
    }
    fail(cur(), "expected a statement");
  }

  std::vector<StmtPtr> parse_block() {
    expect_op("{");
    std::vector<StmtPtr> out;
    while (!at_op("}")) {
      if (at_end()) fail(cur(), "expected \"}\"");
      out.push_back(parse_stmt());
    }
    ++pos_;
    return out;
  }

  ExprPtr make_expr(Expr::Kind kind, SourceLoc loc) {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->loc = loc;
    return e;
  }

  ExprPtr parse_expr() { return parse_ternary(); }

  ExprPtr parse_ternary() {
    ExprPtr cond = parse_or();
    if (!at_op("?")) return cond;
    SourceLoc loc = take().loc;
    ExprPtr then_e = parse_expr();
    expect_op(":");
    ExprPtr else_e = parse_ternary();
    ExprPtr e = make_expr(Expr::Kind::Ternary, loc);
    e->children.push_back(std::move(cond));
    e->children.push_back(std::move(then_e));
    e->children.push_back(std::move(else_e));
    return e;
  }

  ExprPtr parse_binary_level(int level) {
    static const std::vector<std::vector<std::string>> levels = {
        {"||"}, {"&&"}, {"==", "!="}, {"<", "<=", ">", ">="}, {"+", "-"}, {"*", "/", "%"}};
    if (level >= static_cast<int>(levels.size())) return parse_unary();
    ExprPtr left = parse_binary_level(level + 1);
    while (cur().type == Tok::Op) {
      const auto& ops = levels[level];
      if (std::find(ops.begin(), ops.end(), cur().text) == ops.end()) break;
      Token op = take();
      ExprPtr e = make_expr(Expr::Kind::Binary, op.loc);
      e->name = op.text;
      e->children.push_back(std::move(left));
      e->children.push_back(parse_binary_level(level + 1));
      left = std::move(e);
    }
    return left;
  }

  ExprPtr parse_or() { return parse_binary_level(0); }

  ExprPtr parse_unary() {
    if (at_op("!") || at_op("-")) {
      Token op = take();
      ExprPtr e = make_expr(Expr::Kind::Unary, op.loc);
      e->name = op.text;
      e->children.push_back(parse_unary());
      return e;
    }
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (at_op(".")) {
      SourceLoc loc = take().loc;
      ExprPtr f = make_expr(Expr::Kind::Field, loc);
      f->name = expect_ident("field name");
      f->children.push_back(std::move(e));
      e = std::move(f);
    }
    return e;
  }

  std::vector<ExprPtr> parse_call_args() {
    expect_op("(");
    std::vector<ExprPtr> args;
    if (!at_op(")")) {
      while (true) {
        args.push_back(parse_expr());
        if (at_op(",")) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    expect_op(")");
    return args;
  }

  ExprPtr parse_primary() {
    const Token& t = cur();
    switch (t.type) {
      case Tok::Int: {
        int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{}) fail(t, "integer literal out of range");
        ExprPtr e = make_expr(Expr::Kind::Literal, take().loc);
        e->literal = Value::integer(v);
        return e;
      }
      case Tok::Float: {
        double v = std::strtod(t.text.c_str(), nullptr);
        ExprPtr e = make_expr(Expr::Kind::Literal, take().loc);
        e->literal = Value::real(v);
        return e;
      }
      case Tok::String: {
        ExprPtr e = make_expr(Expr::Kind::Literal, t.loc);
        e->literal = Value::text(t.text);
        ++pos_;
        return e;
      }
      case Tok::Ident:
        return parse_ident_expr();
      case Tok::Op:
        if (t.text == "(") {
          ++pos_;
          ExprPtr e = parse_expr();
          expect_op(")");
          return e;
        }
        if (t.text == "[") return parse_list_literal();
        if (t.text == "{") return parse_record_literal();
        fail(t, "expected an expression");
      default:
        fail(t, "expected an expression");
    }
  }

  ExprPtr parse_ident_expr() {
    Token t = take();
    if (t.text == "true" || t.text == "false") {
      ExprPtr e = make_expr(Expr::Kind::Literal, t.loc);
      e->literal = Value::boolean(t.text == "true");
      return e;
    }
    if (t.text == "null") {
      ExprPtr e = make_expr(Expr::Kind::Literal, t.loc);
      return e;
    }
    if (t.text == "input") {
      return make_expr(Expr::Kind::Input, t.loc);
    }
    if (t.text == "call" && at_op("(")) {
      ++pos_;
      if (cur().type != Tok::String) fail(cur(), "expected tool name string");
      ExprPtr e = make_expr(Expr::Kind::ToolCall, t.loc);
      e->tool = take().text;
      while (at_op(",")) {
        ++pos_;
        e->children.push_back(parse_expr());
      }
      expect_op(")");
      return e;
    }
    if (at_op("(")) {
      ExprPtr e = make_expr(Expr::Kind::Builtin, t.loc);
      e->name = t.text;
      e->children = parse_call_args();
      return e;
    }
    if (at_op("=>")) {
      ++pos_;
      ExprPtr e = make_expr(Expr::Kind::Lambda, t.loc);
      e->name = t.text;
      e->children.push_back(parse_expr());
      return e;
    }
    ExprPtr e = make_expr(Expr::Kind::Ident, t.loc);
    e->name = t.text;
    return e;
  }

  ExprPtr parse_list_literal() {
    SourceLoc loc = take().loc;  // [
    ExprPtr e = make_expr(Expr::Kind::ListLit, loc);
    if (!at_op("]")) {
      while (true) {
        e->children.push_back(parse_expr());
        if (at_op(",")) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    expect_op("]");
    return e;
  }

  ExprPtr parse_record_literal() {
    SourceLoc loc = take().loc;  // {
    ExprPtr e = make_expr(Expr::Kind::RecordLit, loc);
    if (!at_op("}")) {
      while (true) {
        std::string key =
            cur().type == Tok::String ? take().text : expect_ident("field name");
        expect_op(":");
        e->keys.push_back(key);
        e->children.push_back(parse_expr());
        if (at_op(",")) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    expect_op("}");
    return e;
  }

  std::string source_;
  std::vector<Token> tokens_;
  size_t pos_ = 0;
};

}  // namespace

std::shared_ptr<const Script> parse_script(const std::string& source) {
  return Parser(source).parse();
}

const std::string& language_reference() {
  static const std::string text = R"(Statements:
  let NAME = expr;          declare a variable
  NAME = expr;              reassign
  if (expr) { ... } else { ... }
  while (expr) { ... }
  for (NAME in expr) { ... }
  return expr;              final result of the script

Expressions:
  literals: 1, 2.5, "text", true, false, null
  input                     the module input value
  arithmetic + - * / %, comparisons == != < <= > >=, boolean && || !
  cond ? a : b
  lists [a, b, c], records {name: expr, ...}, field access rec.name
  x => expr                 lambda, only as the 2nd argument of map/filter

Builtins:
  lower(s) upper(s) trim(s) split(s, sep) join(list, sep) contains(s, sub)
  replace(s, from, to) regex_match(s, pattern) regex_findall(s, pattern)
  len(x) map(list, x => e) filter(list, x => e) append(list, v) get(list, i)

Tools:
  call("tool_name", args...) invokes a registered tool.

Rules: conditions must be booleans; "+" concatenates when either side is
text; there are no user-defined functions and no file or network access.
Return exactly one fenced code block containing only the script.)";
  return text;
}

}  // namespace curator::script
