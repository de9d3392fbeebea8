#include "curator/regex_lite.hpp"

#include <memory>

#include "curator/error.hpp"

namespace curator::rx {

namespace {

constexpr int kMaxBoundedRepeat = 64;

struct Node {
  enum class Kind { Byte, Class, Any, Seq, Alt, Rep, Start, End, Empty };
  Kind kind = Kind::Empty;
  unsigned char byte = 0;
  std::bitset<256> cls;
  std::vector<std::unique_ptr<Node>> children;
  int rep_min = 0;
  int rep_max = -1;  // -1 = unbounded
};

using NodePtr = std::unique_ptr<Node>;

NodePtr make_node(Node::Kind kind) {
  auto n = std::make_unique<Node>();
  n->kind = kind;
  return n;
}

class PatternParser {
 public:
  explicit PatternParser(const std::string& pattern) : pat_(pattern) {}

  NodePtr parse() {
    NodePtr n = parse_alt();
    if (pos_ != pat_.size()) fail("unexpected \")\"");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    raise(ErrorCode::InvalidArgument, "bad regex: " + message);
  }

  bool done() const { return pos_ >= pat_.size(); }
  char peek() const { return done() ? '\0' : pat_[pos_]; }
  char take() {
    if (done()) fail("unexpected end of pattern");
    return pat_[pos_++];
  }

  NodePtr parse_alt() {
    NodePtr left = parse_concat();
    while (!done() && peek() == '|') {
      ++pos_;
      NodePtr alt = make_node(Node::Kind::Alt);
      alt->children.push_back(std::move(left));
      alt->children.push_back(parse_concat());
      left = std::move(alt);
    }
    return left;
  }

  NodePtr parse_concat() {
    NodePtr seq = make_node(Node::Kind::Seq);
    while (!done() && peek() != '|' && peek() != ')') {
      seq->children.push_back(parse_repeat());
    }
    if (seq->children.size() == 1) return std::move(seq->children[0]);
    return seq;
  }

  NodePtr parse_repeat() {
    NodePtr atom = parse_atom();
    while (!done()) {
      char c = peek();
      int min = 0, max = -1;
      if (c == '*') {
        ++pos_;
      } else if (c == '+') {
        ++pos_;
        min = 1;
      } else if (c == '?') {
        ++pos_;
        max = 1;
      } else if (c == '{') {
        size_t save = pos_;
        ++pos_;
        if (!parse_bounds(min, max)) {
          pos_ = save;  // a literal '{'
          break;
        }
      } else {
        break;
      }
      if (atom->kind == Node::Kind::Start || atom->kind == Node::Kind::End)
        fail("cannot repeat an anchor");
      NodePtr rep = make_node(Node::Kind::Rep);
      rep->rep_min = min;
      rep->rep_max = max;
      rep->children.push_back(std::move(atom));
      atom = std::move(rep);
    }
    return atom;
  }

  bool parse_bounds(int& min, int& max) {
    size_t p = pos_;
    auto digits = [&](int& out) {
      if (p >= pat_.size() || !isdigit(static_cast<unsigned char>(pat_[p]))) return false;
      long v = 0;
      while (p < pat_.size() && isdigit(static_cast<unsigned char>(pat_[p]))) {
        v = v * 10 + (pat_[p++] - '0');
        if (v > kMaxBoundedRepeat) fail("bounded repeat too large");
      }
      out = static_cast<int>(v);
      return true;
    };
    if (!digits(min)) return false;
    max = min;
    if (p < pat_.size() && pat_[p] == ',') {
      ++p;
      max = -1;
      if (p < pat_.size() && pat_[p] != '}') {
        if (!digits(max)) return false;
        if (max < min) fail("repeat bounds out of order");
      }
    }
    if (p >= pat_.size() || pat_[p] != '}') return false;
    pos_ = p + 1;
    return true;
  }

  NodePtr parse_atom() {
    char c = take();
    switch (c) {
      case '(': {
        NodePtr inner = parse_alt();
        if (done() || take() != ')') fail("missing \")\"");
        return inner;
      }
      case '[': return parse_class();
      case '.': return make_node(Node::Kind::Any);
      case '^': return make_node(Node::Kind::Start);
      case '$': return make_node(Node::Kind::End);
      case '\\': return escape_node(take());
      case '*': case '+': case '?': fail("nothing to repeat");
      case ')': fail("unmatched \")\"");
      default: {
        NodePtr n = make_node(Node::Kind::Byte);
        n->byte = static_cast<unsigned char>(c);
        return n;
      }
    }
  }

  static void add_class_shorthand(std::bitset<256>& set, char c, bool& known) {
    known = true;
    auto add_range = [&](unsigned char lo, unsigned char hi) {
      for (int b = lo; b <= hi; ++b) set.set(b);
    };
    switch (c) {
      case 'd': add_range('0', '9'); break;
      case 'w': add_range('a', 'z'); add_range('A', 'Z'); add_range('0', '9'); set.set('_'); break;
      case 's': for (char ws : {' ', '\t', '\n', '\r', '\f', '\v'}) set.set(static_cast<unsigned char>(ws)); break;
      default: known = false;
    }
  }

  NodePtr escape_node(char c) {
    NodePtr n = make_node(Node::Kind::Class);
    bool known = false;
    char lower = static_cast<char>(tolower(static_cast<unsigned char>(c)));
    add_class_shorthand(n->cls, lower, known);
    if (known) {
      if (isupper(static_cast<unsigned char>(c))) n->cls.flip();
      return n;
    }
    NodePtr b = make_node(Node::Kind::Byte);
    switch (c) {
      case 'n': b->byte = '\n'; break;
      case 't': b->byte = '\t'; break;
      case 'r': b->byte = '\r'; break;
      case 'f': b->byte = '\f'; break;
      case 'v': b->byte = '\v'; break;
      case '0': b->byte = '\0'; break;
      default:
        if (isalnum(static_cast<unsigned char>(c))) fail(std::string("unknown escape \\") + c);
        b->byte = static_cast<unsigned char>(c);
    }
    return b;
  }

  NodePtr parse_class() {
    NodePtr n = make_node(Node::Kind::Class);
    bool negate = false;
    if (!done() && peek() == '^') {
      negate = true;
      ++pos_;
    }
    bool any = false;
    while (true) {
      if (done()) fail("missing \"]\"");
      char c = take();
      if (c == ']') {
        if (!any) fail("empty character class");
        break;
      }
      unsigned char lo;
      if (c == '\\') {
        char e = take();
        bool known = false;
        add_class_shorthand(n->cls, static_cast<char>(tolower(static_cast<unsigned char>(e))), known);
        if (known) {
          if (isupper(static_cast<unsigned char>(e)))
            fail("negated shorthand not supported inside a class");
          any = true;
          continue;
        }
        switch (e) {
          case 'n': lo = '\n'; break;
          case 't': lo = '\t'; break;
          case 'r': lo = '\r'; break;
          default: lo = static_cast<unsigned char>(e);
        }
      } else {
        lo = static_cast<unsigned char>(c);
      }
      if (!done() && peek() == '-' && pos_ + 1 < pat_.size() && pat_[pos_ + 1] != ']') {
        ++pos_;
        char hc = take();
        unsigned char hi = static_cast<unsigned char>(hc == '\\' ? take() : hc);
        if (hi < lo) fail("class range out of order");
        for (int b = lo; b <= hi; ++b) n->cls.set(b);
      } else {
        n->cls.set(lo);
      }
      any = true;
    }
    if (negate) n->cls.flip();
    return n;
  }

  const std::string& pat_;
  size_t pos_ = 0;
};

}  // namespace

class Compiler {
 public:
  explicit Compiler(Regex& re) : re_(re) {}

  void compile(const Node& node) {
    emit_node(node);
    emit({Regex::Inst::Op::Match, 0, -1, -1, -1});
  }

 private:
  int emit(Regex::Inst inst) {
    re_.prog_.push_back(inst);
    return static_cast<int>(re_.prog_.size()) - 1;
  }

  void emit_node(const Node& n) {
    using Op = Regex::Inst::Op;
    switch (n.kind) {
      case Node::Kind::Empty:
        break;
      case Node::Kind::Byte:
        emit({Op::Byte, n.byte, -1, -1, -1});
        break;
      case Node::Kind::Any:
        emit({Op::Any, 0, -1, -1, -1});
        break;
      case Node::Kind::Class: {
        re_.classes_.push_back(n.cls);
        emit({Op::Class, 0, static_cast<int>(re_.classes_.size()) - 1, -1, -1});
        break;
      }
      case Node::Kind::Start:
        emit({Op::AssertStart, 0, -1, -1, -1});
        break;
      case Node::Kind::End:
        emit({Op::AssertEnd, 0, -1, -1, -1});
        break;
      case Node::Kind::Seq:
        for (const NodePtr& c : n.children) emit_node(*c);
        break;
      case Node::Kind::Alt: {
        int split = emit({Op::Split, 0, -1, -1, -1});
        re_.prog_[split].x = static_cast<int>(re_.prog_.size());
        emit_node(*n.children[0]);
        int jmp = emit({Op::Jmp, 0, -1, -1, -1});
        re_.prog_[split].y = static_cast<int>(re_.prog_.size());
        emit_node(*n.children[1]);
        re_.prog_[jmp].x = static_cast<int>(re_.prog_.size());
        break;
      }
      case Node::Kind::Rep:
        emit_rep(n);
        break;
    }
  }

  void emit_rep(const Node& n) {
    using Op = Regex::Inst::Op;
    const Node& body = *n.children[0];
    for (int i = 0; i < n.rep_min; ++i) emit_node(body);
    if (n.rep_max == -1) {
      // trailing star
      int split = emit({Op::Split, 0, -1, -1, -1});
      re_.prog_[split].x = static_cast<int>(re_.prog_.size());
      emit_node(body);
      int jmp = emit({Op::Jmp, 0, -1, -1, -1});
      re_.prog_[jmp].x = split;
      re_.prog_[split].y = static_cast<int>(re_.prog_.size());
    } else {
      std::vector<int> splits;
      for (int i = n.rep_min; i < n.rep_max; ++i) {
        int split = emit({Op::Split, 0, -1, -1, -1});
        re_.prog_[split].x = static_cast<int>(re_.prog_.size());
        splits.push_back(split);
        emit_node(body);
      }
      int end = static_cast<int>(re_.prog_.size());
      for (int split : splits) re_.prog_[split].y = end;
    }
  }

  Regex& re_;
};

Regex Regex::compile(const std::string& pattern) {
  PatternParser parser(pattern);
  NodePtr ast = parser.parse();
  Regex re;
  Compiler(re).compile(*ast);
  return re;
}

int Regex::run(const std::string& s, size_t start, bool end_only) const {
  const size_t n = s.size();
  std::vector<int> current, next;
  std::vector<uint32_t> mark(prog_.size(), 0);
  uint32_t gen = 0;
  int last_accept = -1;

  auto add = [&](auto&& self, std::vector<int>& set, int pc, size_t pos) -> bool {
    // returns true when an accept is reachable without consuming input
    if (pc < 0 || mark[pc] == gen) return false;
    mark[pc] = gen;
    const Inst& inst = prog_[pc];
    switch (inst.op) {
      case Inst::Op::Jmp:
        return self(self, set, inst.x, pos);
      case Inst::Op::Split: {
        bool a = self(self, set, inst.x, pos);
        bool b = self(self, set, inst.y, pos);
        return a || b;
      }
      case Inst::Op::AssertStart:
        return pos == 0 && self(self, set, pc + 1, pos);
      case Inst::Op::AssertEnd:
        return pos == n && self(self, set, pc + 1, pos);
      case Inst::Op::Match:
        return true;
      default:
        set.push_back(pc);
        return false;
    }
  };

  ++gen;
  if (add(add, current, 0, start)) {
    if (!end_only || start == n) last_accept = 0;
  }

  for (size_t pos = start; pos < n && !current.empty(); ++pos) {
    unsigned char byte = static_cast<unsigned char>(s[pos]);
    ++gen;
    next.clear();
    bool accepted = false;
    for (int pc : current) {
      const Inst& inst = prog_[pc];
      bool ok = false;
      switch (inst.op) {
        case Inst::Op::Byte: ok = inst.byte == byte; break;
        case Inst::Op::Any: ok = byte != '\n'; break;
        case Inst::Op::Class: ok = classes_[inst.cls].test(byte); break;
        default: break;
      }
      if (ok && add(add, next, pc + 1, pos + 1)) accepted = true;
    }
    if (accepted && (!end_only || pos + 1 == n)) {
      last_accept = static_cast<int>(pos + 1 - start);
    }
    current.swap(next);
  }
  return last_accept;
}

bool Regex::full_match(const std::string& s) const { return run(s, 0, true) >= 0; }

bool Regex::search(const std::string& s) const {
  for (size_t i = 0; i <= s.size(); ++i) {
    if (run(s, i, false) >= 0) return true;
  }
  return false;
}

std::vector<std::string> Regex::find_all(const std::string& s) const {
  std::vector<std::string> out;
  size_t i = 0;
  while (i <= s.size()) {
    int len = run(s, i, false);
    if (len > 0) {
      out.push_back(s.substr(i, static_cast<size_t>(len)));
      i += static_cast<size_t>(len);
    } else if (len == 0) {
      i += 1;  // empty match never repeats in place
    } else {
      i += 1;
    }
  }
  return out;
}

}  // namespace curator::rx
