#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "curator/descriptor.hpp"
#include "curator/ledger.hpp"
#include "curator/value.hpp"

namespace curator::script {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

struct Expr {
  enum class Kind {
    Literal, Ident, Input, Unary, Binary, Ternary,
    Builtin, ToolCall, Field, ListLit, RecordLit, Lambda
  };

  Kind kind = Kind::Literal;
  SourceLoc loc;
  Value literal;
  std::string name;   // ident | op text | builtin name | field | lambda param
  std::string tool;   // ToolCall target
  std::vector<ExprPtr> children;
  std::vector<std::string> keys;  // RecordLit field names
};

struct Stmt {
  enum class Kind { Let, Assign, If, While, ForEach, Return };

  Kind kind = Kind::Return;
  SourceLoc loc;
  std::string name;  // let/assign/for variable
  ExprPtr expr;      // value | condition | iterable | return expression
  std::vector<StmtPtr> body;
  std::vector<StmtPtr> else_body;
};

// Parsed sandbox program; ast is exactly the parse of source.
struct Script {
  std::string source;
  std::vector<StmtPtr> statements;
};

struct Limits {
  uint64_t max_steps = 1'000'000;
  uint64_t max_string_len = 1'000'000;
  uint64_t max_collection_size = 100'000;
};

struct ToolCallContext {
  CostLedger* ledger = nullptr;
  std::string tag;
};

using ToolFn = std::function<Value(const std::vector<Value>&, ToolCallContext&)>;

struct ToolEntry {
  ToolFn fn;
  Shape input_shape = Shape::Any;
  Shape output_shape = Shape::Any;
};

// Capability surface of one evaluation: scripts reach the world only
// through tools registered here.
class ToolRegistry {
 public:
  void add(const std::string& name, ToolEntry entry);
  const ToolEntry* find(const std::string& name) const;
  std::vector<std::string> names() const;

  // "tool NAME(input: SHAPE) -> SHAPE" lines for generation prompts
  std::string signatures() const;

 private:
  std::map<std::string, ToolEntry> tools_;
};

// Throws Error(ScriptParseError) with line/col; the regeneration trigger.
std::shared_ptr<const Script> parse_script(const std::string& source);

// Deterministic tree-walking evaluation with `input` bound; throws
// StepLimitExceeded / ResourceLimitExceeded / TypeError / UnknownTool /
// ToolError, each carrying the source location.
Value eval(const Script& script, const Value& input, const ToolRegistry& registry,
           const Limits& limits, CostLedger& ledger);

// The grammar summary embedded in LLMGC generation prompts.
const std::string& language_reference();

}  // namespace curator::script
