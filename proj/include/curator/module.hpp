#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "curator/backend.hpp"
#include "curator/descriptor.hpp"
#include "curator/script.hpp"

namespace curator {

struct RunContext {
  std::shared_ptr<LlmBackend> backend;  // null for purely local plans
  CostLedger* ledger = nullptr;
  script::Limits limits;

  CostLedger& ledger_ref() {
    if (!ledger) raise(ErrorCode::InvalidArgument, "run context has no ledger");
    return *ledger;
  }
};

// Compiled module: callable as f(Value) -> Value.
class PhysicalModule {
 public:
  explicit PhysicalModule(ModuleDescriptor descriptor)
      : descriptor_(std::move(descriptor)) {}
  virtual ~PhysicalModule() = default;

  virtual Value invoke(const Value& input, RunContext& ctx) = 0;
  virtual std::string impl_kind() const = 0;
  virtual std::shared_ptr<PhysicalModule> inner() const { return nullptr; }

  const ModuleDescriptor& descriptor() const { return descriptor_; }
  ModuleDescriptor& descriptor() { return descriptor_; }

 protected:
  ModuleDescriptor descriptor_;
};

using ModulePtr = std::shared_ptr<PhysicalModule>;

// ---- custom ----------------------------------------------------------------

// input, node config record, run context
using CustomFn = std::function<Value(const Value&, const Value&, RunContext&)>;

struct CustomEntry {
  CustomFn fn;
  Shape input_shape = Shape::Any;
  Shape output_shape = Shape::Any;
  bool pure = false;  // pure modules are smoke-invoked at compile time
};

class CustomRegistry {
 public:
  void add(const std::string& name, CustomEntry entry);
  const CustomEntry* find(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, CustomEntry> entries_;
};

// Built-in operators: load_csv, save_csv, identity, to_text, field_get.
CustomRegistry builtin_customs();

class CustomModule : public PhysicalModule {
 public:
  CustomModule(ModuleDescriptor descriptor, CustomEntry entry)
      : PhysicalModule(std::move(descriptor)), entry_(std::move(entry)) {}

  Value invoke(const Value& input, RunContext& ctx) override {
    return entry_.fn(input, descriptor_.config, ctx);
  }
  std::string impl_kind() const override { return "custom"; }
  bool pure() const { return entry_.pure; }

 private:
  CustomEntry entry_;
};

// ---- llm -------------------------------------------------------------------

// Declared validation of LLM text output; a violation triggers one re-ask.
struct OutputRule {
  enum class Kind { None, NumericRange, OneOf, Regex };

  Kind kind = Kind::None;
  double lo = 0.0, hi = 0.0;
  std::vector<std::string> labels;
  std::string pattern;

  // "none" | "numeric_range:lo,hi" | "one_of:a,b,c" | "regex:<pattern>"
  static OutputRule parse(const std::string& text);

  // parsed/validated value, or an explanation of the violation
  struct Checked {
    bool ok = false;
    Value value;
    std::string violation;
  };
  Checked check(const std::string& response) const;
};

// {field} placeholders filled from the input record; {input} renders the
// whole value; {{ and }} escape literal braces.
std::string render_prompt(const std::string& prompt_template, const Value& input);

class LlmModule : public PhysicalModule {
 public:
  LlmModule(ModuleDescriptor descriptor, std::string prompt_template, std::string system,
            OutputRule rule, std::string tag);

  Value invoke(const Value& input, RunContext& ctx) override;
  std::string impl_kind() const override { return "llm"; }

  const std::string& prompt_template() const { return prompt_template_; }
  void set_prompt_template(std::string t) { prompt_template_ = std::move(t); }
  const std::string& tag() const { return tag_; }

 private:
  std::string prompt_template_;
  std::string system_;
  OutputRule rule_;
  std::string tag_;
};

// ---- llm-generated script --------------------------------------------------

class ScriptModule : public PhysicalModule {
 public:
  ScriptModule(ModuleDescriptor descriptor, std::shared_ptr<const script::Script> program,
               std::shared_ptr<const script::ToolRegistry> tools, script::Limits limits,
               std::string tag);

  Value invoke(const Value& input, RunContext& ctx) override;
  std::string impl_kind() const override { return "script"; }

  const script::Script& program() const { return *program_; }
  void set_program(std::shared_ptr<const script::Script> p) { program_ = std::move(p); }
  const std::shared_ptr<const script::ToolRegistry>& tools() const { return tools_; }
  const script::Limits& limits() const { return limits_; }
  const std::string& tag() const { return tag_; }

 private:
  std::shared_ptr<const script::Script> program_;
  std::shared_ptr<const script::ToolRegistry> tools_;
  script::Limits limits_;
  std::string tag_;
};

// unwraps decorations down to the leaf module
ModulePtr innermost(ModulePtr module);

}  // namespace curator
