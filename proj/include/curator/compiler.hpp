#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "curator/dsl.hpp"
#include "curator/module.hpp"

namespace curator {

struct PhysicalPlan {
  PipelineSpec spec;
  std::vector<std::pair<std::string, ModulePtr>> order;  // valid topological order
  std::vector<EdgeSpec> edges;

  ModulePtr find(const std::string& node_id) const;
  std::vector<std::string> sources() const;  // no incoming edges
  std::vector<std::string> sinks() const;    // no outgoing edges
};

// Resolves every logical operator to a physical module: custom bindings by
// registry lookup, llm bindings to prompt-backed modules, llmgc bindings via
// LLM code generation; decorations wrap innermost-first. Throws
// UnknownCustomModule / UnresolvedParam / GenerationFailed.
PhysicalPlan compile(const PipelineSpec& spec, const CustomRegistry& customs,
                     std::shared_ptr<LlmBackend> backend, CostLedger& ledger);

// Generation prompt = fixed preamble + script grammar + tool signatures +
// task + examples; the first fenced code block of the reply is parsed, with
// parse errors fed back for up to max_attempts tries.
std::shared_ptr<const script::Script> llmgc_generate(
    const std::string& task, const std::vector<TestCase>& examples,
    const script::ToolRegistry& tools, LlmBackend& backend, CostLedger& ledger,
    int max_attempts, const std::string& tag, const std::string& instructions = "",
    const std::string& snippets = "");

std::string extract_code_block(const std::string& response);

// Builds the capability registry an llmgc script runs against: the built-in
// "llm" and "calc" tools plus any custom module exposed by name.
std::shared_ptr<script::ToolRegistry> build_tool_registry(
    const std::vector<std::string>& tool_names, const CustomRegistry& customs,
    std::shared_ptr<LlmBackend> backend, const std::string& tag);

struct TemplateInfo {
  std::string name;
  std::string description;
  std::vector<std::string> required_params;
  std::string body;  // .lm source
};

// Named, parameterized .lm pipelines. Ships entity_resolution,
// name_extraction and data_imputation; more load from a templates directory
// of .lm files with "# name:" / "# description:" / "# param:" front matter.
class TemplateRegistry {
 public:
  static TemplateRegistry with_builtins();

  void load_directory(const std::string& dir);
  void add(TemplateInfo info);

  std::vector<TemplateInfo> list() const;
  const TemplateInfo* find(const std::string& name) const;

  // Binds params and re-validates; throws UnknownTemplate / MissingParam.
  PipelineSpec instantiate(const std::string& name,
                           const std::map<std::string, Value>& params) const;

 private:
  std::vector<TemplateInfo> templates_;
};

}  // namespace curator
