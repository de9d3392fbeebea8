#include <filesystem>
#include <fstream>
#include <sstream>

#include "curator/compiler.hpp"

namespace curator {

namespace {

// Built-in template sources; templates/*.lm in the repository carry the same
// text for users to copy and edit.

constexpr const char* kEntityResolution = R"(# name: entity_resolution
# description: Load record pairs, decide matches with an LLM, save the labels.
# param: data

pipeline entity_resolution {
  param out = "er_labels.csv";

  node load: load_csv(path=${data});
  node match: resolve(in="record", out="text") llm(prompt="""Do these two records refer to the same real-world entity?
{input}
Answer yes or no.""", validate="one_of:yes,no", tag="er");
  node save: save_csv(path=${out});

  load -> match -> save;
}
)";

constexpr const char* kNameExtraction = R"(# name: name_extraction
# description: Tokenize passages, keep candidate phrases, tag person names.
# param: data

pipeline name_extraction {
  param out = "names.csv";

  node load: load_csv(path=${data});
  node tokenize: transform(in="record", out="list") llmgc(task="Split the passage text in input.text into word tokens and return the list of tokens.", tag="tokenize");
  node nouns: transform(in="list", out="list") llmgc(task="Given a list of tokens in input, keep candidate name phrases: join runs of capitalized tokens into single phrases and return the list of phrases.", tag="nouns");
  node tag: classify(in="list", out="text") llm(prompt="""Candidate phrases: {input}
Reply with the phrases that are person names, separated by "; ".
Reply with none if there is no person name.""", tag="tag");
  node save: save_csv(path=${out});

  load -> tokenize -> nouns -> tag -> save;
}
)";

constexpr const char* kDataImputation = R"(# name: data_imputation
# description: Fill a missing attribute with a generated script that escalates hard cases to the LLM.
# param: data

pipeline data_imputation {
  param out = "imputed.csv";

  node load: load_csv(path=${data});
  node impute: impute(in="record", out="text") llmgc(task="Return the manufacturer of the product record in input as a short brand name. Decide from keywords in the name and description where they are decisive; otherwise ask the llm tool with a short question.", tools=["llm"], tag="impute");
  node save: save_csv(path=${out});

  load -> impute -> save;
}
)";

TemplateInfo parse_template_source(const std::string& body, const std::string& origin) {
  TemplateInfo info;
  info.body = body;
  std::istringstream lines(body);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') break;  // front matter is the leading comment block
    std::string rest = line.substr(1);
    size_t b = rest.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    rest = rest.substr(b);
    auto starts = [&](const char* key) { return rest.rfind(key, 0) == 0; };
    if (starts("name:")) {
      info.name = rest.substr(5);
    } else if (starts("description:")) {
      info.description = rest.substr(12);
    } else if (starts("param:")) {
      info.required_params.push_back(rest.substr(6));
    } else {
      continue;
    }
    auto strip = [](std::string& s) {
      size_t x = s.find_first_not_of(' ');
      s = x == std::string::npos ? "" : s.substr(x);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
    };
    if (!info.required_params.empty()) strip(info.required_params.back());
    strip(info.name);
    strip(info.description);
  }
  if (info.name.empty())
    raise(ErrorCode::InvalidArgument, "template missing \"# name:\" front matter: " + origin);
  parse_pipeline(body);  // bodies must parse on load
  return info;
}

}  // namespace

TemplateRegistry TemplateRegistry::with_builtins() {
  TemplateRegistry registry;
  registry.add(parse_template_source(kEntityResolution, "builtin:entity_resolution"));
  registry.add(parse_template_source(kNameExtraction, "builtin:name_extraction"));
  registry.add(parse_template_source(kDataImputation, "builtin:data_imputation"));
  return registry;
}

void TemplateRegistry::add(TemplateInfo info) {
  for (TemplateInfo& existing : templates_) {
    if (existing.name == info.name) {
      existing = std::move(info);  // later sources override
      return;
    }
  }
  templates_.push_back(std::move(info));
}

void TemplateRegistry::load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) return;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".lm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& file : files) {
    std::ifstream in(file);
    std::ostringstream buf;
    buf << in.rdbuf();
    add(parse_template_source(buf.str(), file.string()));
  }
}

std::vector<TemplateInfo> TemplateRegistry::list() const { return templates_; }

const TemplateInfo* TemplateRegistry::find(const std::string& name) const {
  for (const TemplateInfo& t : templates_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

PipelineSpec TemplateRegistry::instantiate(const std::string& name,
                                           const std::map<std::string, Value>& params) const {
  const TemplateInfo* info = find(name);
  if (!info) raise(ErrorCode::UnknownTemplate, "unknown template \"" + name + "\"");

  PipelineSpec spec = parse_pipeline(info->body);
  for (const std::string& required : info->required_params) {
    if (!params.count(required) && !spec.find_param(required))
      raise(ErrorCode::MissingParam,
            "template \"" + name + "\" needs param \"" + required + "\"");
  }
  for (const auto& [key, value] : params) {
    bool declared = spec.find_param(key) != nullptr ||
                    std::find(info->required_params.begin(), info->required_params.end(),
                              key) != info->required_params.end();
    if (!declared)
      raise(ErrorCode::InvalidArgument,
            "template \"" + name + "\" has no param \"" + key + "\"");
    bool replaced = false;
    for (auto& [pname, pvalue] : spec.params) {
      if (pname == key) {
        pvalue = value;
        replaced = true;
        break;
      }
    }
    if (!replaced) spec.params.emplace_back(key, value);
  }
  return spec;
}

}  // namespace curator
