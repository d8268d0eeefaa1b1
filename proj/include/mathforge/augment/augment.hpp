#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mathforge/augment/client.hpp"
#include "mathforge/extract.hpp"
#include "mathforge/verify.hpp"

namespace mathforge::augment {

enum class EvolutionMode { DepthDecompose, DepthEnhance, BreadthMutate };
std::string to_string(EvolutionMode m);
EvolutionMode parse_evolution_mode(const std::string& s);

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvolutionParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvolutionTemplate {
  std::string id;  // e.g. "depth-decompose/v1"
  EvolutionMode mode;
  std::string text;
};

/// Versioned prompt templates. Placeholders: {question}, {sub_problems}, {scope}.
class EvolutionTemplates {
 public:
  static EvolutionTemplates defaults();
  /// Overrides from a directory of <mode>.txt files; the id becomes "<mode>/custom-<sha8>".
  static EvolutionTemplates load(const std::filesystem::path& dir);
  const EvolutionTemplate& get(EvolutionMode mode) const;
  void set(EvolutionTemplate t);

 private:
  std::map<EvolutionMode, EvolutionTemplate> by_mode_;
};

struct EvolutionSource {
  std::optional<verify::MathItem> item;
  std::vector<std::string> sub_problems;
};

struct EvolutionRequest {
  EvolutionMode mode;
  EvolutionSource source;
  std::optional<std::string> scope_constraint;
  std::string rendered_prompt;
  std::string template_id;
};

/// depth-decompose and breadth-mutate need an item; depth-enhance needs
/// sub-problems; breadth-mutate needs a scope. Violations raise
/// std::invalid_argument, unknown or missing placeholders TemplateError.
EvolutionRequest build_evolution_prompt(EvolutionMode mode, const EvolutionSource& source,
                                        const std::optional<std::string>& scope,
                                        const EvolutionTemplates& templates = EvolutionTemplates::defaults());

/// Substitutes {name} placeholders. Every placeholder in `text` must be bound
/// and every required name must occur in `text`.
std::string render_template(const std::string& text, const std::map<std::string, std::string>& values,
                            const std::vector<std::string>& required);

/// "1. foo" / "2) bar" / "3、baz" lines; raises EvolutionParseError when none.
std::vector<std::string> parse_numbered_list(const std::string& text);

/// Few-shot CoT prompts: one .txt file per prompt, id = file stem.
class PromptLibrary {
 public:
  PromptLibrary() = default;
  static PromptLibrary load(const std::filesystem::path& dir);
  void add(std::string id, std::string text);
  const std::string& get(const std::string& id) const;
  bool empty() const { return prompts_.empty(); }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::string> prompts_;
};

struct SamplingParams {
  std::string endpoint_id = "default";
  std::string model_id = "mock";
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 2048;
  double repetition_penalty = 1.0;
  std::string prompt_id;  // few-shot-CoT only
  bool allow_partial = false;
};

class PartialBatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string build_sampling_prompt(const verify::MathItem& item, verify::Strategy strategy,
                                  const std::string& few_shot_prompt);

CompletionRequest sampling_request(const verify::MathItem& item, int k, verify::Strategy strategy,
                                   const SamplingParams& params, const PromptLibrary& prompts);

/// k reasoning paths, already run through extraction. Path ids are
/// "<item id>/<model>/<strategy>/<prompt>/<index>".
std::vector<verify::ReasoningPath> sample_responses(CompletionClient& client, const verify::MathItem& item, int k,
                                                    verify::Strategy strategy, const SamplingParams& params,
                                                    const PromptLibrary& prompts,
                                                    const extract::ExtractionPatterns& patterns);

/// Wraps the raw response texts of one sampling call as paths.
std::vector<verify::ReasoningPath> paths_from_response(const verify::MathItem& item, const CompletionResponse& resp,
                                                       int k, verify::Strategy strategy,
                                                       const SamplingParams& params,
                                                       const extract::ExtractionPatterns& patterns);

class RecordError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MetaPrompt {
  std::string id;
  std::string text;  // contains {instruction} and {response}
};

/// The vicuna_v1.1 chat wrapper.
const MetaPrompt& vicuna_meta_prompt();
const MetaPrompt& meta_prompt(const std::string& id);

struct SftProvenance {
  std::string item_id;
  std::string path_id;
  verify::GenerationInfo gen;
  bool answer_correct = false;
  bool calc_correct = false;
};

struct SftRecord {
  std::string instruction;
  std::string response;
  std::string meta_prompt_id;
  SftProvenance provenance;

  std::string render() const;
};

SftRecord build_sft_record(const verify::MathItem& item, const verify::ReasoningPath& path,
                           const std::string& meta_prompt_id, const verify::Verdict* verdict = nullptr);

/// Inverse of SftRecord::render for the named meta prompt.
std::pair<std::string, std::string> parse_rendered(const std::string& rendered, const std::string& meta_prompt_id);

}  // namespace mathforge::augment
