#include "mathforge/augment/augment.hpp"

#include <regex>
#include <set>

#include "mathforge/io.hpp"
#include "mathforge/text.hpp"

namespace mathforge::augment {

std::string to_string(EvolutionMode m) {
  switch (m) {
    case EvolutionMode::DepthDecompose: return "depth-decompose";
    case EvolutionMode::DepthEnhance: return "depth-enhance";
    case EvolutionMode::BreadthMutate: return "breadth-mutate";
  }
  return "?";
}

EvolutionMode parse_evolution_mode(const std::string& s) {
  if (s == "depth-decompose") return EvolutionMode::DepthDecompose;
  if (s == "depth-enhance") return EvolutionMode::DepthEnhance;
  if (s == "breadth-mutate") return EvolutionMode::BreadthMutate;
  throw std::invalid_argument("unknown evolution mode '" + s + "'");
}

namespace {

const char* kDecompose =
    "Break the following math word problem into a sequence of simpler sub-problems. Each sub-problem must be "
    "answerable on its own once the earlier ones are solved, and the order of the list must follow the steps of "
    "a step-by-step solution. Reply with a numbered list only, one sub-problem per line.\n"
    "\n"
    "Problem:\n"
    "{question}\n";

const char* kEnhance =
    "Below are the sub-problems of a math word problem, in solving order. Rewrite each one to be more difficult, "
    "for example by adding a constraint, an extra step or less convenient numbers, while keeping it solvable "
    "with a single numeric answer. Reply with a numbered list only, one rewritten sub-problem per line.\n"
    "\n"
    "Sub-problems:\n"
    "{sub_problems}\n";

const char* kMutate =
    "Write one new math word problem based on the problem below. Stay within this scope: {scope}\n"
    "The new problem must be solvable and have a single numeric answer. Reply with the new problem only.\n"
    "\n"
    "Problem:\n"
    "{question}\n";

std::vector<std::string> required_placeholders(EvolutionMode m) {
  switch (m) {
    case EvolutionMode::DepthDecompose: return {"question"};
    case EvolutionMode::DepthEnhance: return {"sub_problems"};
    case EvolutionMode::BreadthMutate: return {"question", "scope"};
  }
  return {};
}

}  // namespace

EvolutionTemplates EvolutionTemplates::defaults() {
  EvolutionTemplates t;
  t.set({"depth-decompose/v1", EvolutionMode::DepthDecompose, kDecompose});
  t.set({"depth-enhance/v1", EvolutionMode::DepthEnhance, kEnhance});
  t.set({"breadth-mutate/v1", EvolutionMode::BreadthMutate, kMutate});
  return t;
}

EvolutionTemplates EvolutionTemplates::load(const std::filesystem::path& dir) {
  EvolutionTemplates t = defaults();
  for (EvolutionMode m : {EvolutionMode::DepthDecompose, EvolutionMode::DepthEnhance, EvolutionMode::BreadthMutate}) {
    const std::filesystem::path file = dir / (to_string(m) + ".txt");
    if (!std::filesystem::exists(file)) continue;
    std::string text = io::read_file(file);
    const std::string id = to_string(m) + "/sha-" + io::sha256_hex(text).substr(0, 8);
    t.set({id, m, std::move(text)});
  }
  return t;
}

const EvolutionTemplate& EvolutionTemplates::get(EvolutionMode mode) const {
  auto it = by_mode_.find(mode);
  if (it == by_mode_.end()) throw TemplateError("no template for " + to_string(mode));
  return it->second;
}

void EvolutionTemplates::set(EvolutionTemplate t) {
  const EvolutionMode m = t.mode;
  by_mode_.insert_or_assign(m, std::move(t));
}

std::string render_template(const std::string& text, const std::map<std::string, std::string>& values,
                            const std::vector<std::string>& required) {
  std::string out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    const std::size_t close = text.find('}', open);
    std::string name = close == std::string::npos ? std::string() : text.substr(open + 1, close - open - 1);
    const bool is_name = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || c == '_';
    });
    if (!is_name) {
      out.push_back('{');
      pos = open + 1;
      continue;
    }
    auto it = values.find(name);
    if (it == values.end()) throw TemplateError("unbound placeholder {" + name + "}");
    out += it->second;
    seen.insert(name);
    pos = close + 1;
  }
  for (const std::string& r : required) {
    if (!seen.count(r)) throw TemplateError("template is missing placeholder {" + r + "}");
  }
  return out;
}

EvolutionRequest build_evolution_prompt(EvolutionMode mode, const EvolutionSource& source,
                                        const std::optional<std::string>& scope,
                                        const EvolutionTemplates& templates) {
  std::map<std::string, std::string> values;
  switch (mode) {
    case EvolutionMode::DepthDecompose:
      if (!source.item) throw std::invalid_argument("depth-decompose needs a source item");
      values["question"] = source.item->question;
      break;
    case EvolutionMode::DepthEnhance: {
      if (source.sub_problems.empty()) throw std::invalid_argument("depth-enhance needs at least one sub-problem");
      std::string list;
      for (std::size_t i = 0; i < source.sub_problems.size(); ++i) {
        list += std::to_string(i + 1) + ". " + source.sub_problems[i];
        if (i + 1 < source.sub_problems.size()) list += '\n';
      }
      values["sub_problems"] = list;
      break;
    }
    case EvolutionMode::BreadthMutate:
      if (!source.item) throw std::invalid_argument("breadth-mutate needs a source item");
      if (!scope || scope->empty()) throw std::invalid_argument("breadth-mutate needs a scope constraint");
      values["question"] = source.item->question;
      values["scope"] = *scope;
      break;
  }
  const EvolutionTemplate& t = templates.get(mode);
  EvolutionRequest req{mode, source, mode == EvolutionMode::BreadthMutate ? scope : std::nullopt,
                       render_template(t.text, values, required_placeholders(mode)), t.id};
  return req;
}

std::vector<std::string> parse_numbered_list(const std::string& body) {
  static const std::regex item_re(R"(^\s*(\d+)\s*(?:[.):]|、)\s*(.+?)\s*$)");
  std::vector<std::string> out;
  for (std::string_view line : text::split_lines(body)) {
    std::cmatch m;
    if (std::regex_match(line.data(), line.data() + line.size(), m, item_re)) out.push_back(m[2].str());
  }
  if (out.empty()) throw EvolutionParseError("no numbered items in model output");
  return out;
}

// ---------------------------------------------------------------------------

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("prompt directory " + dir.string() + " not found");
  PromptLibrary lib;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      lib.add(entry.path().stem().string(), io::read_file(entry.path()));
    }
  }
  return lib;
}

void PromptLibrary::add(std::string id, std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' ')) text.pop_back();
  prompts_.insert_or_assign(std::move(id), std::move(text));
}

const std::string& PromptLibrary::get(const std::string& id) const {
  auto it = prompts_.find(id);
  if (it == prompts_.end()) throw std::invalid_argument("unknown CoT prompt '" + id + "'");
  return it->second;
}

std::vector<std::string> PromptLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : prompts_) out.push_back(id);
  return out;
}

std::string build_sampling_prompt(const verify::MathItem& item, verify::Strategy strategy,
                                  const std::string& few_shot_prompt) {
  switch (strategy) {
    case verify::Strategy::ZeroShot: return item.question;
    case verify::Strategy::ZeroShotCoT: return item.question + "\nLet's think step by step.";
    case verify::Strategy::FewShotCoT:
      return few_shot_prompt + "\n\nQuestion: " + item.question + "\nLet's think step by step\n";
  }
  return item.question;
}

CompletionRequest sampling_request(const verify::MathItem& item, int k, verify::Strategy strategy,
                                   const SamplingParams& params, const PromptLibrary& prompts) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::string shots;
  if (strategy == verify::Strategy::FewShotCoT) {
    if (params.prompt_id.empty()) throw std::invalid_argument("few-shot-CoT needs a prompt id");
    shots = prompts.get(params.prompt_id);
  }
  CompletionRequest req;
  req.endpoint_id = params.endpoint_id;
  req.model_id = params.model_id;
  req.messages = {{"user", build_sampling_prompt(item, strategy, shots)}};
  req.temperature = params.temperature;
  req.top_p = params.top_p;
  req.max_tokens = params.max_tokens;
  req.repetition_penalty = params.repetition_penalty;
  req.n_samples = k;
  return req;
}

std::vector<verify::ReasoningPath> paths_from_response(const verify::MathItem& item, const CompletionResponse& resp,
                                                       int k, verify::Strategy strategy,
                                                       const SamplingParams& params,
                                                       const extract::ExtractionPatterns& patterns) {
  if (static_cast<int>(resp.texts.size()) < k && !params.allow_partial) {
    throw PartialBatchError("item " + item.id + ": got " + std::to_string(resp.texts.size()) + " of " +
                            std::to_string(k) + " samples");
  }
  const std::string prompt_id = strategy == verify::Strategy::FewShotCoT ? params.prompt_id : std::string();
  verify::GenerationInfo gen{params.model_id, strategy, params.temperature, prompt_id};
  std::vector<verify::ReasoningPath> out;
  const std::string prefix = item.id + "/" + params.model_id + "/" + verify::to_string(strategy) + "/" +
                             (prompt_id.empty() ? "-" : prompt_id) + "/";
  for (std::size_t i = 0; i < resp.texts.size() && static_cast<int>(i) < k; ++i) {
    out.push_back(verify::ReasoningPath::build(prefix + std::to_string(i), item.id, resp.texts[i], gen, patterns));
  }
  return out;
}

std::vector<verify::ReasoningPath> sample_responses(CompletionClient& client, const verify::MathItem& item, int k,
                                                    verify::Strategy strategy, const SamplingParams& params,
                                                    const PromptLibrary& prompts,
                                                    const extract::ExtractionPatterns& patterns) {
  const CompletionRequest req = sampling_request(item, k, strategy, params, prompts);
  return paths_from_response(item, complete(client, req), k, strategy, params, patterns);
}

// ---------------------------------------------------------------------------

const MetaPrompt& vicuna_meta_prompt() {
  static const MetaPrompt p{
      "vicuna_v1.1",
      "A chat between a curious user and an artificial intelligence assistant. The assistant gives helpful, "
      "detailed, and polite answers to the user's questions. USER: {instruction}. ASSISTANT: {response}"};
  return p;
}

const MetaPrompt& meta_prompt(const std::string& id) {
  if (id == vicuna_meta_prompt().id) return vicuna_meta_prompt();
  throw std::invalid_argument("unknown meta prompt '" + id + "'");
}

std::string SftRecord::render() const {
  return render_template(meta_prompt(meta_prompt_id).text, {{"instruction", instruction}, {"response", response}},
                         {"instruction", "response"});
}

SftRecord build_sft_record(const verify::MathItem& item, const verify::ReasoningPath& path,
                           const std::string& meta_prompt_id, const verify::Verdict* verdict) {
  if (text::trim(path.text).empty()) throw RecordError("path " + path.id + " has an empty response");
  if (text::trim(item.question).empty()) throw RecordError("item " + item.id + " has an empty question");
  meta_prompt(meta_prompt_id);  // validates the id
  SftRecord r;
  r.instruction = item.question;
  r.response = path.text;
  r.meta_prompt_id = meta_prompt_id;
  r.provenance.item_id = item.id;
  r.provenance.path_id = path.id;
  r.provenance.gen = path.gen;
  if (verdict) {
    r.provenance.answer_correct = verdict->answer_correct;
    r.provenance.calc_correct = verdict->calc_correct;
  }
  return r;
}

std::pair<std::string, std::string> parse_rendered(const std::string& rendered, const std::string& meta_prompt_id) {
  const std::string& t = meta_prompt(meta_prompt_id).text;
  const std::size_t i = t.find("{instruction}");
  const std::size_t r = t.find("{response}");
  const std::string prefix = t.substr(0, i);
  const std::string middle = t.substr(i + 13, r - i - 13);
  const std::string suffix = t.substr(r + 10);
  if (rendered.compare(0, prefix.size(), prefix) != 0 || rendered.size() < prefix.size() + middle.size() + suffix.size() ||
      rendered.compare(rendered.size() - suffix.size(), suffix.size(), suffix) != 0) {
    throw RecordError("text does not follow meta prompt " + meta_prompt_id);
  }
  const std::size_t m = rendered.find(middle, prefix.size());
  if (m == std::string::npos) throw RecordError("text does not follow meta prompt " + meta_prompt_id);
  return {rendered.substr(prefix.size(), m - prefix.size()),
          rendered.substr(m + middle.size(), rendered.size() - suffix.size() - m - middle.size())};
}

}  // namespace mathforge::augment
