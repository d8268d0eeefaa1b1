#include <algorithm>
#include <map>
#include <set>

#include "mathforge/augment/augment.hpp"
#include "mathforge/cli.hpp"
#include "mathforge/io.hpp"
#include "mathforge/schema.hpp"
#include "mathforge/text.hpp"

namespace mathforge::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct StageOutput {
  std::map<std::string, std::string> files;  // name relative to out_dir -> bytes
  json counts = json::object();
};

struct StagePlan {
  std::vector<fs::path> inputs;
  json fingerprint;
  std::function<StageOutput()> run;
};

std::string file_sha(const fs::path& p) { return io::sha256_hex(io::read_file(p)); }

std::string hash_inputs(const std::vector<fs::path>& inputs) {
  std::string acc;
  for (const fs::path& p : inputs) acc += p.filename().string() + '\0' + file_sha(p) + '\n';
  return io::sha256_hex(acc);
}

fs::path require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ConfigError(what + " is not configured");
  if (!fs::exists(p)) throw ConfigError(what + " " + p.string() + " does not exist");
  return p;
}

class Context {
 public:
  Context(const PipelineConfig& cfg, const StageOverrides& ov) : cfg_(cfg), ov_(ov) {}

  const PipelineConfig& cfg() const { return cfg_; }
  fs::path out(const std::string& name) const { return cfg_.out_dir / name; }

  const std::optional<fs::path>& override_input() const { return ov_.input; }

  fs::path input_or(const fs::path& fallback, const std::string& what) const {
    return require_file(ov_.input ? *ov_.input : fallback, what);
  }

  const extract::ExtractionPatterns& patterns() {
    if (!patterns_) {
      patterns_ = cfg_.patterns_file.empty() ? extract::ExtractionPatterns::defaults()
                                             : extract::ExtractionPatterns::load(cfg_.patterns_file);
    }
    return *patterns_;
  }

  json patterns_fp() { return patterns().to_json(); }
  json tol_fp() const { return {{"abs", cfg_.tol.abs_tol}, {"rel", cfg_.tol.rel_tol}}; }

  json client_fp() const {
    json j = {{"kind", cfg_.client.kind}, {"model", cfg_.client.model}, {"max_attempts", cfg_.client.max_attempts}};
    if (cfg_.client.kind == "mock") {
      j["mock_script_sha"] = file_sha(require_file(cfg_.client.mock_script, "[client] mock_script"));
    } else {
      j["endpoint"] = {{"id", cfg_.client.http.id}, {"base_url", cfg_.client.http.base_url}, {"path", cfg_.client.http.path}};
    }
    return j;
  }

  std::uint64_t seed(const std::string& stage) const {
    if (!cfg_.seed) throw ConfigError("stage " + stage + " is stochastic and needs a seed ([run] seed or --seed)");
    return *cfg_.seed;
  }

  std::shared_ptr<augment::CompletionClient> client(const std::string& stage) {
    if (client_) return client_;
    std::shared_ptr<augment::CompletionClient> base;
    if (cfg_.client.kind == "mock") {
      base = augment::MockClient::load(require_file(cfg_.client.mock_script, "[client] mock_script"));
    } else {
      base = std::make_shared<augment::HttpClient>(cfg_.client.http);
    }
    augment::RetryPolicy policy;
    policy.max_attempts = cfg_.client.max_attempts;
    policy.base_delay = std::chrono::milliseconds(cfg_.client.backoff_ms);
    policy.jitter = cfg_.client.jitter;
    client_ = std::make_shared<augment::RetryingClient>(base, policy, augment::RetryingClient::Sleeper{}, seed(stage));
    if (cfg_.cache_enabled) {
      client_ = std::make_shared<augment::CachingClient>(client_, cfg_.cache_dir.empty() ? out("cache") : cfg_.cache_dir);
    }
    return client_;
  }

  /// Dataset items by id, in file order.
  const std::vector<verify::MathItem>& items() {
    if (!items_) {
      const fs::path p = require_file(cfg_.items, "[data] items");
      items_.emplace();
      for (const io::JsonLine& l : io::read_jsonl(p)) {
        verify::MathItem item = schema::item_from_json(l.value, {p.string(), l.line});
        if (index_.count(item.id)) throw io::SchemaError(p.string(), l.line, "duplicate item id '" + item.id + "'");
        index_[item.id] = items_->size();
        items_->push_back(std::move(item));
      }
    }
    return *items_;
  }

  const verify::MathItem& item(const std::string& id, const schema::Where& at) {
    items();
    auto it = index_.find(id);
    if (it == index_.end()) throw io::SchemaError(at.file, at.line, "unknown item_id '" + id + "'");
    return (*items_)[it->second];
  }

  verify::FilterPolicy policy() const { return {cfg_.strict_calc, cfg_.tol}; }

 private:
  const PipelineConfig& cfg_;
  const StageOverrides& ov_;
  std::optional<extract::ExtractionPatterns> patterns_;
  std::optional<std::vector<verify::MathItem>> items_;
  std::map<std::string, std::size_t> index_;
  std::shared_ptr<augment::CompletionClient> client_;
};

std::string jsonl(const std::vector<json>& records) { return io::to_jsonl(records); }

// Verified/filtered lines, grouped by item in order of first appearance.
struct Group {
  const verify::MathItem* item;
  std::vector<verify::CheckedPath> paths;
};

std::vector<Group> read_checked(Context& ctx, const fs::path& file) {
  std::vector<Group> groups;
  std::map<std::string, std::size_t> where;
  for (const io::JsonLine& l : io::read_jsonl(file)) {
    const schema::Where at{file.string(), l.line};
    if (!l.value.contains("path") || !l.value.contains("verdict")) throw io::SchemaError(at.file, at.line, "expected {path, verdict}");
    verify::ReasoningPath p = schema::path_from_json(l.value.at("path"), ctx.patterns(), at);
    verify::Verdict v = schema::verdict_from_json(l.value.at("verdict"), p.id, at);
    const verify::MathItem& item = ctx.item(p.item_id, at);
    auto [it, fresh] = where.emplace(item.id, groups.size());
    if (fresh) groups.push_back({&item, {}});
    groups[it->second].paths.emplace_back(std::move(p), std::move(v));
  }
  return groups;
}

// ---------------------------------------------------------------------------

StagePlan plan_evolve(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path items_file = ctx.input_or(cfg.items, "[data] items");
  auto templates = std::make_shared<augment::EvolutionTemplates>(
      cfg.templates_dir.empty() ? augment::EvolutionTemplates::defaults() : augment::EvolutionTemplates::load(cfg.templates_dir));
  std::vector<augment::EvolutionMode> modes;
  for (const std::string& m : cfg.evolve_modes) {
    try {
      modes.push_back(augment::parse_evolution_mode(m));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[evolve] modes: ") + e.what());
    }
  }
  const bool enhance = std::count(modes.begin(), modes.end(), augment::EvolutionMode::DepthEnhance) > 0;
  const bool decompose = std::count(modes.begin(), modes.end(), augment::EvolutionMode::DepthDecompose) > 0;
  if (enhance && !decompose) throw ConfigError("[evolve] depth-enhance needs depth-decompose");
  json tmpl_fp = json::object();
  for (augment::EvolutionMode m : modes) {
    const auto& t = templates->get(m);
    tmpl_fp[t.id] = io::sha256_hex(t.text);
  }
  StagePlan plan;
  plan.inputs = {items_file};
  plan.fingerprint = {{"modes", cfg.evolve_modes}, {"scope", cfg.scope}, {"templates", tmpl_fp},
                      {"temperature", cfg.evolve_temperature}, {"client", ctx.client_fp()}, {"seed", ctx.seed("evolve")}};
  plan.run = [&ctx, templates, decompose, enhance, modes, items_file]() {
    const PipelineConfig& cfg = ctx.cfg();
    std::vector<verify::MathItem> items;
    for (const io::JsonLine& l : io::read_jsonl(items_file)) items.push_back(schema::item_from_json(l.value, {items_file.string(), l.line}));
    auto client = ctx.client("evolve");
    auto ask = [&](const augment::EvolutionRequest& er) {
      augment::CompletionRequest req;
      req.endpoint_id = cfg.client.http.id;
      req.model_id = cfg.client.model;
      req.messages = {{"user", er.rendered_prompt}};
      req.temperature = cfg.evolve_temperature;
      req.max_tokens = cfg.max_tokens;
      req.n_samples = 1;
      const augment::CompletionResponse r = augment::complete(*client, req);
      if (r.texts.empty()) throw augment::PartialBatchError("evolution request returned no text");
      return r.texts.front();
    };
    struct Out {
      std::vector<json> records;
      int skipped = 0;
    };
    auto per_item = augment::parallel_map<Out>(items.size(), cfg.workers, [&](std::size_t i) {
      Out o;
      const verify::MathItem& item = items[i];
      auto record = [&](const augment::EvolutionRequest& er, const std::vector<std::string>& qs) {
        o.records.push_back({{"id", item.id + "/" + augment::to_string(er.mode)},
                             {"source_item_id", item.id},
                             {"mode", augment::to_string(er.mode)},
                             {"template_id", er.template_id},
                             {"questions", qs}});
      };
      if (decompose) {
        const auto er = augment::build_evolution_prompt(augment::EvolutionMode::DepthDecompose, {item, {}}, std::nullopt, *templates);
        try {
          const std::vector<std::string> subs = augment::parse_numbered_list(ask(er));
          record(er, subs);
          if (enhance) {
            const auto er2 = augment::build_evolution_prompt(augment::EvolutionMode::DepthEnhance, {std::nullopt, subs}, std::nullopt, *templates);
            record(er2, augment::parse_numbered_list(ask(er2)));
          }
        } catch (const augment::EvolutionParseError&) {
          ++o.skipped;
        }
      }
      if (std::count(modes.begin(), modes.end(), augment::EvolutionMode::BreadthMutate)) {
        const auto er = augment::build_evolution_prompt(augment::EvolutionMode::BreadthMutate, {item, {}}, cfg.scope, *templates);
        const std::string q = std::string(text::trim(ask(er)));
        if (q.empty()) {
          ++o.skipped;
        } else {
          record(er, {q});
        }
      }
      return o;
    });
    StageOutput out;
    std::vector<json> all;
    int skipped = 0;
    for (Out& o : per_item) {
      for (json& r : o.records) all.push_back(std::move(r));
      skipped += o.skipped;
    }
    out.counts = {{"items", items.size()}, {"records", all.size()}, {"skipped", skipped}};
    out.files["evolved.jsonl"] = jsonl(all);
    return out;
  };
  return plan;
}

StagePlan plan_sample(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path items_file = ctx.input_or(cfg.items, "[data] items");
  auto prompts = std::make_shared<augment::PromptLibrary>();
  const bool few_shot = std::count(cfg.strategies.begin(), cfg.strategies.end(), verify::Strategy::FewShotCoT) > 0;
  json prompt_fp = json::object();
  if (few_shot) {
    *prompts = augment::PromptLibrary::load(require_file(cfg.prompts_dir, "[sample] prompts_dir"));
    const std::vector<std::string> ids = cfg.prompt_ids.empty() ? prompts->ids() : cfg.prompt_ids;
    if (ids.empty()) throw ConfigError("few-shot-CoT sampling needs at least one prompt in [sample] prompts_dir");
    for (const std::string& id : ids) {
      try {
        prompt_fp[id] = io::sha256_hex(prompts->get(id));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  std::vector<std::string> strategies;
  for (verify::Strategy s : cfg.strategies) strategies.push_back(verify::to_string(s));
  StagePlan plan;
  plan.inputs = {items_file};
  plan.fingerprint = {{"k", cfg.k},
                      {"temperature", cfg.temperature},
                      {"top_p", cfg.top_p},
                      {"max_tokens", cfg.max_tokens},
                      {"repetition_penalty", cfg.repetition_penalty},
                      {"strategies", strategies},
                      {"prompts", prompt_fp},
                      {"allow_partial", cfg.allow_partial},
                      {"patterns", ctx.patterns_fp()},
                      {"client", ctx.client_fp()},
                      {"seed", ctx.seed("sample")}};
  std::vector<std::string> prompt_ids;
  for (const auto& [id, _] : prompt_fp.items()) prompt_ids.push_back(id);
  plan.run = [&ctx, prompts, prompt_ids, items_file]() {
    const PipelineConfig& cfg = ctx.cfg();
    std::vector<verify::MathItem> items;
    for (const io::JsonLine& l : io::read_jsonl(items_file)) items.push_back(schema::item_from_json(l.value, {items_file.string(), l.line}));
    auto client = ctx.client("sample");
    const extract::ExtractionPatterns& patterns = ctx.patterns();
    // Items run in parallel; the requests of one item stay sequential so a
    // scripted client sees them in a fixed order.
    auto per_item = augment::parallel_map<std::vector<json>>(items.size(), cfg.workers, [&](std::size_t i) {
      std::vector<json> recs;
      for (verify::Strategy s : cfg.strategies) {
        std::vector<std::string> ids{""};
        if (s == verify::Strategy::FewShotCoT) ids = prompt_ids;
        for (const std::string& pid : ids) {
          augment::SamplingParams params;
          params.endpoint_id = cfg.client.http.id;
          params.model_id = cfg.client.model;
          params.temperature = cfg.temperature;
          params.top_p = cfg.top_p;
          params.max_tokens = cfg.max_tokens;
          params.repetition_penalty = cfg.repetition_penalty;
          params.prompt_id = pid;
          params.allow_partial = cfg.allow_partial;
          for (const verify::ReasoningPath& p :
               augment::sample_responses(*client, items[i], cfg.k, s, params, *prompts, patterns)) {
            recs.push_back(schema::path_to_json(p));
          }
        }
      }
      return recs;
    });
    StageOutput out;
    std::vector<json> all;
    for (auto& v : per_item) {
      for (json& r : v) all.push_back(std::move(r));
    }
    out.counts = {{"items", items.size()}, {"paths", all.size()}};
    out.files["paths.jsonl"] = jsonl(all);
    return out;
  };
  return plan;
}

StagePlan plan_verify(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path items_file = require_file(cfg.items, "[data] items");
  const fs::path paths_file = ctx.input_or(cfg.paths.empty() ? ctx.out("paths.jsonl") : cfg.paths, "reasoning paths");
  StagePlan plan;
  plan.inputs = {items_file, paths_file};
  plan.fingerprint = {{"patterns", ctx.patterns_fp()}, {"tol", ctx.tol_fp()}};
  plan.run = [&ctx, paths_file]() {
    std::vector<json> lines;
    std::vector<std::size_t> numbers;
    for (io::JsonLine& l : io::read_jsonl(paths_file)) {
      lines.push_back(std::move(l.value));
      numbers.push_back(l.line);
    }
    ctx.items();
    const extract::ExtractionPatterns& patterns = ctx.patterns();
    auto records = augment::parallel_map<json>(lines.size(), ctx.cfg().workers, [&](std::size_t i) {
      const schema::Where at{paths_file.string(), numbers[i]};
      verify::ReasoningPath p = schema::path_from_json(lines[i], patterns, at);
      const verify::MathItem& item = ctx.item(p.item_id, at);
      verify::Verdict v = verify::verify_response(item, p, ctx.cfg().tol);
      return schema::checked_to_json({std::move(p), std::move(v)});
    });
    StageOutput out;
    int answer_ok = 0;
    int calc_ok = 0;
    for (const json& r : records) {
      answer_ok += r["verdict"]["answer_correct"].get<bool>() ? 1 : 0;
      calc_ok += r["verdict"]["calc_correct"].get<bool>() ? 1 : 0;
    }
    out.counts = {{"paths", records.size()}, {"answer_correct", answer_ok}, {"calc_correct", calc_ok}};
    out.files["verified.jsonl"] = jsonl(records);
    return out;
  };
  return plan;
}

StagePlan plan_filter(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path items_file = require_file(cfg.items, "[data] items");
  const fs::path in = ctx.input_or(ctx.out("verified.jsonl"), "verified paths");
  StagePlan plan;
  plan.inputs = {items_file, in};
  plan.fingerprint = {{"patterns", ctx.patterns_fp()},
                      {"tol", ctx.tol_fp()},
                      {"strict_calc", cfg.strict_calc},
                      {"dedup", verify::to_string(cfg.dedup)}};
  plan.run = [&ctx, in]() {
    std::vector<json> kept;
    std::size_t total = 0;
    for (Group& g : read_checked(ctx, in)) {
      total += g.paths.size();
      std::vector<verify::CheckedPath> pass;
      for (verify::CheckedPath& c : g.paths) {
        if (verify::passes(*g.item, c.second, ctx.policy())) pass.push_back(std::move(c));
      }
      for (const verify::CheckedPath& c : verify::dedup_paths(std::move(pass), ctx.cfg().dedup)) {
        kept.push_back(schema::checked_to_json(c));
      }
    }
    StageOutput out;
    out.counts = {{"input", total}, {"kept", kept.size()}};
    out.files["filtered.jsonl"] = jsonl(kept);
    return out;
  };
  return plan;
}

StagePlan plan_sft(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path items_file = require_file(cfg.items, "[data] items");
  const fs::path in = ctx.input_or(ctx.out("filtered.jsonl"), "filtered paths");
  try {
    augment::meta_prompt(cfg.meta_prompt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[sft] ") + e.what());
  }
  StagePlan plan;
  plan.inputs = {items_file, in};
  plan.fingerprint = {{"meta_prompt", cfg.meta_prompt}, {"patterns", ctx.patterns_fp()}};
  plan.run = [&ctx, in]() {
    std::vector<json> recs;
    int skipped = 0;
    for (const Group& g : read_checked(ctx, in)) {
      for (const verify::CheckedPath& c : g.paths) {
        try {
          recs.push_back(schema::sft_to_json(augment::build_sft_record(*g.item, c.first, ctx.cfg().meta_prompt, &c.second)));
        } catch (const augment::RecordError&) {
          ++skipped;
        }
      }
    }
    StageOutput out;
    out.counts = {{"records", recs.size()}, {"skipped", skipped}};
    out.files["sft.jsonl"] = jsonl(recs);
    return out;
  };
  return plan;
}

StagePlan plan_pairs(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path items_file = require_file(cfg.items, "[data] items");
  const fs::path in = ctx.input_or(ctx.out("verified.jsonl"), "verified paths");
  StagePlan plan;
  plan.inputs = {items_file, in};
  plan.fingerprint = {{"cap", cfg.pair_cap},
                      {"beta", cfg.beta},
                      {"source", prefs::to_string(cfg.pair_source)},
                      {"strict_calc", cfg.strict_calc},
                      {"tol", ctx.tol_fp()},
                      {"patterns", ctx.patterns_fp()}};
  plan.run = [&ctx, in]() {
    std::vector<json> recs;
    std::size_t items_with_pairs = 0;
    for (const Group& g : read_checked(ctx, in)) {
      const auto pairs =
          prefs::build_preference_pairs(*g.item, g.paths, ctx.cfg().pair_cap, ctx.policy(), ctx.cfg().pair_source);
      items_with_pairs += pairs.empty() ? 0 : 1;
      for (const prefs::PreferencePair& p : pairs) recs.push_back(schema::pair_to_json(p));
    }
    StageOutput out;
    out.counts = {{"pairs", recs.size()}, {"items_with_pairs", items_with_pairs}};
    out.files["pairs.jsonl"] = jsonl(recs);
    return out;
  };
  return plan;
}

eval::EvalConfig make_eval_config(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  eval::EvalConfig ec;
  ec.decoding = cfg.decoding == "nucleus" ? eval::DecodingParams::nucleus() : eval::DecodingParams::greedy();
  ec.decoding.max_tokens = cfg.max_tokens;
  ec.few_shot = cfg.prompting == "few-shot-CoT";
  if (ec.few_shot && !cfg.shots.empty()) ec.shots = eval::load_shots(cfg.shots);
  ec.chat_wrap = cfg.chat_wrap;
  ec.patterns = ctx.patterns();
  ec.tol = cfg.tol;
  try {
    ec.validate();
  } catch (const eval::ConfigError& e) {
    throw ConfigError(std::string("[eval] ") + e.what());
  }
  return ec;
}

StagePlan plan_eval(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path items_file = require_file(cfg.items, "[data] items");
  auto ec = std::make_shared<eval::EvalConfig>(make_eval_config(ctx));
  std::optional<fs::path> preds = ctx.override_input();
  if (!preds && !cfg.predictions.empty()) preds = cfg.predictions;
  if (preds) require_file(*preds, "predictions");
  StagePlan plan;
  plan.inputs = {items_file};
  if (preds) plan.inputs.push_back(*preds);
  plan.fingerprint = {{"eval", ec->fingerprint_json()}};
  if (!preds) {
    plan.fingerprint["client"] = ctx.client_fp();
    plan.fingerprint["seed"] = ctx.seed("eval");
  }
  plan.run = [&ctx, ec, preds]() {
    StageOutput out;
    const std::vector<verify::MathItem>& items = ctx.items();
    std::map<std::string, std::string> by_item;
    if (preds) {
      for (const io::JsonLine& l : io::read_jsonl(*preds)) {
        const schema::Where at{preds->string(), l.line};
        schema::Prediction p = schema::prediction_from_json(l.value, at);
        ctx.item(p.item_id, at);
        if (!by_item.emplace(p.item_id, p.prediction).second) {
          throw io::SchemaError(at.file, at.line, "second prediction for item '" + p.item_id + "'");
        }
      }
    } else {
      auto client = ctx.client("eval");
      auto texts = augment::parallel_map<std::string>(items.size(), ctx.cfg().workers, [&](std::size_t i) {
        augment::CompletionRequest req;
        req.endpoint_id = ctx.cfg().client.http.id;
        req.model_id = ctx.cfg().client.model;
        req.messages = {{"user", eval::assemble_eval_prompt(items[i], *ec)}};
        req.temperature = ec->decoding.temperature;
        req.top_p = ec->decoding.top_p;
        req.max_tokens = ec->decoding.max_tokens;
        req.repetition_penalty = ec->decoding.repetition_penalty;
        const augment::CompletionResponse r = augment::complete(*client, req);
        return r.texts.empty() ? std::string() : r.texts.front();
      });
      std::vector<json> recs;
      for (std::size_t i = 0; i < items.size(); ++i) {
        by_item[items[i].id] = texts[i];
        recs.push_back({{"item_id", items[i].id}, {"prediction", texts[i]}});
      }
      out.files["predictions.jsonl"] = jsonl(recs);
    }
    std::vector<json> graded;
    int correct = 0;
    for (const verify::MathItem& item : items) {
      auto it = by_item.find(item.id);
      eval::GradedResult g = eval::grade_prediction(item, it == by_item.end() ? std::string() : it->second, *ec);
      if (it == by_item.end()) g.notes.insert(g.notes.begin(), "no prediction");
      correct += g.correct ? 1 : 0;
      graded.push_back(schema::graded_to_json(g));
    }
    out.counts = {{"items", graded.size()}, {"correct", correct}};
    out.files["graded.jsonl"] = jsonl(graded);
    return out;
  };
  return plan;
}

StagePlan plan_report(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path in = ctx.input_or(ctx.out("graded.jsonl"), "graded results");
  const std::string eval_fp = io::sha256_hex(io::canonical(make_eval_config(ctx).fingerprint_json()));
  std::vector<std::string> facets;
  for (eval::Facet f : cfg.facets) facets.push_back(eval::to_string(f));
  json formats = json::array();
  for (eval::ReportFormat f : cfg.formats) formats.push_back(static_cast<int>(f));
  StagePlan plan;
  plan.inputs = {in};
  plan.fingerprint = {{"facets", facets}, {"formats", formats}, {"eval_fingerprint", eval_fp}};
  plan.run = [&ctx, in, eval_fp]() {
    std::vector<eval::GradedResult> graded;
    for (const io::JsonLine& l : io::read_jsonl(in)) {
      const schema::Where at{in.string(), l.line};
      try {
        eval::GradedResult g;
        g.item_id = l.value.at("item_id").get<std::string>();
        g.correct = l.value.at("correct").get<bool>();
        const json& f = l.value.at("facets");
        auto opt = [&f](const char* k) -> std::optional<int> {
          if (f.contains(k)) return f.at(k).get<int>();
          return std::nullopt;
        };
        g.facets = {opt("grade"), opt("reasoning_steps"), opt("digits"), opt("distractor_count")};
        graded.push_back(std::move(g));
      } catch (const json::exception& e) {
        throw io::SchemaError(at.file, at.line, std::string("bad graded record: ") + e.what());
      }
    }
    const eval::Report report = eval::aggregate_metrics(graded, ctx.cfg().facets, eval_fp);
    StageOutput out;
    for (eval::ReportFormat f : ctx.cfg().formats) {
      for (auto& [name, bytes] : eval::emit_report(report, f)) out.files[name] = std::move(bytes);
    }
    out.counts = {{"n", report.n}, {"correct", report.correct}, {"pass_at_1", eval::fixed4(report.pass_at_1())}};
    return out;
  };
  return plan;
}

StagePlan plan_perturb(Context& ctx) {
  const PipelineConfig& cfg = ctx.cfg();
  const fs::path in = ctx.input_or(cfg.templates, "[data] templates");
  StagePlan plan;
  plan.inputs = {in};
  plan.fingerprint = {{"seed", ctx.seed("perturb")}, {"count", cfg.perturb_count}};
  plan.run = [&ctx, in]() {
    std::vector<json> recs;
    std::size_t templates = 0;
    for (const io::JsonLine& l : io::read_jsonl(in)) {
      eval::NumberedTemplate t;
      try {
        t = eval::NumberedTemplate::from_json(l.value);
      } catch (const eval::TemplateError& e) {
        throw io::SchemaError(in.string(), l.line, e.what());
      }
      ++templates;
      for (const verify::MathItem& item : eval::perturb_numbers(t, *ctx.cfg().seed, ctx.cfg().perturb_count)) {
        recs.push_back(schema::item_to_json(item));
      }
    }
    StageOutput out;
    out.counts = {{"templates", templates}, {"items", recs.size()}};
    out.files["perturbed.jsonl"] = jsonl(recs);
    return out;
  };
  return plan;
}

StagePlan plan_stage(Context& ctx, const std::string& stage) {
  if (stage == "evolve") return plan_evolve(ctx);
  if (stage == "sample") return plan_sample(ctx);
  if (stage == "verify") return plan_verify(ctx);
  if (stage == "filter") return plan_filter(ctx);
  if (stage == "sft") return plan_sft(ctx);
  if (stage == "pairs") return plan_pairs(ctx);
  if (stage == "eval") return plan_eval(ctx);
  if (stage == "report") return plan_report(ctx);
  if (stage == "perturb") return plan_perturb(ctx);
  throw ConfigError("unknown stage '" + stage + "'");
}

}  // namespace

std::vector<StageResult> run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& stages,
                                      const StageOverrides& overrides) {
  for (const std::string& s : stages) {
    if (std::find(all_stages().begin(), all_stages().end(), s) == all_stages().end()) {
      throw ConfigError("unknown stage '" + s + "'");
    }
  }
  if (overrides.input && stages.size() != 1) throw ConfigError("--in applies to a single stage");
  std::vector<StageResult> results;
  for (const std::string& stage : stages) {
    Context ctx(cfg, overrides);
    StagePlan plan = plan_stage(ctx, stage);
    const std::string fingerprint = io::sha256_hex(io::canonical(plan.fingerprint));
    const std::string input_hash = hash_inputs(plan.inputs);
    const fs::path manifest_path = ctx.out(stage + ".manifest.json");

    if (fs::exists(manifest_path)) {
      try {
        const json m = json::parse(io::read_file(manifest_path));
        bool fresh = m.at("stage") == stage && m.at("config_fingerprint") == fingerprint && m.at("input_hash") == input_hash;
        for (const auto& [name, sha] : m.at("outputs").items()) {
          fresh = fresh && fs::exists(ctx.out(name)) && file_sha(ctx.out(name)) == sha.get<std::string>();
        }
        if (fresh) {
          results.push_back({stage, true, m.at("counts")});
          continue;
        }
      } catch (const json::exception&) {
        // unreadable manifest: rerun the stage
      }
    }

    StageOutput out = plan.run();
    json outputs = json::object();
    for (const auto& [name, bytes] : out.files) {
      io::write_file_atomic(ctx.out(name), bytes);
      outputs[name] = io::sha256_hex(bytes);
    }
    const json manifest = {{"stage", stage},
                           {"config_fingerprint", fingerprint},
                           {"input_hash", input_hash},
                           {"counts", out.counts},
                           {"outputs", outputs}};
    io::write_file_atomic(manifest_path, manifest.dump(2) + "\n");
    results.push_back({stage, false, out.counts});
  }
  return results;
}

}  // namespace mathforge::cli
