#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <map>
#include <set>
#include <sstream>

#include "mathforge/cli.hpp"

namespace mathforge::cli {

namespace {

namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto b = part.find_first_not_of(" \t");
    const auto e = part.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(part.substr(b, e - b + 1));
  }
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::filesystem::path base) : tree_(tree), base_(std::move(base)) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }

  void str(const std::string& s, const std::string& k, std::string& out) {
    if (auto v = get(s, k)) out = *v;
  }
  void path(const std::string& s, const std::string& k, std::filesystem::path& out) {
    if (auto v = get(s, k)) out = v->empty() ? std::filesystem::path() : resolve(*v);
  }
  void integer(const std::string& s, const std::string& k, int& out) {
    if (auto v = get(s, k)) out = static_cast<int>(parse_number<long long>(s, k, *v));
  }
  void real(const std::string& s, const std::string& k, double& out) {
    if (auto v = get(s, k)) out = parse_number<double>(s, k, *v);
  }
  void boolean(const std::string& s, const std::string& k, bool& out) {
    if (auto v = get(s, k)) {
      if (*v == "true" || *v == "1" || *v == "yes") {
        out = true;
      } else if (*v == "false" || *v == "0" || *v == "no") {
        out = false;
      } else {
        throw ConfigError("[" + s + "] " + k + ": expected a boolean, got '" + *v + "'");
      }
    }
  }
  template <typename T>
  T parse_number(const std::string& s, const std::string& k, const std::string& v) {
    std::istringstream in(v);
    T x{};
    in >> x;
    if (in.fail() || !in.eof()) throw ConfigError("[" + s + "] " + k + ": expected a number, got '" + v + "'");
    return x;
  }
  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_ / path;
  }

  void reject_unknown() const {
    for (const auto& [section, child] : tree_) {
      if (child.empty() && !child.data().empty()) throw ConfigError("key '" + section + "' outside any section");
      for (const auto& [key, _] : child) {
        if (!used_.count(section + "." + key)) throw ConfigError("unknown config key [" + section + "] " + key);
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::filesystem::path base_;
  std::set<std::string> used_;
};

}  // namespace

PipelineConfig load_config(const std::filesystem::path& file) {
  pt::ptree tree;
  try {
    pt::read_ini(file.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  PipelineConfig c;
  Reader r(tree, file.has_parent_path() ? file.parent_path() : std::filesystem::current_path());
  try {
    r.path("data", "items", c.items);
    r.path("data", "paths", c.paths);
    r.path("data", "predictions", c.predictions);
    r.path("data", "templates", c.templates);

    r.path("extract", "patterns", c.patterns_file);
    r.real("tolerance", "abs", c.tol.abs_tol);
    r.real("tolerance", "rel", c.tol.rel_tol);

    r.str("client", "kind", c.client.kind);
    r.path("client", "mock_script", c.client.mock_script);
    r.str("client", "model", c.client.model);
    r.str("client", "endpoint_id", c.client.http.id);
    r.str("client", "base_url", c.client.http.base_url);
    r.str("client", "path", c.client.http.path);
    r.str("client", "token_env", c.client.http.token_env);
    r.str("client", "auth_header", c.client.http.auth_header);
    r.str("client", "auth_prefix", c.client.http.auth_prefix);
    int timeout = static_cast<int>(c.client.http.timeout.count());
    r.integer("client", "timeout_s", timeout);
    c.client.http.timeout = std::chrono::seconds(timeout);
    r.integer("client", "max_attempts", c.client.max_attempts);
    r.integer("client", "backoff_ms", c.client.backoff_ms);
    r.real("client", "jitter", c.client.jitter);
    if (auto token = r.get("client", "token")) {
      (void)token;
      throw ConfigError("[client] token: secrets belong in the environment, set token_env instead");
    }

    r.boolean("cache", "enabled", c.cache_enabled);
    r.path("cache", "dir", c.cache_dir);

    r.integer("sample", "k", c.k);
    r.real("sample", "temperature", c.temperature);
    r.real("sample", "top_p", c.top_p);
    r.integer("sample", "max_tokens", c.max_tokens);
    r.real("sample", "repetition_penalty", c.repetition_penalty);
    if (auto v = r.get("sample", "strategies")) {
      c.strategies.clear();
      for (const std::string& s : split_list(*v)) c.strategies.push_back(verify::parse_strategy(s));
    }
    r.path("sample", "prompts_dir", c.prompts_dir);
    if (auto v = r.get("sample", "prompt_ids")) c.prompt_ids = split_list(*v);
    r.boolean("sample", "allow_partial", c.allow_partial);

    if (auto v = r.get("evolve", "modes")) c.evolve_modes = split_list(*v);
    r.str("evolve", "scope", c.scope);
    r.path("evolve", "templates_dir", c.templates_dir);
    r.real("evolve", "temperature", c.evolve_temperature);

    r.boolean("filter", "strict_calc", c.strict_calc);
    if (auto v = r.get("filter", "dedup")) c.dedup = verify::parse_dedup_mode(*v);
    r.str("sft", "meta_prompt", c.meta_prompt);
    r.integer("pairs", "cap", c.pair_cap);
    r.real("pairs", "beta", c.beta);
    if (auto v = r.get("pairs", "source")) c.pair_source = prefs::parse_pair_source(*v);

    r.str("eval", "decoding", c.decoding);
    r.str("eval", "prompting", c.prompting);
    r.path("eval", "shots", c.shots);
    r.boolean("eval", "chat_wrap", c.chat_wrap);
    r.integer("eval", "perturb_count", c.perturb_count);

    if (auto v = r.get("report", "facets")) {
      c.facets.clear();
      for (const std::string& s : split_list(*v)) c.facets.push_back(eval::parse_facet(s));
    }
    if (auto v = r.get("report", "formats")) {
      c.formats.clear();
      for (const std::string& s : split_list(*v)) c.formats.push_back(eval::parse_report_format(s));
    }

    if (auto v = r.get("run", "seed")) c.seed = r.parse_number<std::uint64_t>("run", "seed", *v);
    r.integer("run", "workers", c.workers);
    r.path("run", "out_dir", c.out_dir);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  r.reject_unknown();

  if (c.client.kind != "mock" && c.client.kind != "http") throw ConfigError("[client] kind must be mock or http");
  if (c.decoding != "greedy" && c.decoding != "nucleus") throw ConfigError("[eval] decoding must be greedy or nucleus");
  if (c.prompting != "zero-shot" && c.prompting != "few-shot-CoT") {
    throw ConfigError("[eval] prompting must be zero-shot or few-shot-CoT");
  }
  if (c.k < 1) throw ConfigError("[sample] k must be >= 1");
  if (c.workers < 1) throw ConfigError("[run] workers must be >= 1");
  if (c.pair_cap < 1) throw ConfigError("[pairs] cap must be >= 1");
  if (!(c.beta > 0)) throw ConfigError("[pairs] beta must be > 0");
  if (c.client.max_attempts < 1) throw ConfigError("[client] max_attempts must be >= 1");
  check_paths(c);
  return c;
}

void check_paths(const PipelineConfig& c) {
  const std::vector<std::pair<const char*, const std::filesystem::path*>> paths = {
      {"[data] items", &c.items},           {"[data] paths", &c.paths},
      {"[data] predictions", &c.predictions}, {"[data] templates", &c.templates},
      {"[extract] patterns", &c.patterns_file}, {"[client] mock_script", &c.client.mock_script},
      {"[sample] prompts_dir", &c.prompts_dir}, {"[evolve] templates_dir", &c.templates_dir},
      {"[eval] shots", &c.shots}};
  for (const auto& [name, p] : paths) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw ConfigError(std::string(name) + ": " + p->string() + " does not exist");
    }
  }
}

}  // namespace mathforge::cli
