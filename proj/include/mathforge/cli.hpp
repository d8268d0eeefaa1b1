#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mathforge/augment/client.hpp"
#include "mathforge/eval.hpp"
#include "mathforge/numeric.hpp"
#include "mathforge/prefs.hpp"
#include "mathforge/verify.hpp"

namespace mathforge::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kStageFailure = 3, kSchemaViolation = 4 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClientConfig {
  std::string kind = "mock";  // mock | http
  std::filesystem::path mock_script;
  augment::HttpEndpoint http;
  std::string model = "mock";
  int max_attempts = 3;
  int backoff_ms = 1000;
  double jitter = 0.25;
};

struct PipelineConfig {
  std::filesystem::path items;
  std::filesystem::path paths;
  std::filesystem::path predictions;
  std::filesystem::path templates;  // numbered templates for perturb
  std::filesystem::path patterns_file;
  TolerancePolicy tol;

  ClientConfig client;
  bool cache_enabled = false;
  std::filesystem::path cache_dir;

  int k = 4;
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 2048;
  double repetition_penalty = 1.0;
  std::vector<verify::Strategy> strategies{verify::Strategy::ZeroShotCoT};
  std::filesystem::path prompts_dir;
  std::vector<std::string> prompt_ids;
  bool allow_partial = false;

  std::vector<std::string> evolve_modes{"depth-decompose", "depth-enhance", "breadth-mutate"};
  std::string scope = "grade-school arithmetic, solvable, numeric answer";
  std::filesystem::path templates_dir;
  double evolve_temperature = 0.7;

  bool strict_calc = false;
  verify::DedupMode dedup = verify::DedupMode::KeepAll;
  std::string meta_prompt = "vicuna_v1.1";
  int pair_cap = prefs::kDefaultPairCap;
  double beta = prefs::kDefaultBeta;
  prefs::PairSource pair_source = prefs::PairSource::SftSampled;

  std::string decoding = "greedy";
  std::string prompting = "zero-shot";
  std::filesystem::path shots;
  bool chat_wrap = false;
  std::vector<eval::Facet> facets{eval::Facet::Grade, eval::Facet::ReasoningSteps, eval::Facet::Digits,
                                  eval::Facet::DistractorCount};
  std::vector<eval::ReportFormat> formats{eval::ReportFormat::Json, eval::ReportFormat::Csv,
                                          eval::ReportFormat::PlotData};
  int perturb_count = 5;

  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::filesystem::path out_dir = "out";
};

/// INI file; relative paths resolve against the file's directory. Throws
/// ConfigError on unknown keys, bad values or missing referenced files.
PipelineConfig load_config(const std::filesystem::path& path);
/// Existence checks for every configured path.
void check_paths(const PipelineConfig& cfg);

inline const std::vector<std::string>& all_stages() {
  static const std::vector<std::string> s{"evolve", "sample", "verify", "filter", "sft",
                                          "pairs",  "eval",   "report", "perturb"};
  return s;
}

struct StageOverrides {
  std::optional<std::filesystem::path> input;  // replaces the stage's primary input
};

struct StageResult {
  std::string stage;
  bool skipped = false;  // manifest matched
  nlohmann::json counts;
};

/// Runs stages in order. Throws on failure (see run() for the mapping to exit codes).
std::vector<StageResult> run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& stages,
                                      const StageOverrides& overrides = {});

/// Command-line entry point; returns the process exit code. Error records go
/// to `err` as one JSON line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mathforge::cli
