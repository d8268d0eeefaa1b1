#include <CLI11.hpp>
#include <ostream>

#include "mathforge/augment/augment.hpp"
#include "mathforge/cli.hpp"
#include "mathforge/extract.hpp"
#include "mathforge/io.hpp"

namespace mathforge::cli {

namespace {

using nlohmann::json;

void report_error(std::ostream& err, const std::string& kind, const std::string& stage, const std::string& message,
                  const io::SchemaError* schema = nullptr) {
  json j = {{"error", kind}, {"stage", stage}, {"message", message}};
  if (schema) {
    j["file"] = schema->file();
    j["line"] = schema->line();
  }
  err << j.dump() << "\n";
}

std::vector<std::string> split_stages(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verified math data pipeline: sampling, step checks, SFT/preference data, evaluation"};
  app.name("mathforge");
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string in_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string mock_script;
  bool strict_calc = false;
  std::string stage_list;

  app.add_option("--config", config_path, "INI config file")->required();
  app.add_option("--in", in_path, "replace the stage's primary input");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed for stochastic stages");
  app.add_option("--workers", workers, "parallel workers")->check(CLI::PositiveNumber);
  app.add_option("--mock-client", mock_script, "use the scripted mock client with this script");
  app.add_flag("--strict-calc", strict_calc, "treat indeterminate equations as failures");

  for (const std::string& s : all_stages()) app.add_subcommand(s, "run the " + s + " stage");
  CLI::App* pipeline = app.add_subcommand("pipeline", "run several stages in order");
  pipeline->add_option("stages", stage_list, "comma separated stage list")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", "", e.what());
    return kConfigError;
  }

  std::vector<std::string> stages;
  if (pipeline->parsed()) {
    stages = split_stages(stage_list);
  } else {
    stages = {app.get_subcommands().front()->get_name()};
  }

  PipelineConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = seed;
    if (workers > 0) cfg.workers = workers;
    if (!mock_script.empty()) {
      cfg.client.kind = "mock";
      cfg.client.mock_script = mock_script;
    }
    if (strict_calc) cfg.strict_calc = true;
    check_paths(cfg);
    for (const std::string& s : stages) {
      if (std::find(all_stages().begin(), all_stages().end(), s) == all_stages().end()) {
        throw ConfigError("unknown stage '" + s + "'");
      }
    }
    if (!in_path.empty() && stages.size() != 1) throw ConfigError("--in applies to a single stage");
  } catch (const std::exception& e) {
    report_error(err, "config", "", e.what());
    return kConfigError;
  }

  StageOverrides ov;
  if (!in_path.empty()) ov.input = std::filesystem::path(in_path);
  for (const std::string& stage : stages) {
    try {
      for (const StageResult& r : run_pipeline(cfg, {stage}, ov)) {
        out << json{{"stage", r.stage}, {"skipped", r.skipped}, {"counts", r.counts}}.dump() << "\n";
      }
    } catch (const io::SchemaError& e) {
      report_error(err, "schema", stage, e.what(), &e);
      return kSchemaViolation;
    } catch (const ConfigError& e) {
      report_error(err, "config", stage, e.what());
      return kConfigError;
    } catch (const eval::ConfigError& e) {
      report_error(err, "config", stage, e.what());
      return kConfigError;
    } catch (const extract::PatternError& e) {
      report_error(err, "config", stage, e.what());
      return kConfigError;
    } catch (const augment::TemplateError& e) {
      report_error(err, "config", stage, e.what());
      return kConfigError;
    } catch (const std::exception& e) {
      report_error(err, "stage", stage, e.what());
      return kStageFailure;
    }
  }
  return kOk;
}

}  // namespace mathforge::cli
