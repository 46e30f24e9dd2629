// Command-line driver: one verb per pipeline stage, plus run-all and ablate.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fact/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::optional<std::string> work_dir;
  std::optional<unsigned> workers;
  std::optional<std::size_t> scenes;
  std::optional<std::size_t> label_only;
  std::optional<double> corruption_rate;
  std::optional<double> noise;
  std::optional<std::int64_t> max_steps;
  bool no_prune = false;
  bool no_merge = false;
  bool no_bridge = false;
  std::optional<int> min_score;
  std::string students_path;
  std::optional<double> lambda;
  std::optional<int> epochs;
  std::optional<double> step;
  std::string generator_url;
  std::string bridger_url;
};

fact::PipelineConfig resolve(const Overrides& o) {
  fact::PipelineConfig c = o.config_path.empty() ? fact::PipelineConfig{} : fact::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.strict) c.strict = true;
  if (o.work_dir) c.work_dir = *o.work_dir;
  if (o.workers) c.workers = *o.workers;
  if (o.scenes) c.scenes = *o.scenes;
  if (o.label_only) c.label_only = *o.label_only;
  if (o.corruption_rate) c.corruption_rate = *o.corruption_rate;
  if (o.noise) c.detector_noise = *o.noise;
  if (o.max_steps) c.max_steps = *o.max_steps;
  if (o.no_prune) c.prune = false;
  if (o.no_merge) c.merge = false;
  if (o.no_bridge) c.bridge = false;
  if (o.min_score) c.min_score = *o.min_score;
  if (!o.students_path.empty()) c.students = fact::read_json_file(o.students_path);
  if (o.lambda) c.lambda = *o.lambda;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.step) c.step = *o.step;
  if (!o.generator_url.empty()) {
    c.external_generator.enabled = true;
    c.external_generator.url = o.generator_url;
  }
  if (!o.bridger_url.empty()) c.bridger_url = o.bridger_url;
  // Round-trip so CLI overrides get the same validation as config files.
  return fact::PipelineConfig::from_json(c.to_json());
}

fact::Json summary(const fact::StageReport& r) {
  fact::Json errors = fact::Json::array();
  for (const auto& e : r.errors) errors.push_back(fact::Json{{"row", e.row}, {"message", e.message}});
  return fact::Json{{"stage", r.stage}, {"counts", r.counts}, {"row_errors", errors}};
}

void print_error(const std::string& stage, const std::string& kind, const std::string& message) {
  std::cerr << fact::Json{{"error", {{"stage", stage}, {"kind", kind}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-to-rationale pipeline: scenes, programs, traces, rationales, scoring, distillation"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "base seed; per-stage seeds derive from it");
  app.add_flag("--strict", o.strict, "abort on the first malformed row");
  app.add_option("--work-dir", o.work_dir, "directory for stage files");
  app.add_option("--workers", o.workers, "worker threads per stage (0: all cores)");

  app.add_option("--scenes", o.scenes, "number of scenes to generate");
  app.add_option("--label-only", o.label_only, "extra label-only queries");
  app.add_option("--corruption-rate", o.corruption_rate, "fraction of programs deliberately corrupted")->check(CLI::Range(0.0, 1.0));
  app.add_option("--noise", o.noise, "detector miss probability")->check(CLI::Range(0.0, 1.0));
  app.add_option("--max-steps", o.max_steps, "interpreter step limit");
  app.add_flag("--no-prune", o.no_prune, "keep every trace event");
  app.add_flag("--no-merge", o.no_merge, "one record per event");
  app.add_flag("--no-bridge", o.no_bridge, "skip gap bridging");
  app.add_option("--min-score", o.min_score, "minimum utility score to keep a rationale");
  app.add_option("--students", o.students_path, "student roster JSON")->check(CLI::ExistingFile);
  app.add_option("--lambda", o.lambda, "rationale loss weight");
  app.add_option("--epochs", o.epochs, "training epochs");
  app.add_option("--step", o.step, "gradient step size");
  app.add_option("--generator-url", o.generator_url, "external program generator endpoint");
  app.add_option("--bridger-url", o.bridger_url, "external bridging endpoint");

  const std::vector<std::string> stages = {"scene-gen", "program-gen", "exec", "edit", "score", "emit", "train"};
  for (const auto& s : stages) app.add_subcommand(s, "run the " + s + " stage");
  app.add_subcommand("run-all", "run every stage in order");
  app.add_subcommand("ablate", "8-cell prune/merge/bridge grid over an existing corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  const std::string verb = app.get_subcommands().front()->get_name();

  fact::PipelineConfig config;
  try {
    config = resolve(o);
    std::filesystem::create_directories(config.work_dir);
  } catch (const std::exception& e) {
    print_error(verb, "config", e.what());
    return 2;
  }

  try {
    if (verb == "run-all") {
      for (const auto& r : fact::run_all(config)) std::cout << summary(r).dump() << "\n";
    } else if (verb == "ablate") {
      std::cout << fact::ablation_to_json(fact::run_ablation(config)).dump(2) << "\n";
    } else {
      std::cout << summary(fact::run_stage(verb, config)).dump() << "\n";
    }
  } catch (const fact::StageError& e) {
    std::cerr << e.report().dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    print_error(verb, "internal", e.what());
    return 1;
  }
  return 0;
}
