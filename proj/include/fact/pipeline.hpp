#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fact/distill.hpp"
#include "fact/errors.hpp"
#include "fact/jsonl.hpp"
#include "fact/program_gen.hpp"

namespace fact {

struct PipelineConfig {
  std::filesystem::path work_dir = "fact_run";
  std::map<std::string, std::filesystem::path> paths;  // artifact overrides

  std::size_t scenes = 200;
  std::size_t label_only = 0;
  std::uint64_t seed = 1;
  std::map<std::string, std::uint64_t> seeds;  // per-stage overrides

  double corruption_rate = 0.3;
  double detector_noise = 0.0;
  std::int64_t max_steps = 10'000;

  bool prune = true;
  bool merge = true;
  bool bridge = true;

  Json students = default_student_config();
  int min_score = 0;

  double lambda = 1.0;
  int epochs = 300;
  double step = 0.5;
  int hidden = 8;

  unsigned workers = 0;  // 0: hardware concurrency
  bool strict = false;

  ExternalGeneratorConfig external_generator;
  std::string bridger_url;  // empty: template bridger
  double bridger_timeout = 10.0;

  // Artifact names: scenes, queries, programs, traces, rationales, scored,
  // dataset, metrics, manifest, timings, ablation.
  std::filesystem::path path(const std::string& artifact) const;
  std::uint64_t stage_seed(const std::string& stage) const;
  unsigned worker_count() const;

  Json to_json() const;
  // Unknown keys raise ConfigError so typos are not silently ignored.
  static PipelineConfig from_json(const Json& json);
  // Hash of the canonical JSON form, excluding work_dir and path overrides.
  std::string hash() const;
};

PipelineConfig load_config(const std::filesystem::path& path);

struct RowError {
  std::size_t row = 0;  // 0-based index within the stage input
  std::string message;
};

// A stage failure that aborts the command: missing input, schema mismatch,
// config error, or a row error under --strict.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string kind, const std::string& message, std::optional<std::size_t> row = {});
  const std::string& stage() const { return stage_; }
  const std::string& kind() const { return kind_; }
  std::optional<std::size_t> row() const { return row_; }
  Json report() const;

 private:
  std::string stage_;
  std::string kind_;
  std::optional<std::size_t> row_;
};

struct StageReport {
  std::string stage;
  std::map<std::string, std::size_t> counts;
  std::vector<RowError> errors;
  double seconds = 0.0;
};

StageReport run_scene_gen(const PipelineConfig& config);
StageReport run_program_gen(const PipelineConfig& config);
StageReport run_exec(const PipelineConfig& config);
StageReport run_edit(const PipelineConfig& config);
StageReport run_score(const PipelineConfig& config);
StageReport run_emit(const PipelineConfig& config);
StageReport run_train(const PipelineConfig& config);
std::vector<StageReport> run_all(const PipelineConfig& config);

// Runs the stage and records it in the manifest (and its duration in the
// separate timings file, which is not part of the deterministic outputs).
StageReport run_stage(const std::string& stage, const PipelineConfig& config);

// Funnel counts from the manifest: generated >= faithful_kept >= score_kept,
// emitted = score_kept + masked.
struct FunnelCounts {
  std::size_t generated = 0;
  std::size_t executed = 0;
  std::size_t faithful_kept = 0;
  std::size_t edited = 0;
  std::size_t score_kept = 0;
  std::size_t emitted = 0;
  std::size_t masked = 0;
};
FunnelCounts read_funnel(const std::filesystem::path& manifest);

struct AblationCell {
  bool prune = false;
  bool merge = false;
  bool bridge = false;
  std::size_t rationales = 0;
  std::size_t kept = 0;
  double mean_tokens = 0.0;
  double keep_rate = 0.0;
  double accuracy_heldout = 0.0;
  std::string error;
};

// Runs edit, score, emit and train for all 8 toggle combinations on the base
// corpus (scenes through traces must exist). A failing cell is recorded and
// the rest still run. Writes the ablation report.
std::vector<AblationCell> run_ablation(const PipelineConfig& config);
Json ablation_to_json(const std::vector<AblationCell>& cells);

}  // namespace fact
