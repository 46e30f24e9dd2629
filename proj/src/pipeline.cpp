#include "fact/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <set>

#include "fact/dsl.hpp"
#include "fact/editor.hpp"
#include "fact/interpreter.hpp"
#include "fact/parallel.hpp"
#include "fact/rng.hpp"
#include "fact/transfer.hpp"

namespace fact {

// --- configuration ------------------------------------------------------------------

namespace {

const std::map<std::string, std::string>& default_files() {
  static const std::map<std::string, std::string> files = {
      {"scenes", "scenes.json"},         {"queries", "queries.jsonl"},   {"programs", "programs.jsonl"},
      {"traces", "traces.jsonl"},        {"rationales", "rationales.jsonl"}, {"scored", "scored.jsonl"},
      {"dataset", "dataset.jsonl"},      {"metrics", "metrics.json"},    {"manifest", "manifest.json"},
      {"timings", "timings.json"},       {"ablation", "ablation.json"},
  };
  return files;
}

void check_keys(const Json& json, const std::set<std::string>& allowed, const std::string& where) {
  if (!json.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : json.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_key(const Json& json, const char* key, T& out) {
  if (auto it = json.find(key); it != json.end()) out = it->get<T>();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::filesystem::path PipelineConfig::path(const std::string& artifact) const {
  if (auto it = paths.find(artifact); it != paths.end()) return it->second;
  const auto& files = default_files();
  auto it = files.find(artifact);
  if (it == files.end()) throw ConfigError("unknown artifact '" + artifact + "'");
  return work_dir / it->second;
}

std::uint64_t PipelineConfig::stage_seed(const std::string& stage) const {
  if (auto it = seeds.find(stage); it != seeds.end()) return it->second;
  return hash_combine(seed, stable_hash(stage));
}

unsigned PipelineConfig::worker_count() const { return workers == 0 ? default_workers() : workers; }

Json PipelineConfig::to_json() const {
  Json path_json = Json::object();
  for (const auto& [k, v] : paths) path_json[k] = v.string();
  return Json{{"work_dir", work_dir.string()},
              {"paths", path_json},
              {"scenes", scenes},
              {"label_only", label_only},
              {"seed", seed},
              {"seeds", seeds},
              {"corruption_rate", corruption_rate},
              {"detector_noise", detector_noise},
              {"max_steps", max_steps},
              {"edit", Json{{"prune", prune}, {"merge", merge}, {"bridge", bridge}}},
              {"students", students},
              {"min_score", min_score},
              {"train", Json{{"lambda", lambda}, {"epochs", epochs}, {"step", step}, {"hidden", hidden}}},
              {"workers", workers},
              {"strict", strict},
              {"external_generator", Json{{"enabled", external_generator.enabled},
                                          {"url", external_generator.url},
                                          {"timeout", external_generator.timeout_seconds},
                                          {"api_doc_version", external_generator.api_doc_version}}},
              {"bridger", Json{{"url", bridger_url}, {"timeout", bridger_timeout}}}};
}

PipelineConfig PipelineConfig::from_json(const Json& json) {
  PipelineConfig c;
  try {
    check_keys(json,
               {"work_dir", "paths", "scenes", "label_only", "seed", "seeds", "corruption_rate", "detector_noise",
                "max_steps", "edit", "students", "min_score", "train", "workers", "strict", "external_generator",
                "bridger"},
               "config");
    if (auto it = json.find("work_dir"); it != json.end()) c.work_dir = it->get<std::string>();
    if (auto it = json.find("paths"); it != json.end()) {
      for (const auto& [k, v] : it->items()) {
        if (!default_files().count(k)) throw ConfigError("unknown artifact '" + k + "' in paths");
        c.paths[k] = v.get<std::string>();
      }
    }
    read_key(json, "scenes", c.scenes);
    read_key(json, "label_only", c.label_only);
    read_key(json, "seed", c.seed);
    read_key(json, "seeds", c.seeds);
    read_key(json, "corruption_rate", c.corruption_rate);
    read_key(json, "detector_noise", c.detector_noise);
    read_key(json, "max_steps", c.max_steps);
    if (auto it = json.find("edit"); it != json.end()) {
      check_keys(*it, {"prune", "merge", "bridge"}, "edit");
      read_key(*it, "prune", c.prune);
      read_key(*it, "merge", c.merge);
      read_key(*it, "bridge", c.bridge);
    }
    if (auto it = json.find("students"); it != json.end()) c.students = *it;
    read_key(json, "min_score", c.min_score);
    if (auto it = json.find("train"); it != json.end()) {
      check_keys(*it, {"lambda", "epochs", "step", "hidden"}, "train");
      read_key(*it, "lambda", c.lambda);
      read_key(*it, "epochs", c.epochs);
      read_key(*it, "step", c.step);
      read_key(*it, "hidden", c.hidden);
    }
    read_key(json, "workers", c.workers);
    read_key(json, "strict", c.strict);
    if (auto it = json.find("external_generator"); it != json.end()) {
      check_keys(*it, {"enabled", "url", "timeout", "api_doc_version"}, "external_generator");
      read_key(*it, "enabled", c.external_generator.enabled);
      read_key(*it, "url", c.external_generator.url);
      read_key(*it, "timeout", c.external_generator.timeout_seconds);
      read_key(*it, "api_doc_version", c.external_generator.api_doc_version);
    }
    if (auto it = json.find("bridger"); it != json.end()) {
      check_keys(*it, {"url", "timeout"}, "bridger");
      read_key(*it, "url", c.bridger_url);
      read_key(*it, "timeout", c.bridger_timeout);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.scenes == 0) throw ConfigError("config: scenes must be at least 1");
  if (c.corruption_rate < 0.0 || c.corruption_rate > 1.0) throw ConfigError("config: corruption_rate must lie in [0, 1]");
  if (c.detector_noise < 0.0 || c.detector_noise > 1.0) throw ConfigError("config: detector_noise must lie in [0, 1]");
  if (c.max_steps < 1) throw ConfigError("config: max_steps must be at least 1");
  if (c.lambda < 0.0) throw ConfigError("config: lambda must be non-negative");
  builtin_students(c.students);
  score_options(c.students);
  return c;
}

std::string PipelineConfig::hash() const {
  Json j = to_json();
  j.erase("work_dir");
  j.erase("paths");
  j.erase("workers");
  return hex64(stable_hash(j.dump()));
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  try {
    return PipelineConfig::from_json(read_json_file(path));
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// --- stage plumbing -----------------------------------------------------------------

StageError::StageError(std::string stage, std::string kind, const std::string& message, std::optional<std::size_t> row)
    : Error(stage + ": " + message + (row ? " (row " + std::to_string(*row) + ")" : "")),
      stage_(std::move(stage)),
      kind_(std::move(kind)),
      row_(row) {}

Json StageError::report() const {
  Json r{{"stage", stage_}, {"kind", kind_}, {"message", what()}};
  if (row_) r["row"] = *row_;
  return Json{{"error", r}};
}

namespace {

void require_input(const std::string& stage, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw StageError(stage, "missing_input", "input file not found: " + path.string());
}

// Collects per-row failures; under --strict the first one aborts the stage.
class RowLog {
 public:
  RowLog(std::string stage, bool strict) : stage_(std::move(stage)), strict_(strict) {}
  void fail(std::size_t row, const std::string& message) {
    if (strict_) throw StageError(stage_, "row", message, row);
    errors_.push_back({row, message});
  }
  std::vector<RowError>& errors() { return errors_; }

 private:
  std::string stage_;
  bool strict_;
  std::vector<RowError> errors_;
};

std::vector<JsonlRow> read_rows(const std::string& stage, const std::filesystem::path& path, RowLog& log) {
  require_input(stage, path);
  // Bad lines are reported by their 0-based line position.
  std::vector<JsonlRow> rows = read_jsonl(path, [&](std::size_t line, const std::string& message) {
    log.fail(line - 1, "line " + std::to_string(line) + ": " + message);
  });
  return rows;
}

std::map<std::string, Scene> scenes_by_id(const std::string& stage, const PipelineConfig& config) {
  require_input(stage, config.path("scenes"));
  std::map<std::string, Scene> out;
  for (auto& s : load_scenes(config.path("scenes"))) out.emplace(s.scene_id, std::move(s));
  return out;
}

std::vector<Query> load_query_rows(const std::string& stage, const PipelineConfig& config, RowLog& log) {
  std::vector<Query> out;
  const auto rows = read_rows(stage, config.path("queries"), log);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      out.push_back(query_from_json(rows[i].value, config.path("queries").string() + ":" + std::to_string(rows[i].line)));
    } catch (const Error& e) {
      log.fail(i, e.what());
    }
  }
  return out;
}

// Outcome of one row processed on a worker: a JSON line or an error.
struct RowResult {
  std::optional<Json> value;
  std::string error;
  bool skipped = false;
};

template <typename Fn>
std::vector<RowResult> map_rows(std::size_t n, unsigned workers, Fn fn) {
  return parallel_map<RowResult>(n, workers, [&](std::size_t i) {
    RowResult r;
    try {
      r = fn(i);
    } catch (const std::exception& e) {
      r.value.reset();
      r.error = e.what();
    }
    return r;
  });
}

std::vector<Json> collect(std::vector<RowResult>& results, RowLog& log) {
  std::vector<Json> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].value) {
      out.push_back(std::move(*results[i].value));
    } else if (!results[i].skipped) {
      log.fail(i, results[i].error);
    }
  }
  return out;
}

}  // namespace

// --- stages -------------------------------------------------------------------------

StageReport run_scene_gen(const PipelineConfig& config) {
  StageReport r{"scene-gen", {}, {}, 0.0};
  const auto scenes = generate_scenes(config.scenes, config.stage_seed("scenes"));
  const auto queries = generate_queries(scenes, config.stage_seed("queries"), config.label_only);
  save_scenes(config.path("scenes"), scenes);
  save_queries(config.path("queries"), queries);
  r.counts = {{"scenes", scenes.size()}, {"queries", queries.size()}, {"label_only", config.label_only}};
  return r;
}

StageReport run_program_gen(const PipelineConfig& config) {
  StageReport r{"program-gen", {}, {}, 0.0};
  RowLog log(r.stage, config.strict);
  const auto queries = load_query_rows(r.stage, config, log);
  std::vector<Json> lines;
  std::size_t corrupted = 0;
  if (config.external_generator.enabled) {
    const auto scenes = scenes_by_id(r.stage, config);
    const ExternalGenerator generator(config.external_generator);
    auto results = map_rows(queries.size(), config.worker_count(), [&](std::size_t i) {
      RowResult out;
      const Query& q = queries[i];
      if (q.label_only) {
        out.skipped = true;
        return out;
      }
      auto scene = scenes.find(q.scene_id);
      if (scene == scenes.end()) throw LookupError("unknown scene '" + q.scene_id + "'");
      out.value = program_to_json(generator.generate(q, scene->second));
      return out;
    });
    lines = collect(results, log);
  } else {
    GeneratorConfig gen{config.corruption_rate, config.stage_seed("programs")};
    const auto batch = generate_programs(queries, TemplateBank::standard(), gen);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < queries.size(); ++i) index[queries[i].query_id] = i;
    for (const auto& f : batch.failures) log.fail(index[f.query_id], f.message);
    for (const auto& p : batch.programs) {
      corrupted += p.corrupted ? 1 : 0;
      lines.push_back(program_to_json(p));
    }
  }
  write_jsonl(config.path("programs"), lines);
  r.counts = {{"queries", queries.size()}, {"generated", lines.size()}, {"corrupted", corrupted}};
  r.errors = std::move(log.errors());
  return r;
}

StageReport run_exec(const PipelineConfig& config) {
  StageReport r{"exec", {}, {}, 0.0};
  RowLog log(r.stage, config.strict);
  const auto scenes = scenes_by_id(r.stage, config);
  std::map<std::string, Query> queries;
  for (auto& q : load_query_rows(r.stage, config, log)) queries.emplace(q.query_id, std::move(q));
  const auto rows = read_rows(r.stage, config.path("programs"), log);
  ExecuteOptions options;
  options.limits.max_steps = config.max_steps;
  options.noise = DetectorNoise{config.detector_noise, config.stage_seed("noise")};

  auto results = map_rows(rows.size(), config.worker_count(), [&](std::size_t i) {
    const std::string where = config.path("programs").string() + ":" + std::to_string(rows[i].line);
    const Program p = program_from_json(rows[i].value, where);
    auto q = queries.find(p.query_id);
    if (q == queries.end()) throw LookupError("program " + p.program_id + " references unknown query '" + p.query_id + "'");
    auto s = scenes.find(q->second.scene_id);
    if (s == scenes.end()) throw LookupError("query " + p.query_id + " references unknown scene");
    ExecutionTrace trace = execute(p.ast, s->second, options);
    trace.program_id = p.program_id;
    trace.query_id = p.query_id;
    const auto outcome = check_faithful(trace, q->second);
    Json line = trace_to_json(trace);
    line["filter"] = outcome.rejection ? reject_reason_name(*outcome.rejection) : "kept";
    return RowResult{std::move(line), {}, false};
  });
  const auto lines = collect(results, log);
  std::map<std::string, std::size_t> by_filter;
  for (const auto& l : lines) ++by_filter[l.at("filter").get<std::string>()];
  write_jsonl(config.path("traces"), lines);
  r.counts = {{"programs", rows.size()},
              {"executed", lines.size()},
              {"faithful_kept", by_filter["kept"]},
              {"wrong_answer", by_filter["wrong_answer"]},
              {"runtime_error", by_filter["runtime_error"]},
              {"step_limit", by_filter["step_limit"]}};
  r.errors = std::move(log.errors());
  return r;
}

StageReport run_edit(const PipelineConfig& config) {
  StageReport r{"edit", {}, {}, 0.0};
  RowLog log(r.stage, config.strict);
  const auto scenes = scenes_by_id(r.stage, config);
  std::map<std::string, std::string> scene_of;
  for (const auto& q : load_query_rows(r.stage, config, log)) scene_of[q.query_id] = q.scene_id;
  std::map<std::string, std::string> sources;
  for (const auto& row : read_rows(r.stage, config.path("programs"), log)) {
    if (row.value.contains("program_id") && row.value.contains("source"))
      sources[row.value.at("program_id").get<std::string>()] = row.value.at("source").get<std::string>();
  }
  const auto rows = read_rows(r.stage, config.path("traces"), log);
  std::unique_ptr<Bridger> external;
  if (!config.bridger_url.empty()) external = std::make_unique<ExternalBridger>(config.bridger_url, config.bridger_timeout);

  std::size_t fallbacks = 0;
  auto results = map_rows(rows.size(), config.worker_count(), [&](std::size_t i) {
    RowResult out;
    const Json& row = rows[i].value;
    if (row.value("filter", std::string()) != "kept") {
      out.skipped = true;
      return out;
    }
    const std::string where = config.path("traces").string() + ":" + std::to_string(rows[i].line);
    const ExecutionTrace trace = trace_from_json(row, where);
    auto src = sources.find(trace.program_id);
    if (src == sources.end()) throw LookupError("trace references unknown program '" + trace.program_id + "'");
    const Ast ast = parse(src->second);
    auto sid = scene_of.find(trace.query_id);
    if (sid == scene_of.end()) throw LookupError("trace references unknown query '" + trace.query_id + "'");
    auto scene = scenes.find(sid->second);
    if (scene == scenes.end()) throw LookupError("query references unknown scene '" + sid->second + "'");
    EditOptions options;
    options.prune = config.prune;
    options.merge = config.merge;
    options.bridge = config.bridge;
    options.scene = &scene->second;
    options.bridger = external.get();
    out.value = rationale_to_json(edit_trace(trace, ast, options));
    return out;
  });
  const auto lines = collect(results, log);
  for (const auto& l : lines) fallbacks += l.at("lineage").value("bridge_fallbacks", 0);
  write_jsonl(config.path("rationales"), lines);
  r.counts = {{"traces", rows.size()}, {"edited", lines.size()}, {"bridge_fallbacks", fallbacks}};
  r.errors = std::move(log.errors());
  return r;
}

StageReport run_score(const PipelineConfig& config) {
  StageReport r{"score", {}, {}, 0.0};
  RowLog log(r.stage, config.strict);
  std::map<std::string, Query> queries;
  for (auto& q : load_query_rows(r.stage, config, log)) queries.emplace(q.query_id, std::move(q));
  const auto rows = read_rows(r.stage, config.path("rationales"), log);
  StudentList students;
  ScoreOptions options;
  try {
    students = builtin_students(config.students);
    options = score_options(config.students);
  } catch (const ConfigError& e) {
    throw StageError(r.stage, "config", e.what());
  }
  auto results = map_rows(rows.size(), config.worker_count(), [&](std::size_t i) {
    const std::string where = config.path("rationales").string() + ":" + std::to_string(rows[i].line);
    const CotRationale rationale = rationale_from_json(rows[i].value, where);
    auto q = queries.find(rationale.query_id);
    if (q == queries.end()) throw LookupError("rationale references unknown query '" + rationale.query_id + "'");
    const ScoredRationale scored = utility_score(rationale, q->second, students, options);
    return RowResult{scored_to_json(scored, scored.score >= config.min_score), {}, false};
  });
  const auto lines = collect(results, log);
  std::size_t kept = 0, abstained = 0;
  for (const auto& l : lines) {
    kept += l.at("kept").get<bool>() ? 1 : 0;
    for (const auto& o : l.at("outcomes")) abstained += o.at("verdict") == "abstained" ? 1 : 0;
  }
  write_jsonl(config.path("scored"), lines);
  r.counts = {{"scored", lines.size()}, {"score_kept", kept}, {"score_rejected", lines.size() - kept}, {"abstained", abstained}};
  r.errors = std::move(log.errors());
  return r;
}

StageReport run_emit(const PipelineConfig& config) {
  StageReport r{"emit", {}, {}, 0.0};
  RowLog log(r.stage, config.strict);
  const auto queries = load_query_rows(r.stage, config, log);
  std::map<std::string, CotRationale> rationales;
  const auto rationale_rows = read_rows(r.stage, config.path("rationales"), log);
  for (const auto& row : rationale_rows) {
    const std::string where = config.path("rationales").string() + ":" + std::to_string(row.line);
    try {
      auto rat = rationale_from_json(row.value, where);
      rationales.emplace(rat.query_id, std::move(rat));
    } catch (const Error& e) {
      log.fail(row.line - 1, e.what());
    }
  }
  std::vector<ScoredRationale> kept;
  const auto scored_rows = read_rows(r.stage, config.path("scored"), log);
  for (std::size_t i = 0; i < scored_rows.size(); ++i) {
    const Json& row = scored_rows[i].value;
    try {
      if (!row.at("kept").get<bool>()) continue;
      const auto qid = row.at("query_id").get<std::string>();
      auto it = rationales.find(qid);
      if (it == rationales.end()) throw LookupError("scored row has no rationale for '" + qid + "'");
      ScoredRationale s;
      s.rationale = it->second;
      s.score = row.at("score").get<int>();
      kept.push_back(std::move(s));
    } catch (const Json::exception& e) {
      log.fail(i, e.what());
    } catch (const Error& e) {
      log.fail(i, e.what());
    }
  }
  std::vector<DistillExample> rows;
  try {
    rows = build_dataset(kept, queries);
  } catch (const EmissionError& e) {
    throw StageError(r.stage, "emission", e.what());
  }
  emit_dataset(config.path("dataset"), rows);
  std::size_t masked = 0;
  for (const auto& row : rows) masked += row.rationale ? 0 : 1;
  r.counts = {{"score_kept", kept.size()}, {"emitted", rows.size()}, {"masked", masked}};
  r.errors = std::move(log.errors());
  return r;
}

StageReport run_train(const PipelineConfig& config) {
  StageReport r{"train", {}, {}, 0.0};
  require_input(r.stage, config.path("dataset"));
  const auto rows = load_dataset(config.path("dataset"));
  if (rows.empty()) throw StageError(r.stage, "precondition", "dataset is empty");
  TrainConfig tc;
  tc.lambda = config.lambda;
  tc.epochs = config.epochs;
  tc.step = config.step;
  tc.hidden = config.hidden;
  tc.seed = config.stage_seed("train");
  const TrainMetrics m = train(rows, tc);
  write_json_file(config.path("metrics"), metrics_to_json(m));
  r.counts = {{"rows", rows.size()}, {"train", m.n_train}, {"heldout", m.n_heldout}};
  return r;
}

namespace {

StageReport dispatch(const std::string& stage, const PipelineConfig& config) {
  if (stage == "scene-gen") return run_scene_gen(config);
  if (stage == "program-gen") return run_program_gen(config);
  if (stage == "exec") return run_exec(config);
  if (stage == "edit") return run_edit(config);
  if (stage == "score") return run_score(config);
  if (stage == "emit") return run_emit(config);
  if (stage == "train") return run_train(config);
  throw StageError(stage, "usage", "unknown stage");
}

Json load_or_empty(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return Json::object();
  try {
    return read_json_file(path);
  } catch (const std::exception&) {
    return Json::object();
  }
}

void record(const StageReport& report, const PipelineConfig& config) {
  Json manifest = load_or_empty(config.path("manifest"));
  if (manifest.value("config_hash", std::string()) != config.hash()) manifest = Json::object();
  manifest["config_hash"] = config.hash();
  manifest["seed"] = config.seed;
  Json seeds = Json::object();
  for (const char* s : {"scenes", "queries", "programs", "noise", "train"}) seeds[s] = config.stage_seed(s);
  manifest["seeds"] = seeds;
  Json errors = Json::array();
  for (const auto& e : report.errors) errors.push_back(Json{{"row", e.row}, {"message", e.message}});
  manifest["stages"][report.stage] = Json{{"counts", report.counts}, {"errors", errors}};
  write_json_file(config.path("manifest"), manifest);

  Json timings = load_or_empty(config.path("timings"));
  timings[report.stage] = report.seconds;
  write_json_file(config.path("timings"), timings);
}

}  // namespace

StageReport run_stage(const std::string& stage, const PipelineConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  StageReport report;
  try {
    report = dispatch(stage, config);
  } catch (const StageError&) {
    throw;
  } catch (const LookupError& e) {
    throw StageError(stage, "missing_input", e.what());
  } catch (const SchemaError& e) {
    throw StageError(stage, "schema", e.what());
  } catch (const ConfigError& e) {
    throw StageError(stage, "config", e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, "internal", e.what());
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  record(report, config);
  return report;
}

std::vector<StageReport> run_all(const PipelineConfig& config) {
  std::vector<StageReport> out;
  for (const char* s : {"scene-gen", "program-gen", "exec", "edit", "score", "emit", "train"}) out.push_back(run_stage(s, config));
  return out;
}

FunnelCounts read_funnel(const std::filesystem::path& manifest_path) {
  const Json manifest = read_json_file(manifest_path);
  FunnelCounts f;
  auto count = [&](const char* stage, const char* key) -> std::size_t {
    const Json& stages = manifest.at("stages");
    if (!stages.contains(stage)) return 0;
    return stages.at(stage).at("counts").value(key, std::size_t{0});
  };
  f.generated = count("program-gen", "generated");
  f.executed = count("exec", "executed");
  f.faithful_kept = count("exec", "faithful_kept");
  f.edited = count("edit", "edited");
  f.score_kept = count("score", "score_kept");
  f.emitted = count("emit", "emitted");
  f.masked = count("emit", "masked");
  return f;
}

// --- ablation -----------------------------------------------------------------------

std::vector<AblationCell> run_ablation(const PipelineConfig& config) {
  std::vector<AblationCell> cells;
  for (int bits = 0; bits < 8; ++bits) {
    AblationCell cell;
    cell.prune = bits & 4;
    cell.merge = bits & 2;
    cell.bridge = bits & 1;
    PipelineConfig c = config;
    c.prune = cell.prune;
    c.merge = cell.merge;
    c.bridge = cell.bridge;
    const std::string name = std::string("p") + (cell.prune ? "1" : "0") + "m" + (cell.merge ? "1" : "0") + "b" +
                             (cell.bridge ? "1" : "0");
    const auto dir = config.work_dir / "ablation" / name;
    for (const char* artifact : {"rationales", "scored", "dataset", "metrics", "manifest", "timings"})
      c.paths[artifact] = dir / default_files().at(artifact);
    try {
      for (const char* s : {"edit", "score", "emit", "train"}) run_stage(s, c);
      std::size_t tokens = 0;
      for (const auto& row : read_jsonl(c.path("rationales"))) {
        tokens += token_count(row.value.at("text").get<std::string>());
        ++cell.rationales;
      }
      const FunnelCounts f = read_funnel(c.path("manifest"));
      cell.kept = f.score_kept;
      cell.mean_tokens = cell.rationales ? static_cast<double>(tokens) / static_cast<double>(cell.rationales) : 0.0;
      cell.keep_rate = cell.rationales ? static_cast<double>(cell.kept) / static_cast<double>(cell.rationales) : 0.0;
      cell.accuracy_heldout = read_json_file(c.path("metrics")).at("accuracy_heldout").get<double>();
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    cells.push_back(std::move(cell));
  }
  write_json_file(config.path("ablation"), ablation_to_json(cells));
  return cells;
}

Json ablation_to_json(const std::vector<AblationCell>& cells) {
  Json rows = Json::array();
  for (const auto& c : cells) {
    Json row{{"prune", c.prune},
             {"merge", c.merge},
             {"bridge", c.bridge},
             {"rationales", c.rationales},
             {"kept", c.kept},
             {"mean_tokens", c.mean_tokens},
             {"keep_rate", c.keep_rate},
             {"accuracy_heldout", c.accuracy_heldout}};
    if (!c.error.empty()) row["error"] = c.error;
    rows.push_back(std::move(row));
  }
  return Json{{"cells", rows}};
}

}  // namespace fact
