#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "fact/dsl.hpp"
#include "fact/editor.hpp"
#include "fact/pipeline.hpp"
#include "support/oracles.hpp"

using namespace fact;
using fact::testing::TempDir;

namespace {

const std::vector<std::string> kStageFiles = {"scenes",     "queries", "programs", "traces", "rationales",
                                              "scored",     "dataset", "metrics",  "manifest"};

PipelineConfig small_config(const std::filesystem::path& dir) {
  PipelineConfig c;
  c.work_dir = dir;
  c.scenes = 60;
  c.epochs = 40;
  return c;
}

int run_cli(const std::string& args, const std::filesystem::path& err) {
  const std::string cmd = std::string(FACT_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline_cli") {

TEST_CASE("config json round trip, validation and hash") {
  PipelineConfig c;
  c.seeds["train"] = 5;
  c.min_score = 1;
  c.paths["dataset"] = "/tmp/elsewhere.jsonl";
  const PipelineConfig back = PipelineConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.stage_seed("train") == 5);
  CHECK(back.stage_seed("scenes") != back.stage_seed("programs"));
  CHECK(back.path("dataset") == "/tmp/elsewhere.jsonl");
  CHECK(back.path("scenes") == std::filesystem::path("fact_run") / "scenes.json");

  PipelineConfig moved = c;
  moved.work_dir = "other";
  moved.workers = 7;
  CHECK(moved.hash() == c.hash());
  moved.lambda = 0.5;
  CHECK(moved.hash() != c.hash());

  CHECK_THROWS_AS(PipelineConfig::from_json(Json{{"lamda", 1.0}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(Json{{"edit", {{"prun", false}}}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(Json{{"corruption_rate", 1.5}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(Json{{"scenes", "many"}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(Json{{"students", {{"students", Json::array()}}}}), ConfigError);
}

TEST_CASE("full run: faithful keep count equals the uncorrupted count, funnel holds") {
  TempDir dir("full");
  PipelineConfig c = small_config(dir.path);
  c.scenes = 200;
  c.label_only = 10;
  run_all(c);
  std::size_t corrupted = 0, programs = 0;
  for (const auto& row : read_jsonl(c.path("programs"))) {
    ++programs;
    corrupted += row.value.at("corrupted").get<bool>();
  }
  CHECK(programs == 200);
  CHECK(corrupted == 60);
  const FunnelCounts f = read_funnel(c.path("manifest"));
  CHECK(f.generated == 200);
  CHECK(f.faithful_kept == 140);
  CHECK(f.faithful_kept <= f.executed);
  CHECK(f.edited == f.faithful_kept);
  CHECK(f.score_kept <= f.faithful_kept);
  CHECK(f.masked == 10);
  CHECK(f.emitted == f.score_kept + f.masked);

  const Json manifest = read_json_file(c.path("manifest"));
  CHECK(manifest.at("config_hash") == c.hash());
  CHECK(manifest.at("seeds").at("programs") == c.stage_seed("programs"));
  CHECK(manifest.at("stages").size() == 7);
  CHECK(std::filesystem::exists(c.path("timings")));
}

TEST_CASE("reruns are byte-identical and worker count does not matter") {
  TempDir a("det_a"), b("det_b");
  PipelineConfig ca = small_config(a.path), cb = small_config(b.path);
  ca.workers = 1;
  cb.workers = 4;
  run_all(ca);
  run_all(cb);
  for (const auto& f : kStageFiles) CHECK_MESSAGE(read_text_file(ca.path(f)) == read_text_file(cb.path(f)), f);

  const std::string before = read_text_file(ca.path("rationales"));
  run_stage("edit", ca);
  CHECK(read_text_file(ca.path("rationales")) == before);
}

TEST_CASE("a malformed row fails alone unless strict") {
  TempDir dir("rows");
  PipelineConfig c = small_config(dir.path);
  run_stage("scene-gen", c);
  run_stage("program-gen", c);
  auto rows = read_jsonl(c.path("programs"));
  std::vector<Json> lines;
  for (const auto& r : rows) lines.push_back(r.value);
  lines[4]["source"] = "return (";
  lines[9].erase("query_id");
  write_jsonl(c.path("programs"), lines);

  const StageReport r = run_stage("exec", c);
  REQUIRE(r.errors.size() == 2);
  CHECK(r.errors[0].row == 4);
  CHECK(r.errors[1].row == 9);
  CHECK(r.counts.at("executed") == rows.size() - 2);
  const Json manifest = read_json_file(c.path("manifest"));
  CHECK(manifest.at("stages").at("exec").at("errors").size() == 2);

  c.strict = true;
  try {
    run_stage("exec", c);
    FAIL("strict run should abort");
  } catch (const StageError& e) {
    CHECK(e.stage() == "exec");
    CHECK(e.row() == 4);
    CHECK(e.report().at("error").at("row") == 4);
  }
}

TEST_CASE("missing input names the stage") {
  TempDir dir("missing");
  const PipelineConfig c = small_config(dir.path);
  try {
    run_stage("score", c);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "score");
    CHECK(e.kind() == "missing_input");
  }
}

TEST_CASE("ablation grid: eight complete cells, concise full edit") {
  TempDir dir("ablate");
  PipelineConfig c = small_config(dir.path);
  c.scenes = 100;
  run_all(c);
  const auto cells = run_ablation(c);
  REQUIRE(cells.size() == 8);
  auto cell = [&](bool p, bool m, bool b) {
    for (const auto& x : cells) {
      if (x.prune == p && x.merge == m && x.bridge == b) return x;
    }
    FAIL("cell missing");
    return AblationCell{};
  };
  for (const auto& x : cells) {
    CHECK(x.error.empty());
    CHECK(x.rationales == read_funnel(c.path("manifest")).faithful_kept);
  }
  CHECK(cell(true, true, true).mean_tokens < cell(false, true, false).mean_tokens);
  CHECK(cell(false, true, false).mean_tokens < cell(false, false, false).mean_tokens);
  CHECK(cell(true, true, true).keep_rate >= cell(false, false, false).keep_rate);
  CHECK(read_json_file(c.path("ablation")).at("cells").size() == 8);
}

TEST_CASE("a failing ablation cell is recorded and the rest run") {
  TempDir dir("ablate_fail");
  PipelineConfig c = small_config(dir.path);
  c.scenes = 20;
  run_all(c);
  // Without the queries file every cell's edit stage fails.
  std::filesystem::remove(c.path("queries"));
  const auto cells = run_ablation(c);
  REQUIRE(cells.size() == 8);
  for (const auto& x : cells) CHECK(x.error.find("queries.jsonl") != std::string::npos);
}

TEST_CASE("cli: edit with every toggle off renders the raw trace") {
  TempDir dir("cli_raw");
  const auto err = dir.path / "err.txt";
  const std::string wd = "--work-dir " + dir.path.string() + " --scenes 30";
  for (const char* verb : {"scene-gen", "program-gen", "exec"}) REQUIRE(run_cli(wd + " " + verb, err) == 0);
  REQUIRE(run_cli(wd + " --no-prune --no-merge --no-bridge edit", err) == 0);

  PipelineConfig c;
  c.work_dir = dir.path;
  std::map<std::string, Scene> scenes;
  for (auto& s : load_scenes(c.path("scenes"))) scenes.emplace(s.scene_id, s);
  std::map<std::string, std::string> scene_of;
  for (const auto& q : load_queries(c.path("queries"))) scene_of[q.query_id] = q.scene_id;
  std::map<std::string, std::string> expected;
  for (const auto& row : read_jsonl(c.path("traces"))) {
    if (row.value.at("filter") != "kept") continue;
    const ExecutionTrace t = trace_from_json(row.value, "test");
    std::string text;
    for (const auto& s : render(symbolize(keep_all(t), &scenes.at(scene_of.at(t.query_id)))))
      text += (text.empty() ? "" : " ") + s;
    expected[t.query_id] = text;
  }
  const auto rationales = read_jsonl(c.path("rationales"));
  CHECK(rationales.size() == expected.size());
  for (const auto& row : rationales) {
    CHECK(row.value.at("text") == expected.at(row.value.at("query_id").get<std::string>()));
  }
}

TEST_CASE("cli: errors exit nonzero with a json report") {
  TempDir dir("cli_err");
  const auto err = dir.path / "err.txt";
  CHECK(run_cli("--work-dir " + (dir.path / "nothing").string() + " exec", err) == 1);
  const Json report = Json::parse(read_text_file(err));
  CHECK(report.at("error").at("stage") == "exec");
  CHECK(report.at("error").at("kind") == "missing_input");

  write_text_file(dir.path / "bad.json", "{\"bogus\": 1}");
  CHECK(run_cli("--config " + (dir.path / "bad.json").string() + " exec", err) == 2);
  CHECK(Json::parse(read_text_file(err)).at("error").at("kind") == "config");
  CHECK(run_cli("frobnicate", err) != 0);
  CHECK(run_cli("--seed notanumber exec", err) != 0);
}

TEST_CASE("cli: config file and seed flag") {
  TempDir dir("cli_cfg");
  const auto err = dir.path / "err.txt";
  PipelineConfig c;
  c.scenes = 15;
  c.epochs = 20;
  c.work_dir = dir.path / "a";
  write_json_file(dir.path / "cfg.json", c.to_json());
  REQUIRE(run_cli("--config " + (dir.path / "cfg.json").string() + " run-all", err) == 0);
  REQUIRE(run_cli("--config " + (dir.path / "cfg.json").string() + " --work-dir " + (dir.path / "b").string() +
                      " --seed 99 run-all",
                  err) == 0);
  CHECK(read_json_file(dir.path / "a" / "manifest.json").at("seed") == 1);
  CHECK(read_json_file(dir.path / "b" / "manifest.json").at("seed") == 99);
  CHECK(read_text_file(dir.path / "a" / "scenes.json") != read_text_file(dir.path / "b" / "scenes.json"));
}

}
