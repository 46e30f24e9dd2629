#include <doctest.h>

#include <cmath>

#include "fact/distill.hpp"
#include "fact/rng.hpp"
#include "support/oracles.hpp"

using namespace fact;
using fact::testing::max_relative_gradient_error;
using fact::testing::TempDir;

namespace {

std::vector<DistillExample> toy_rows(int n, int classes, std::uint64_t seed, double masked_fraction = 0.3) {
  const std::vector<std::string> words = {"red", "cup", "dog", "left", "many", "plate", "blue", "small"};
  const std::vector<std::string> labels = {"yes", "no", "2", "3", "red"};
  Rng rng(seed);
  std::vector<DistillExample> rows;
  for (int i = 0; i < n; ++i) {
    DistillExample e;
    e.query_id = "q" + std::to_string(i);
    for (int w = 0; w < 4; ++w) e.question += words[static_cast<std::size_t>(rng.uniform_int(0, 7))] + " ";
    e.label = labels[static_cast<std::size_t>(rng.uniform_int(0, classes - 1))];
    if (rng.uniform() >= masked_fraction) e.rationale = "Checking gives " + e.label + " via " + words[static_cast<std::size_t>(i % 8)];
    rows.push_back(e);
  }
  return rows;
}

ScoredRationale kept_rationale(const std::string& query_id, const std::string& text) {
  ScoredRationale s;
  s.rationale.query_id = query_id;
  s.rationale.program_id = "p_" + query_id;
  s.rationale.text = text;
  return s;
}

}  // namespace

TEST_SUITE("distill_kit") {

TEST_CASE("dataset: kept rationales plus masked label-only rows") {
  std::vector<Query> queries;
  std::vector<ScoredRationale> kept;
  for (int i = 0; i < 10; ++i) {
    queries.push_back(Query{"q" + std::to_string(i), "s", "how many cups", "Two", false});
    kept.push_back(kept_rationale(queries.back().query_id, "Therefore the answer is 2."));
  }
  for (int i = 0; i < 5; ++i) queries.push_back(Query{"l" + std::to_string(i), "s", "is there a dog", "yes", true});
  queries.push_back(Query{"dropped", "s", "is there a cat", "no", false});  // rationale rejected upstream

  const auto rows = build_dataset(kept, queries);
  REQUIRE(rows.size() == 15);
  CHECK(std::count_if(rows.begin(), rows.end(), [](const DistillExample& e) { return !e.rationale; }) == 5);
  CHECK(rows[0].label == "2");

  TempDir dir("emit");
  emit_dataset(dir.path / "a.jsonl", rows);
  emit_dataset(dir.path / "b.jsonl", build_dataset(kept, queries));
  CHECK(read_text_file(dir.path / "a.jsonl") == read_text_file(dir.path / "b.jsonl"));
  DatasetHeader header;
  const auto back = load_dataset(dir.path / "a.jsonl", &header);
  CHECK(header.rows == 15);
  CHECK(header.masked == 5);
  CHECK(back.size() == 15);
  CHECK(back[3].rationale == rows[3].rationale);

  kept.push_back(kept_rationale("ghost", "x"));
  CHECK_THROWS_AS(build_dataset(kept, queries), EmissionError);
}

TEST_CASE("empty kept set still writes the header") {
  TempDir dir("emit_empty");
  emit_dataset(dir.path / "d.jsonl", build_dataset({}, {}));
  DatasetHeader header;
  CHECK(load_dataset(dir.path / "d.jsonl", &header).empty());
  CHECK(header.rows == 0);
  CHECK(read_jsonl(dir.path / "d.jsonl").size() == 1);
}

TEST_CASE("loss identity on random batches and lambdas") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rows = toy_rows(30, 4, seed);
    ToyModel m = ToyModel::build(rows, 6, seed, 0.5);
    for (double lambda : {0.0, 0.3, 1.0, 2.5}) {
      m.lambda = lambda;
      const LossReport r = loss(m, rows);
      CHECK(r.total == doctest::Approx(r.label + lambda * r.rationale).epsilon(1e-12));
      CHECK(r.rationale >= 0.0);
    }
  }
}

TEST_CASE("all rows masked leaves the label loss alone") {
  const auto rows = toy_rows(20, 3, 4, 1.0);
  const ToyModel m = ToyModel::build(rows, 4, 4);
  const LossReport r = loss(m, rows);
  CHECK(r.rationale == 0.0);
  CHECK(r.total == r.label);
}

TEST_CASE("near-uniform init gives label loss close to ln 3") {
  const auto rows = toy_rows(60, 3, 8);
  const ToyModel m = ToyModel::build(rows, 8, 8);
  REQUIRE(m.labels.size() == 3);
  CHECK(std::abs(loss(m, rows).label - std::log(3.0)) < 0.1 * std::log(3.0));
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto rows = toy_rows(12, 3, 100 + seed);
    ToyModel m = ToyModel::build(rows, 5, seed, 0.7);
    m.lambda = 0.8;
    const EncodedBatch batch = m.encode(rows);
    CHECK(max_relative_gradient_error(m, batch, gradients(m, batch), 1e-5) <= 1e-5);
    CHECK(grad_check(m, batch, 1e-5) <= 1e-5);
  }
  const auto rows = toy_rows(5, 2, 1);
  const ToyModel m = ToyModel::build(rows, 3, 1);
  CHECK_THROWS_AS(grad_check(m, m.encode(rows), 0.0), ArgumentError);
  CHECK_THROWS_AS(grad_check(m, m.encode(rows), 0.1), ArgumentError);
}

TEST_CASE("degenerate gradients") {
  const auto single = toy_rows(10, 1, 3);
  ToyModel one = ToyModel::build(single, 4, 3);
  REQUIRE(one.labels.size() == 1);
  CHECK(gradients(one, one.encode(single)).U.cwiseAbs().maxCoeff() == 0.0);

  const auto rows = toy_rows(10, 3, 3);
  ToyModel m = ToyModel::build(rows, 4, 3);
  m.lambda = 0.0;
  const Gradients g = gradients(m, m.encode(rows));
  CHECK(g.R.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.U.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("a zero step leaves parameters unchanged") {
  const auto rows = toy_rows(20, 3, 6);
  TrainConfig c;
  c.epochs = 1;
  c.step = 0.0;
  c.seed = 6;
  c.hidden = 4;
  ToyModel fitted;
  fit_and_evaluate(rows, {}, c, &fitted);
  const ToyModel initial = ToyModel::build(rows, 4, 6);
  CHECK(fitted.E == initial.E);
  CHECK(fitted.U == initial.U);
  CHECK(fitted.R == initial.R);
}

TEST_CASE("training is deterministic and lowers the loss") {
  const auto rows = toy_rows(80, 3, 9);
  TrainConfig c;
  c.seed = 9;
  c.epochs = 100;
  const Json a = metrics_to_json(train(rows, c));
  const Json b = metrics_to_json(train(rows, c));
  CHECK(a == b);
  CHECK(a.at("n_heldout") == 16);
  CHECK(a.at("n_train") == 64);

  TrainConfig none = c;
  none.epochs = 0;
  CHECK(a.at("L").get<double>() < metrics_to_json(train(rows, none)).at("L").get<double>());
}

TEST_CASE("rationale supervision helps on the correlated task") {
  const CorrelatedTask task = make_correlated_task({}, 3);
  CHECK(task.rationales_rejected > 0);
  CHECK(task.rationales_kept > task.rationales_rejected);
  TrainConfig with, without;
  with.seed = without.seed = 3;
  with.lambda = 1.0;
  without.lambda = 0.0;
  const double a = fit_and_evaluate(task.train, task.heldout, with).accuracy_heldout;
  const double b = fit_and_evaluate(task.train, task.heldout, without).accuracy_heldout;
  CHECK(a > b);
}

TEST_CASE("keywords drop stopwords and repeats") {
  CHECK(rationale_keywords("The cup is 3 and the cup is 3.") == std::vector<std::string>{"cup", "3"});
  CHECK(text_tokens("Hi, There!") == std::vector<std::string>{"hi", "there"});
}

}
