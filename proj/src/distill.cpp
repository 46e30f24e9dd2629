#include "fact/distill.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "fact/errors.hpp"
#include "fact/oracle.hpp"
#include "fact/rng.hpp"

namespace fact {

// --- dataset rows -------------------------------------------------------------------

Json example_to_json(const DistillExample& e) {
  return Json{{"query_id", e.query_id},
              {"question", e.question},
              {"label", e.label},
              {"rationale", e.rationale ? Json(*e.rationale) : Json(nullptr)}};
}

DistillExample example_from_json(const Json& json, const std::string& where) {
  DistillExample e;
  e.query_id = require_string(json, "query_id", where);
  e.question = require_string(json, "question", where);
  e.label = require_string(json, "label", where);
  const Json& r = require_field(json, "rationale", where);
  if (!r.is_null()) {
    if (!r.is_string()) throw SchemaError(where + ": field 'rationale' must be a string or null");
    e.rationale = r.get<std::string>();
  }
  return e;
}

std::vector<std::string> text_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> rationale_keywords(std::string_view rationale) {
  static const std::set<std::string> stopwords = {
      "a",    "an",   "and",   "are",  "as",   "at",    "be",    "by",   "each", "for", "from",
      "gives", "has",  "in",   "is",    "it",   "its",  "now",   "of",    "on",   "or",  "so",
      "that", "the",  "then",  "there", "therefore", "this", "to", "turn", "via",  "was", "we",
      "with", "which", "what", "next",  "recall", "answer", "checked", "calling"};
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (auto& t : text_tokens(rationale)) {
    if (stopwords.count(t) || !seen.insert(t).second) continue;
    out.push_back(t);
  }
  return out;
}

std::vector<DistillExample> build_dataset(const std::vector<ScoredRationale>& kept, const std::vector<Query>& queries) {
  std::map<std::string, const Query*> by_id;
  for (const auto& q : queries) by_id[q.query_id] = &q;
  std::vector<std::string> dangling;
  std::map<std::string, const ScoredRationale*> rationale_for;
  for (const auto& s : kept) {
    if (!by_id.count(s.rationale.query_id)) {
      dangling.push_back(s.rationale.query_id);
    } else {
      rationale_for[s.rationale.query_id] = &s;
    }
  }
  if (!dangling.empty()) {
    std::string ids;
    for (const auto& d : dangling) ids += (ids.empty() ? "" : ", ") + d;
    throw EmissionError("kept rationales reference unknown queries: " + ids);
  }
  std::vector<DistillExample> rows;
  for (const auto& q : queries) {
    DistillExample e{q.query_id, q.question, normalize_answer(q.expected_answer), std::nullopt};
    if (q.label_only) {
      rows.push_back(std::move(e));
    } else if (auto it = rationale_for.find(q.query_id); it != rationale_for.end()) {
      e.rationale = it->second->rationale.text;
      rows.push_back(std::move(e));
    }
  }
  return rows;
}

void emit_dataset(const std::filesystem::path& path, const std::vector<DistillExample>& rows) {
  std::set<std::string> labels;
  std::size_t masked = 0;
  for (const auto& r : rows) {
    labels.insert(r.label);
    masked += r.rationale ? 0 : 1;
  }
  std::vector<Json> lines;
  lines.push_back(Json{{"meta", Json{{"rows", rows.size()},
                                     {"masked", masked},
                                     {"label_vocabulary", std::vector<std::string>(labels.begin(), labels.end())}}}});
  for (const auto& r : rows) lines.push_back(example_to_json(r));
  write_jsonl(path, lines);
}

std::vector<DistillExample> load_dataset(const std::filesystem::path& path, DatasetHeader* header) {
  std::vector<DistillExample> rows;
  for (const auto& row : read_jsonl(path)) {
    const std::string where = path.string() + ":" + std::to_string(row.line);
    if (row.value.contains("meta")) {
      if (header) {
        const Json& meta = row.value.at("meta");
        header->rows = meta.value("rows", std::size_t{0});
        header->masked = meta.value("masked", std::size_t{0});
        header->label_vocabulary = meta.value("label_vocabulary", std::vector<std::string>{});
      }
      continue;
    }
    rows.push_back(example_from_json(row.value, where));
  }
  return rows;
}

// --- model --------------------------------------------------------------------------

int Vocab::add(const std::string& item) {
  auto [it, inserted] = index.emplace(item, static_cast<int>(items.size()));
  if (inserted) items.push_back(item);
  return it->second;
}

std::optional<int> Vocab::find(const std::string& item) const {
  auto it = index.find(item);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

namespace {

constexpr const char* kBias = "<bias>";

Vocab sorted_vocab(const std::set<std::string>& items) {
  Vocab v;
  for (const auto& i : items) v.add(i);
  return v;
}

Eigen::MatrixXd normal_matrix(Rng& rng, int rows, int cols, double sd) {
  Eigen::MatrixXd m(rows, cols);
  // Column-major fill order is part of the seeded contract.
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal(0.0, sd);
  }
  return m;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

ToyModel ToyModel::build(const std::vector<DistillExample>& rows, int hidden, std::uint64_t seed, double init_sd) {
  if (hidden < 1) throw ArgumentError("hidden size must be positive");
  std::set<std::string> feats, labels, keys;
  for (const auto& r : rows) {
    for (auto& t : text_tokens(r.question)) feats.insert(t);
    labels.insert(r.label);
    if (r.rationale) {
      for (auto& k : rationale_keywords(*r.rationale)) keys.insert(k);
    }
  }
  ToyModel m;
  m.features = sorted_vocab(feats);
  m.features.add(kBias);
  m.labels = sorted_vocab(labels);
  m.keywords = sorted_vocab(keys);
  Rng rng(hash_combine(seed, stable_hash("toy-model-init")));
  m.E = normal_matrix(rng, hidden, m.features.size(), init_sd);
  m.U = normal_matrix(rng, m.labels.size(), hidden, init_sd);
  m.R = normal_matrix(rng, m.keywords.size(), hidden, init_sd);
  return m;
}

EncodedBatch ToyModel::encode(const std::vector<DistillExample>& rows) const {
  EncodedBatch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.features = Eigen::MatrixXd::Zero(n, features.size());
  b.keywords = Eigen::MatrixXd::Zero(n, keywords.size());
  const int bias = *features.find(kBias);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (const auto& t : text_tokens(r.question)) {
      if (auto f = features.find(t)) b.features(i, *f) = 1.0;
    }
    b.features(i, bias) = 1.0;
    const auto label = labels.find(r.label);
    b.labels.push_back(label ? *label : -1);
    b.masked.push_back(!r.rationale.has_value());
    if (r.rationale) {
      for (const auto& k : rationale_keywords(*r.rationale)) {
        if (auto idx = keywords.find(k)) b.keywords(i, *idx) = 1.0;
      }
    }
  }
  return b;
}

int ToyModel::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd logits = U * (E * x);
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<int>(best);
}

bool ToyModel::finite() const { return E.allFinite() && U.allFinite() && R.allFinite(); }

// --- loss and gradients -------------------------------------------------------------

namespace {

struct Forward {
  Eigen::MatrixXd Z;      // n x hidden
  Eigen::MatrixXd P;      // n x labels, softmax
  Eigen::MatrixXd Q;      // n x keywords, sigmoid
  Eigen::MatrixXd KL;     // keyword logits
  Eigen::MatrixXd LL;     // label logits
};

Forward forward(const ToyModel& model, const EncodedBatch& batch) {
  Forward f;
  f.Z = batch.features * model.E.transpose();
  f.LL = f.Z * model.U.transpose();
  f.P.resize(f.LL.rows(), f.LL.cols());
  for (Eigen::Index i = 0; i < f.LL.rows(); ++i) {
    const double m = f.LL.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < f.LL.cols(); ++j) sum += std::exp(f.LL(i, j) - m);
    for (Eigen::Index j = 0; j < f.LL.cols(); ++j) f.P(i, j) = std::exp(f.LL(i, j) - m) / sum;
  }
  f.KL = f.Z * model.R.transpose();
  f.Q = f.KL.unaryExpr([](double z) { return sigmoid(z); });
  return f;
}

void check_batch(const ToyModel& model, const EncodedBatch& batch) {
  if (batch.labels.empty()) throw PreconditionError("loss needs a non-empty batch");
  for (int y : batch.labels) {
    if (y < 0 || y >= model.labels.size()) throw PreconditionError("batch label outside the model vocabulary");
  }
}

std::size_t unmasked_rows(const EncodedBatch& batch) {
  return static_cast<std::size_t>(std::count(batch.masked.begin(), batch.masked.end(), false));
}

}  // namespace

LossReport loss(const ToyModel& model, const EncodedBatch& batch) {
  check_batch(model, batch);
  const Forward f = forward(model, batch);
  const auto n = f.LL.rows();
  const auto k = f.KL.cols();
  LossReport r;
  r.lambda = model.lambda;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = f.LL.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < f.LL.cols(); ++j) sum += std::exp(f.LL(i, j) - m);
    const double ce = m + std::log(sum) - f.LL(i, batch.labels[static_cast<std::size_t>(i)]);
    r.per_example_label.push_back(ce);
    r.label += ce;
    if (batch.masked[static_cast<std::size_t>(i)] || k == 0) {
      r.per_example_rationale.push_back(std::nullopt);
      continue;
    }
    double bce = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) bce += softplus(f.KL(i, j)) - batch.keywords(i, j) * f.KL(i, j);
    bce /= static_cast<double>(k);
    r.per_example_rationale.push_back(bce);
    r.rationale += bce;
  }
  r.label /= static_cast<double>(n);
  const std::size_t m = k == 0 ? 0 : unmasked_rows(batch);
  r.rationale = m == 0 ? 0.0 : r.rationale / static_cast<double>(m);
  r.total = r.label + r.lambda * r.rationale;
  return r;
}

LossReport loss(const ToyModel& model, const std::vector<DistillExample>& batch) {
  return loss(model, model.encode(batch));
}

Gradients gradients(const ToyModel& model, const EncodedBatch& batch) {
  check_batch(model, batch);
  const Forward f = forward(model, batch);
  const auto n = f.LL.rows();
  const auto k = f.KL.cols();
  Eigen::MatrixXd G = f.P;
  for (Eigen::Index i = 0; i < n; ++i) G(i, batch.labels[static_cast<std::size_t>(i)]) -= 1.0;
  G /= static_cast<double>(n);

  Eigen::MatrixXd GR = Eigen::MatrixXd::Zero(n, k);
  const std::size_t m = k == 0 ? 0 : unmasked_rows(batch);
  if (m > 0 && model.lambda != 0.0) {
    const double scale = model.lambda / (static_cast<double>(m) * static_cast<double>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (batch.masked[static_cast<std::size_t>(i)]) continue;
      GR.row(i) = (f.Q.row(i) - batch.keywords.row(i)) * scale;
    }
  }
  Gradients g;
  g.U = G.transpose() * f.Z;
  g.R = GR.transpose() * f.Z;
  const Eigen::MatrixXd gZ = G * model.U + GR * model.R;
  g.E = gZ.transpose() * batch.features;
  return g;
}

double grad_check(const ToyModel& model, const EncodedBatch& batch, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) throw ArgumentError("grad_check epsilon must lie in (0, 1e-2]");
  const Gradients g = gradients(model, batch);
  ToyModel probe = model;
  double worst = 0.0;
  auto sweep = [&](Eigen::MatrixXd ToyModel::*param, const Eigen::MatrixXd& analytic) {
    Eigen::MatrixXd& w = probe.*param;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double keep = w(i, j);
        w(i, j) = keep + epsilon;
        const double up = loss(probe, batch).total;
        w(i, j) = keep - epsilon;
        const double down = loss(probe, batch).total;
        w(i, j) = keep;
        if (!std::isfinite(up) || !std::isfinite(down)) throw Error("grad_check: non-finite loss");
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = analytic(i, j);
        const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        worst = std::max(worst, err);
      }
    }
  };
  sweep(&ToyModel::E, g.E);
  sweep(&ToyModel::U, g.U);
  sweep(&ToyModel::R, g.R);
  return worst;
}

// --- training -----------------------------------------------------------------------

Json metrics_to_json(const TrainMetrics& m) {
  return Json{{"accuracy_train", m.accuracy_train},
              {"accuracy_heldout", m.accuracy_heldout},
              {"L_label", m.final_loss.label},
              {"L_rationale", m.final_loss.rationale},
              {"L", m.final_loss.total},
              {"lambda", m.lambda},
              {"seed", m.seed},
              {"n_train", m.n_train},
              {"n_heldout", m.n_heldout},
              {"epochs_run", m.epochs_run},
              {"diverged", m.diverged}};
}

namespace {

double accuracy(const ToyModel& model, const std::vector<DistillExample>& rows) {
  if (rows.empty()) return 0.0;
  const EncodedBatch b = model.encode(rows);
  std::size_t right = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::VectorXd x = b.features.row(static_cast<Eigen::Index>(i)).transpose();
    if (b.labels[i] >= 0 && model.predict(x) == b.labels[i]) ++right;
  }
  return static_cast<double>(right) / static_cast<double>(rows.size());
}

}  // namespace

TrainMetrics fit_and_evaluate(const std::vector<DistillExample>& train_rows,
                              const std::vector<DistillExample>& heldout_rows, const TrainConfig& config,
                              ToyModel* fitted) {
  if (train_rows.empty()) throw PreconditionError("training needs a non-empty dataset");
  if (config.lambda < 0.0) throw ArgumentError("lambda must be non-negative");
  // Held-out rows contribute labels only, so every held-out label is
  // representable while features and keywords come from training rows.
  std::vector<DistillExample> vocab_rows = train_rows;
  for (const auto& h : heldout_rows) vocab_rows.push_back(DistillExample{h.query_id, "", h.label, std::nullopt});
  ToyModel model = ToyModel::build(vocab_rows, config.hidden, config.seed);
  model.lambda = config.lambda;
  const EncodedBatch batch = model.encode(train_rows);

  TrainMetrics m;
  m.lambda = config.lambda;
  m.seed = config.seed;
  m.n_train = train_rows.size();
  m.n_heldout = heldout_rows.size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Gradients g = gradients(model, batch);
    ToyModel next = model;
    next.E -= config.step * g.E;
    next.U -= config.step * g.U;
    next.R -= config.step * g.R;
    if (!next.finite() || !std::isfinite(loss(next, batch).total)) {
      m.diverged = true;
      break;
    }
    model = std::move(next);
    m.epochs_run = epoch + 1;
  }
  m.final_loss = loss(model, batch);
  m.accuracy_train = accuracy(model, train_rows);
  m.accuracy_heldout = accuracy(model, heldout_rows);
  if (fitted) *fitted = std::move(model);
  return m;
}

TrainMetrics train(const std::vector<DistillExample>& dataset, const TrainConfig& config) {
  if (dataset.empty()) throw PreconditionError("training needs a non-empty dataset");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hash_combine(config.seed, stable_hash("train-split")));
  rng.shuffle(order);
  auto held = static_cast<std::size_t>(std::floor(config.heldout_fraction * static_cast<double>(dataset.size())));
  if (held >= dataset.size()) held = dataset.size() - 1;
  std::vector<DistillExample> train_rows, heldout_rows;
  for (std::size_t i = 0; i < order.size(); ++i) (i < held ? heldout_rows : train_rows).push_back(dataset[order[i]]);
  return fit_and_evaluate(train_rows, heldout_rows, config);
}

// --- constructed-correlation task ---------------------------------------------------

namespace {

std::string concept_name(int c) {
  const auto& colors = Vocabulary::colors();
  if (c < static_cast<int>(colors.size())) return colors[static_cast<std::size_t>(c)];
  return "concept" + std::to_string(c);
}

std::string concept_rationale(int c, int keywords) {
  std::string text = "it is " + concept_name(c) + " with";
  for (int j = 0; j < keywords; ++j) text += " k" + std::to_string(c) + "v" + std::to_string(j);
  return text + ".";
}

}  // namespace

CorrelatedTask make_correlated_task(const CorrelatedTaskConfig& cfg, std::uint64_t seed) {
  if (cfg.concepts < 2 || cfg.synonyms < 1 || cfg.noise_per_question > cfg.noise_tokens)
    throw ArgumentError("invalid correlated task configuration");
  Rng rng(hash_combine(seed, stable_hash("correlated-task")));
  std::vector<int> noise(static_cast<std::size_t>(cfg.noise_tokens));
  std::iota(noise.begin(), noise.end(), 0);

  auto question = [&](int c) {
    std::string q = "which shade has syn" + std::to_string(c) + "v" + std::to_string(rng.uniform_int(0, cfg.synonyms - 1));
    std::vector<int> pool = noise;
    rng.shuffle(pool);
    std::sort(pool.begin(), pool.begin() + cfg.noise_per_question);
    for (int t = 0; t < cfg.noise_per_question; ++t) q += " n" + std::to_string(pool[static_cast<std::size_t>(t)]);
    return q;
  };
  auto other = [&](int c) { return static_cast<int>((c + 1 + rng.uniform_int(0, cfg.concepts - 2)) % cfg.concepts); };

  const StudentList students = [] {
    StudentList s;
    s.push_back(std::make_unique<RationaleSensitiveStudent>("reader", RationaleSensitiveStudent::Trigger::Answer));
    return s;
  }();

  CorrelatedTask task;
  for (int i = 0; i < cfg.train_rows; ++i) {
    const int c = static_cast<int>(rng.uniform_int(0, cfg.concepts - 1));
    DistillExample e;
    e.query_id = "t" + std::to_string(i);
    e.question = question(c);
    const int label = rng.uniform() < cfg.label_flip ? other(c) : c;
    e.label = concept_name(label);
    const int cited = rng.uniform() < cfg.rationale_corruption ? other(c) : c;
    CotRationale candidate;
    candidate.query_id = e.query_id;
    candidate.text = concept_rationale(cited, cfg.keywords_per_concept);
    const Query probe{e.query_id, "", e.question, concept_name(c), false};
    const ScoredRationale scored = utility_score(candidate, probe, students);
    if (scored.score >= 0) {
      e.rationale = candidate.text;
      ++task.rationales_kept;
    } else {
      ++task.rationales_rejected;
    }
    task.train.push_back(std::move(e));
  }
  for (int i = 0; i < cfg.heldout_rows; ++i) {
    const int c = static_cast<int>(rng.uniform_int(0, cfg.concepts - 1));
    task.heldout.push_back(DistillExample{"h" + std::to_string(i), question(c), concept_name(c), std::nullopt});
  }
  return task;
}

}  // namespace fact
