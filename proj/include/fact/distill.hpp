#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fact/jsonl.hpp"
#include "fact/scene.hpp"
#include "fact/transfer.hpp"

namespace fact {

struct DistillExample {
  std::string query_id;
  std::string question;
  std::string label;
  std::optional<std::string> rationale;  // absent: rationale loss masked
};

Json example_to_json(const DistillExample& e);
DistillExample example_from_json(const Json& json, const std::string& where);

// Lowercase alphanumeric tokens.
std::vector<std::string> text_tokens(std::string_view text);
// Distinct content tokens of a rationale: text_tokens minus stopwords.
std::vector<std::string> rationale_keywords(std::string_view rationale);

struct DatasetHeader {
  std::size_t rows = 0;
  std::size_t masked = 0;
  std::vector<std::string> label_vocabulary;
};

// One row per kept rationale (in query order) plus one masked row per
// label-only query. Raises EmissionError naming kept rationales whose query
// is missing.
std::vector<DistillExample> build_dataset(const std::vector<ScoredRationale>& kept, const std::vector<Query>& queries);

// Writes a {"meta": ...} header line followed by the rows.
void emit_dataset(const std::filesystem::path& path, const std::vector<DistillExample>& rows);
std::vector<DistillExample> load_dataset(const std::filesystem::path& path, DatasetHeader* header = nullptr);

// Index maps for a closed vocabulary; unknown tokens map to nothing.
struct Vocab {
  std::map<std::string, int> index;
  std::vector<std::string> items;
  int add(const std::string& item);
  std::optional<int> find(const std::string& item) const;
  int size() const { return static_cast<int>(items.size()); }
};

// Dense matrices for one batch. Row i of `features` is the bag of question
// tokens plus a bias column; `keywords` row i is the 0/1 keyword target.
struct EncodedBatch {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  Eigen::MatrixXd keywords;
  std::vector<bool> masked;
};

// Shared embedding E (hidden x features), label head U (labels x hidden) and
// rationale head R (keywords x hidden). Label logits U E x, keyword logits
// R E x.
struct ToyModel {
  Vocab features;  // last column is the bias
  Vocab labels;
  Vocab keywords;
  Eigen::MatrixXd E;
  Eigen::MatrixXd U;
  Eigen::MatrixXd R;
  double lambda = 1.0;

  // Builds vocabularies from `rows` and draws parameters from N(0, init_sd).
  static ToyModel build(const std::vector<DistillExample>& rows, int hidden, std::uint64_t seed, double init_sd = 0.1);

  EncodedBatch encode(const std::vector<DistillExample>& rows) const;
  int predict(const Eigen::VectorXd& x) const;
  bool finite() const;
};

struct LossReport {
  double label = 0.0;
  double rationale = 0.0;
  double total = 0.0;
  double lambda = 1.0;
  std::vector<double> per_example_label;
  std::vector<std::optional<double>> per_example_rationale;
};

struct Gradients {
  Eigen::MatrixXd E;
  Eigen::MatrixXd U;
  Eigen::MatrixXd R;
};

// Raises PreconditionError on an empty batch.
LossReport loss(const ToyModel& model, const EncodedBatch& batch);
LossReport loss(const ToyModel& model, const std::vector<DistillExample>& batch);
Gradients gradients(const ToyModel& model, const EncodedBatch& batch);

// |a - n| / max(1, |a|, |n|) over every parameter, with n from central
// differences. Raises ArgumentError unless 0 < epsilon <= 1e-2 and Error on
// a non-finite loss.
double grad_check(const ToyModel& model, const EncodedBatch& batch, double epsilon = 1e-5);

struct TrainConfig {
  double lambda = 1.0;
  int epochs = 300;
  double step = 0.5;
  std::uint64_t seed = 0;
  int hidden = 8;
  double heldout_fraction = 0.2;
};

struct TrainMetrics {
  double accuracy_train = 0.0;
  double accuracy_heldout = 0.0;
  LossReport final_loss;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_heldout = 0;
  int epochs_run = 0;
  bool diverged = false;
};

Json metrics_to_json(const TrainMetrics& m);

// Seeded 80/20 split, then fit_and_evaluate.
TrainMetrics train(const std::vector<DistillExample>& dataset, const TrainConfig& config);

// Full-batch gradient descent on `train_rows`; accuracy on `heldout_rows`.
// Stops at the last finite state if the loss diverges. The fitted model is
// returned through `fitted` when given.
TrainMetrics fit_and_evaluate(const std::vector<DistillExample>& train_rows,
                              const std::vector<DistillExample>& heldout_rows, const TrainConfig& config,
                              ToyModel* fitted = nullptr);

// A task where question tokens signal a hidden concept, training labels are
// noisy and rationales name the concept's keywords. A fraction of candidate
// rationales are corrupted (they cite another concept); scoring with a
// rationale-sensitive student masks those.
struct CorrelatedTaskConfig {
  int concepts = 4;
  int synonyms = 4;
  int noise_tokens = 40;
  int noise_per_question = 4;
  int train_rows = 80;
  int heldout_rows = 400;
  int keywords_per_concept = 3;
  double label_flip = 0.35;
  double rationale_corruption = 0.2;
};

struct CorrelatedTask {
  std::vector<DistillExample> train;    // noisy labels, score-filtered rationales
  std::vector<DistillExample> heldout;  // clean labels, no rationales
  std::size_t rationales_kept = 0;
  std::size_t rationales_rejected = 0;
};

CorrelatedTask make_correlated_task(const CorrelatedTaskConfig& config, std::uint64_t seed);

}  // namespace fact
