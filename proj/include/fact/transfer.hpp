#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fact/editor.hpp"
#include "fact/jsonl.hpp"
#include "fact/scene.hpp"

namespace fact {

// A student probed with and without a rationale. Implementations must return
// identical answers for identical arguments and be safe for concurrent calls.
class StudentOracle {
 public:
  explicit StudentOracle(std::string name) : name_(std::move(name)) {}
  virtual ~StudentOracle() = default;
  const std::string& name() const { return name_; }
  virtual std::string answer(const Query& query, std::optional<std::string_view> context) const = 0;

 private:
  std::string name_;
};

// Knows the ground truth but fails ("unknown") on a seeded subset of
// questions, chosen by hashing (seed, query_id). Ignores context.
class NoisyOracleStudent : public StudentOracle {
 public:
  NoisyOracleStudent(std::string name, std::uint64_t seed, double failure_rate);
  std::string answer(const Query& query, std::optional<std::string_view> context) const override;
  bool fails_on(const Query& query) const;

 private:
  std::uint64_t seed_;
  double failure_rate_;
};

// Answers "unknown" unless the rationale mentions the expected answer
// (`answer` mode) or the question's subject noun (`fact` mode). With a window
// only the first `window` rationale tokens are read.
class RationaleSensitiveStudent : public StudentOracle {
 public:
  enum class Trigger { Answer, Fact };
  RationaleSensitiveStudent(std::string name, Trigger trigger, std::optional<std::size_t> window = std::nullopt);
  std::string answer(const Query& query, std::optional<std::string_view> context) const override;

 private:
  Trigger trigger_;
  std::optional<std::size_t> window_;
};

// Always gives the same answer.
class StubbornStudent : public StudentOracle {
 public:
  StubbornStudent(std::string name, std::string fixed);
  std::string answer(const Query& query, std::optional<std::string_view> context) const override;

 private:
  std::string fixed_;
};

// Normalized tokens of free text: lowercase alphanumeric runs passed through
// normalize_answer.
std::vector<std::string> answer_tokens(std::string_view text);

enum class Verdict { Useful, NonUseful, Unsure, Harmful };
const char* verdict_name(Verdict v);

// wrong->right Useful, wrong->wrong NonUseful, right->right Unsure,
// right->wrong Harmful.
Verdict verdict_for(bool before_correct, bool after_correct);

struct ScoreOptions {
  int harmful_value = -1;  // -1 or 0
};

int verdict_value(Verdict v, const ScoreOptions& options = {});

struct UtilityOutcome {
  std::string student;
  bool before_correct = false;
  bool after_correct = false;
  Verdict verdict = Verdict::Unsure;
  int value = 0;
  bool abstained = false;
  std::string error;
};

struct ScoredRationale {
  CotRationale rationale;
  std::vector<UtilityOutcome> outcomes;
  int score = 0;
};

using StudentList = std::vector<std::unique_ptr<StudentOracle>>;

// Raises PreconditionError without students. A throwing student abstains
// and contributes 0.
ScoredRationale utility_score(const CotRationale& rationale, const Query& query, const StudentList& students,
                              const ScoreOptions& options = {});

struct ScoreFilterResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> rejected;
};

ScoreFilterResult filter_by_score(const std::vector<ScoredRationale>& scored, int min_score = 0);

// Config: {"students": [{"kind": "noisy_oracle" | "rationale_sensitive" |
// "stubborn", "name"?, "seed"?, "failure_rate"?, "trigger_mode"?, "window"?,
// "answer"?}], "harmful_value"?}. Unknown kinds raise ConfigError.
StudentList builtin_students(const Json& config);
ScoreOptions score_options(const Json& config);
Json default_student_config();

Json scored_to_json(const ScoredRationale& scored, bool kept);

}  // namespace fact
