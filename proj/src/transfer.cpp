#include "fact/transfer.hpp"

#include <algorithm>
#include <cctype>

#include "fact/errors.hpp"
#include "fact/oracle.hpp"
#include "fact/rng.hpp"

namespace fact {

std::vector<std::string> answer_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(normalize_answer(cur));
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

namespace {

bool is_correct(const std::string& answer, const Query& query) {
  return normalize_answer(answer) == normalize_answer(query.expected_answer);
}

bool contains_all(const std::vector<std::string>& haystack, const std::vector<std::string>& needles) {
  if (needles.empty()) return false;
  return std::all_of(needles.begin(), needles.end(), [&](const std::string& n) {
    return std::find(haystack.begin(), haystack.end(), n) != haystack.end();
  });
}

}  // namespace

NoisyOracleStudent::NoisyOracleStudent(std::string name, std::uint64_t seed, double failure_rate)
    : StudentOracle(std::move(name)), seed_(seed), failure_rate_(failure_rate) {
  if (failure_rate < 0.0 || failure_rate > 1.0) throw ConfigError("failure_rate must lie in [0, 1]");
}

bool NoisyOracleStudent::fails_on(const Query& query) const {
  return unit_interval(hash_combine(seed_, stable_hash(query.query_id))) < failure_rate_;
}

std::string NoisyOracleStudent::answer(const Query& query, std::optional<std::string_view>) const {
  return fails_on(query) ? std::string(kUnknownAnswer) : normalize_answer(query.expected_answer);
}

RationaleSensitiveStudent::RationaleSensitiveStudent(std::string name, Trigger trigger, std::optional<std::size_t> window)
    : StudentOracle(std::move(name)), trigger_(trigger), window_(window) {
  if (window && *window == 0) throw ConfigError("window must be positive");
}

std::string RationaleSensitiveStudent::answer(const Query& query, std::optional<std::string_view> context) const {
  if (!context) return kUnknownAnswer;
  auto tokens = answer_tokens(*context);
  if (window_ && tokens.size() > *window_) tokens.resize(*window_);
  std::vector<std::string> needles;
  if (trigger_ == Trigger::Answer) {
    needles = answer_tokens(query.expected_answer);
  } else if (const auto parsed = parse_question(query.question)) {
    needles = {parsed->subject};
  }
  return contains_all(tokens, needles) ? normalize_answer(query.expected_answer) : std::string(kUnknownAnswer);
}

StubbornStudent::StubbornStudent(std::string name, std::string fixed)
    : StudentOracle(std::move(name)), fixed_(std::move(fixed)) {}

std::string StubbornStudent::answer(const Query&, std::optional<std::string_view>) const { return fixed_; }

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Useful: return "useful";
    case Verdict::NonUseful: return "non_useful";
    case Verdict::Unsure: return "unsure";
    case Verdict::Harmful: return "harmful";
  }
  return "?";
}

Verdict verdict_for(bool before_correct, bool after_correct) {
  if (!before_correct) return after_correct ? Verdict::Useful : Verdict::NonUseful;
  return after_correct ? Verdict::Unsure : Verdict::Harmful;
}

int verdict_value(Verdict v, const ScoreOptions& options) {
  switch (v) {
    case Verdict::Useful: return 1;
    case Verdict::NonUseful: return -1;
    case Verdict::Unsure: return 0;
    case Verdict::Harmful: return options.harmful_value;
  }
  return 0;
}

ScoredRationale utility_score(const CotRationale& rationale, const Query& query, const StudentList& students,
                              const ScoreOptions& options) {
  if (students.empty()) throw PreconditionError("utility_score needs at least one student");
  ScoredRationale out;
  out.rationale = rationale;
  for (const auto& student : students) {
    UtilityOutcome o;
    o.student = student->name();
    try {
      o.before_correct = is_correct(student->answer(query, std::nullopt), query);
      o.after_correct = is_correct(student->answer(query, rationale.text), query);
      o.verdict = verdict_for(o.before_correct, o.after_correct);
      o.value = verdict_value(o.verdict, options);
    } catch (const std::exception& e) {
      o = UtilityOutcome{};
      o.student = student->name();
      o.abstained = true;
      o.error = e.what();
    }
    out.score += o.value;
    out.outcomes.push_back(std::move(o));
  }
  return out;
}

ScoreFilterResult filter_by_score(const std::vector<ScoredRationale>& scored, int min_score) {
  ScoreFilterResult out;
  for (std::size_t i = 0; i < scored.size(); ++i) (scored[i].score >= min_score ? out.kept : out.rejected).push_back(i);
  return out;
}

StudentList builtin_students(const Json& config) {
  const auto it = config.find("students");
  if (it == config.end() || !it->is_array() || it->empty()) throw ConfigError("student config needs a non-empty 'students' list");
  StudentList out;
  std::size_t index = 0;
  for (const auto& spec : *it) {
    try {
      const std::string kind = spec.at("kind").get<std::string>();
      const std::string name = spec.value("name", kind + "_" + std::to_string(index));
      if (kind == "noisy_oracle") {
        out.push_back(std::make_unique<NoisyOracleStudent>(name, spec.value("seed", std::uint64_t{0}),
                                                           spec.value("failure_rate", 0.0)));
      } else if (kind == "rationale_sensitive") {
        const std::string mode = spec.value("trigger_mode", std::string("answer"));
        if (mode != "answer" && mode != "fact") throw ConfigError("unknown trigger_mode '" + mode + "'");
        std::optional<std::size_t> window;
        if (spec.contains("window")) window = spec.at("window").get<std::size_t>();
        out.push_back(std::make_unique<RationaleSensitiveStudent>(
            name, mode == "answer" ? RationaleSensitiveStudent::Trigger::Answer : RationaleSensitiveStudent::Trigger::Fact,
            window));
      } else if (kind == "stubborn") {
        out.push_back(std::make_unique<StubbornStudent>(name, spec.value("answer", std::string("yes"))));
      } else {
        throw ConfigError("unknown student kind '" + kind + "'");
      }
    } catch (const Json::exception& e) {
      throw ConfigError("student " + std::to_string(index) + ": " + e.what());
    }
    ++index;
  }
  return out;
}

ScoreOptions score_options(const Json& config) {
  ScoreOptions o;
  o.harmful_value = config.value("harmful_value", -1);
  if (o.harmful_value != -1 && o.harmful_value != 0) throw ConfigError("harmful_value must be -1 or 0");
  return o;
}

Json default_student_config() {
  return Json{{"students",
               Json::array({Json{{"kind", "noisy_oracle"}, {"name", "noisy"}, {"seed", 17}, {"failure_rate", 0.4}},
                            Json{{"kind", "rationale_sensitive"}, {"name", "reader"}, {"trigger_mode", "answer"}},
                            Json{{"kind", "stubborn"}, {"name", "stubborn"}, {"answer", "yes"}}})},
              {"harmful_value", -1}};
}

Json scored_to_json(const ScoredRationale& scored, bool kept) {
  Json outcomes = Json::array();
  for (const auto& o : scored.outcomes) {
    Json row{{"student", o.student},
             {"before_correct", o.before_correct},
             {"after_correct", o.after_correct},
             {"verdict", o.abstained ? "abstained" : verdict_name(o.verdict)},
             {"value", o.value}};
    if (o.abstained) row["error"] = o.error;
    outcomes.push_back(std::move(row));
  }
  return Json{{"query_id", scored.rationale.query_id},
              {"program_id", scored.rationale.program_id},
              {"score", scored.score},
              {"kept", kept},
              {"outcomes", outcomes}};
}

}  // namespace fact
