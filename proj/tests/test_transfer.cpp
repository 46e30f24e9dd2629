#include <doctest.h>

#include <cmath>

#include "fact/errors.hpp"
#include "fact/transfer.hpp"
#include "support/scripted_student.hpp"

using namespace fact;
using fact::testing::ScriptedStudent;
using fact::testing::ThrowingStudent;

namespace {

const Query kQuery{"q1", "s1", "how many muffins", "3", false};

CotRationale rationale(const std::string& text) {
  CotRationale r;
  r.query_id = kQuery.query_id;
  r.program_id = "p_q1";
  r.text = text;
  r.sentences = {text};
  return r;
}

StudentList scripted(const std::vector<std::pair<bool, bool>>& outcomes) {
  StudentList out;
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    out.push_back(std::make_unique<ScriptedStudent>("s" + std::to_string(i), outcomes[i].first, outcomes[i].second));
  return out;
}

std::vector<Query> many_queries(int n) {
  std::vector<Query> out;
  for (int i = 0; i < n; ++i) out.push_back(Query{"q" + std::to_string(i), "s", "is there a cup", "yes", false});
  return out;
}

}  // namespace

TEST_SUITE("transfer_filter") {

TEST_CASE("verdict cells") {
  CHECK(verdict_value(verdict_for(false, true)) == 1);
  CHECK(verdict_value(verdict_for(false, false)) == -1);
  CHECK(verdict_value(verdict_for(true, true)) == 0);
  CHECK(verdict_for(true, false) == Verdict::Harmful);
  CHECK(verdict_value(Verdict::Harmful) == -1);
  CHECK(verdict_value(Verdict::Harmful, ScoreOptions{0}) == 0);
}

TEST_CASE("mixed students sum to zero and are retained") {
  const auto s = utility_score(rationale("x"), kQuery, scripted({{false, true}, {false, false}, {true, true}}));
  CHECK(s.score == 0);
  CHECK(s.outcomes[0].verdict == Verdict::Useful);
  CHECK(s.outcomes[1].verdict == Verdict::NonUseful);
  CHECK(s.outcomes[2].verdict == Verdict::Unsure);
  CHECK(filter_by_score({s}).kept == std::vector<std::size_t>{0});
}

TEST_CASE("all students wrong before and after scores minus K") {
  for (int k = 1; k <= 5; ++k) {
    StudentList students;
    for (int i = 0; i < k; ++i) students.push_back(std::make_unique<ScriptedStudent>("s", false, false));
    const auto s = utility_score(rationale("x"), kQuery, students);
    CHECK(s.score == -k);
    CHECK(filter_by_score({s}).rejected == std::vector<std::size_t>{0});
  }
}

TEST_CASE("rationale-sensitive student") {
  const RationaleSensitiveStudent reader("reader", RationaleSensitiveStudent::Trigger::Answer);
  StudentList one;
  one.push_back(std::make_unique<RationaleSensitiveStudent>("reader", RationaleSensitiveStudent::Trigger::Answer));
  CHECK(utility_score(rationale("Therefore the answer is 3."), kQuery, one).score == 1);
  CHECK(utility_score(rationale(""), kQuery, one).score == -1);
  CHECK(utility_score(rationale("There are 33 of them."), kQuery, one).score == -1);
  CHECK(reader.answer(kQuery, std::nullopt) == "unknown");

  StudentList fact_mode;
  fact_mode.push_back(std::make_unique<RationaleSensitiveStudent>("f", RationaleSensitiveStudent::Trigger::Fact));
  CHECK(utility_score(rationale("We look at each muffin."), kQuery, fact_mode).score == 1);
  CHECK(utility_score(rationale("We look at each cup."), kQuery, fact_mode).score == -1);

  StudentList windowed;
  windowed.push_back(std::make_unique<RationaleSensitiveStudent>("w", RationaleSensitiveStudent::Trigger::Answer, 2));
  CHECK(utility_score(rationale("so it is 3"), kQuery, windowed).score == -1);
  CHECK(utility_score(rationale("3 it is"), kQuery, windowed).score == 1);
}

TEST_CASE("threshold filtering") {
  std::vector<ScoredRationale> scored(3);
  scored[0].score = -2;
  scored[1].score = 0;
  scored[2].score = 3;
  CHECK(filter_by_score(scored, 0).kept == std::vector<std::size_t>{1, 2});
  CHECK(filter_by_score(scored, 0).rejected == std::vector<std::size_t>{0});
  CHECK(filter_by_score(scored, 1).kept == std::vector<std::size_t>{2});
}

TEST_CASE("brute force over every outcome tuple for three students") {
  int cases = 0, agree = 0;
  for (int code = 0; code < 64; ++code) {
    std::vector<std::pair<bool, bool>> outcomes;
    int expected = 0;
    for (int k = 0; k < 3; ++k) {
      const int cell = (code >> (2 * k)) & 3;
      const bool before = cell & 2, after = cell & 1;
      outcomes.emplace_back(before, after);
      // Useful +1, non-useful -1, unsure 0, harmful -1.
      expected += !before ? (after ? 1 : -1) : (after ? 0 : -1);
    }
    const auto s = utility_score(rationale("x"), kQuery, scripted(outcomes));
    const bool kept = !filter_by_score({s}, 0).kept.empty();
    ++cases;
    agree += s.score == expected && kept == (expected >= 0);
  }
  CHECK(cases == 64);
  CHECK(agree == 64);
}

TEST_CASE("stubborn student never helps") {
  const StubbornStudent stubborn("stubborn", "yes");
  StudentList one;
  one.push_back(std::make_unique<StubbornStudent>("stubborn", "yes"));
  for (const auto& q : many_queries(5)) {
    for (const char* text : {"", "yes", "no", "Therefore the answer is yes."}) {
      const auto v = utility_score(rationale(text), q, one).outcomes[0].value;
      CHECK((v == 0 || v == -1));
    }
  }
  const Query no{"q_no", "s1", "is there a cup", "no", false};
  CHECK(utility_score(rationale("no"), no, one).score == -1);
}

TEST_CASE("noisy oracle is reproducible and near its nominal accuracy") {
  const auto queries = many_queries(2000);
  const NoisyOracleStudent a("n", 17, 0.4), b("n", 17, 0.4);
  int right = 0;
  for (const auto& q : queries) {
    const auto answer = a.answer(q, std::nullopt);
    CHECK(answer == b.answer(q, "context is ignored"));
    right += answer == "yes";
  }
  const double accuracy = right / 2000.0;
  // Binomial sd at n = 2000 is about 0.011.
  CHECK(std::abs(accuracy - 0.6) < 0.04);
  CHECK_THROWS_AS(NoisyOracleStudent("x", 1, 1.5), ConfigError);
}

TEST_CASE("a throwing student abstains with zero") {
  StudentList students;
  students.push_back(std::make_unique<ThrowingStudent>("down"));
  students.push_back(std::make_unique<ScriptedStudent>("up", false, true));
  const auto s = utility_score(rationale("x"), kQuery, students);
  CHECK(s.score == 1);
  CHECK(s.outcomes[0].abstained);
  CHECK(s.outcomes[0].value == 0);
  CHECK(s.outcomes[0].error == "student offline");
  CHECK_THROWS_AS(utility_score(rationale("x"), kQuery, StudentList{}), PreconditionError);
}

TEST_CASE("student roster from config") {
  const auto roster = builtin_students(default_student_config());
  REQUIRE(roster.size() == 3);
  CHECK(roster[0]->name() == "noisy");
  CHECK_THROWS_AS(builtin_students(Json{{"students", Json::array({Json{{"kind", "psychic"}}})}}), ConfigError);
  CHECK_THROWS_AS(builtin_students(Json{{"students", Json::array()}}), ConfigError);
  CHECK_THROWS_AS(builtin_students(Json{{"students", Json::array({Json{{"kind", "rationale_sensitive"}, {"trigger_mode", "x"}}})}}),
                  ConfigError);
  CHECK_THROWS_AS(score_options(Json{{"harmful_value", 2}}), ConfigError);
  CHECK(score_options(Json{{"harmful_value", 0}}).harmful_value == 0);
}

TEST_CASE("scored json carries every outcome") {
  const auto s = utility_score(rationale("x"), kQuery, scripted({{false, true}, {true, false}}));
  const Json j = scored_to_json(s, false);
  CHECK(j.at("score") == 0);
  CHECK(j.at("kept") == false);
  CHECK(j.at("outcomes").size() == 2);
  CHECK(j.at("outcomes")[1].at("verdict") == "harmful");
}

}
