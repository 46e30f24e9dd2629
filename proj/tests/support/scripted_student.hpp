#pragma once

#include "fact/transfer.hpp"

namespace fact::testing {

// Answers right or wrong on a fixed script: `before` without a rationale,
// `after` with one.
class ScriptedStudent : public StudentOracle {
 public:
  ScriptedStudent(std::string name, bool before, bool after)
      : StudentOracle(std::move(name)), before_(before), after_(after) {}
  std::string answer(const Query& query, std::optional<std::string_view> context) const override {
    const bool right = context ? after_ : before_;
    return right ? query.expected_answer : "definitely wrong";
  }

 private:
  bool before_;
  bool after_;
};

class ThrowingStudent : public StudentOracle {
 public:
  using StudentOracle::StudentOracle;
  std::string answer(const Query&, std::optional<std::string_view>) const override {
    throw std::runtime_error("student offline");
  }
};

}  // namespace fact::testing
