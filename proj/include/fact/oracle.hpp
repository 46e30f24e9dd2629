#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "fact/scene.hpp"

namespace fact {

// Lowercase, trim, drop a leading article, map number words (zero..twenty)
// to digits and yes/true, no/false to "yes"/"no".
std::string normalize_answer(std::string_view raw);

// A question parsed against the supported grammar.
struct ParsedQuestion {
  QueryKind kind;
  std::string subject;    // singular noun
  std::string qualifier;  // attribute class, spatial relation or predicate
  std::string other;      // second noun for spatial comparisons
};

std::optional<ParsedQuestion> parse_question(std::string_view question);

// Ground-truth answer for the restricted question grammar. Out-of-grammar
// questions, and questions about absent objects where no answer is defined,
// yield "unknown".
std::string answer_oracle(const Scene& scene, std::string_view question);

inline constexpr const char* kUnknownAnswer = "unknown";

}  // namespace fact
