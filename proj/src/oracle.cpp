#include "fact/oracle.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>
#include <vector>

#include "fact/tools.hpp"

namespace fact {

namespace {

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::size_t from = 0) {
  std::string out;
  for (std::size_t i = from; i < parts.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += parts[i];
  }
  return out;
}

std::string singular(const std::string& word) {
  const auto& nouns = Vocabulary::nouns();
  if (std::find(nouns.begin(), nouns.end(), word) != nouns.end()) return word;
  if (word.ends_with("es")) {
    std::string stem = word.substr(0, word.size() - 2);
    if (std::find(nouns.begin(), nouns.end(), stem) != nouns.end()) return stem;
  }
  if (word.ends_with("s") && word.size() > 1) return word.substr(0, word.size() - 1);
  return word;
}

const SceneObject* first_named(const Scene& scene, std::string_view name) {
  const auto patches = ToolEnv(scene).find(full_patch(scene), name);
  if (patches.empty()) return nullptr;
  return scene.find_object(*patches.front().matched_object);
}

}  // namespace

std::string normalize_answer(std::string_view raw) {
  std::vector<std::string> parts = words(raw);
  if (parts.size() > 1 && (parts[0] == "a" || parts[0] == "an" || parts[0] == "the")) parts.erase(parts.begin());
  std::string text = join(parts);
  static const std::array<const char*, 21> numbers = {
      "zero", "one",    "two",     "three",    "four",     "five",    "six",
      "seven", "eight", "nine",    "ten",      "eleven",   "twelve",  "thirteen",
      "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty"};
  for (std::size_t i = 0; i < numbers.size(); ++i) {
    if (text == numbers[i]) return std::to_string(i);
  }
  if (text == "yes" || text == "true") return "yes";
  if (text == "no" || text == "false") return "no";
  return text;
}

std::optional<ParsedQuestion> parse_question(std::string_view question) {
  std::string text(question);
  while (!text.empty() && (text.back() == '?' || std::isspace(static_cast<unsigned char>(text.back()))))
    text.pop_back();
  const auto w = words(text);
  const auto& predicates = Vocabulary::predicates();

  if (w.size() == 4 && w[0] == "is" && w[1] == "there" && (w[2] == "a" || w[2] == "an"))
    return ParsedQuestion{QueryKind::Exists, w[3], "", ""};
  if (w.size() == 3 && w[0] == "how" && w[1] == "many") return ParsedQuestion{QueryKind::Count, singular(w[2]), "", ""};
  if (w.size() == 5 && w[0] == "what" && (w[1] == "color" || w[1] == "material") && w[2] == "is" && w[3] == "the")
    return ParsedQuestion{QueryKind::Attribute, w[4], w[1], ""};
  if (w.size() == 5 && w[0] == "what" && w[1] == "is" && w[2] == "the" &&
      std::find(predicates.begin(), predicates.end(), w[4]) != predicates.end())
    return ParsedQuestion{QueryKind::Relation, w[3], w[4], ""};
  if (w.size() >= 6 && w[0] == "is" && w[1] == "the") {
    // is the X <relation> the Y, relation is one or two words
    const std::string subject = w[2];
    if (w.size() == 7 && w[5] == "the" && (w[4] == "of") && (w[3] == "left" || w[3] == "right"))
      return ParsedQuestion{QueryKind::Spatial, subject, w[3] + " of", w[6]};
    if (w.size() == 6 && w[4] == "the" && (w[3] == "above" || w[3] == "below"))
      return ParsedQuestion{QueryKind::Spatial, subject, w[3], w[5]};
  }
  return std::nullopt;
}

std::string answer_oracle(const Scene& scene, std::string_view question) {
  const auto parsed = parse_question(question);
  if (!parsed) return kUnknownAnswer;
  switch (parsed->kind) {
    case QueryKind::Exists: {
      const bool any = std::any_of(scene.objects.begin(), scene.objects.end(),
                                   [&](const SceneObject& o) { return normalize_answer(o.name) == parsed->subject; });
      return any ? "yes" : "no";
    }
    case QueryKind::Count: {
      const auto n = std::count_if(scene.objects.begin(), scene.objects.end(),
                                   [&](const SceneObject& o) { return normalize_answer(o.name) == parsed->subject; });
      return std::to_string(n);
    }
    case QueryKind::Attribute: {
      const SceneObject* target = first_named(scene, parsed->subject);
      if (!target) return kUnknownAnswer;
      for (const auto& value : Vocabulary::attribute_class(parsed->qualifier)) {
        if (target->has_attribute(value)) return value;
      }
      return kUnknownAnswer;
    }
    case QueryKind::Spatial: {
      const SceneObject* a = first_named(scene, parsed->subject);
      const SceneObject* b = first_named(scene, parsed->other);
      if (!a || !b) return kUnknownAnswer;
      bool holds = false;
      if (parsed->qualifier == "left of") holds = a->box.horizontal_center() < b->box.horizontal_center();
      if (parsed->qualifier == "right of") holds = a->box.horizontal_center() > b->box.horizontal_center();
      if (parsed->qualifier == "above") holds = a->box.vertical_center() > b->box.vertical_center();
      if (parsed->qualifier == "below") holds = a->box.vertical_center() < b->box.vertical_center();
      return holds ? "yes" : "no";
    }
    case QueryKind::Relation: {
      const SceneObject* target = first_named(scene, parsed->subject);
      if (!target) return kUnknownAnswer;
      for (const auto& r : scene.relations) {
        if (r.subject == target->id && r.predicate == parsed->qualifier) {
          return normalize_answer(scene.find_object(r.object)->name);
        }
      }
      return kUnknownAnswer;
    }
  }
  return kUnknownAnswer;
}

}  // namespace fact
