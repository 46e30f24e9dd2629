#include "fact/tools.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "fact/errors.hpp"
#include "fact/oracle.hpp"
#include "fact/rng.hpp"

namespace fact {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::set<std::string> tokens(std::string_view text) {
  std::set<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      out.insert(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.insert(std::move(current));
  return out;
}

bool center_inside(const SceneObject& object, const Patch& patch) {
  return patch.box.contains_point(object.box.horizontal_center(), object.box.vertical_center());
}

std::int64_t overlap_area(const Box& a, const Box& b) {
  const int w = std::min(a.right, b.right) - std::max(a.left, b.left);
  const int h = std::min(a.upper, b.upper) - std::max(a.lower, b.lower);
  if (w <= 0 || h <= 0) return 0;
  return static_cast<std::int64_t>(w) * h;
}

}  // namespace

Patch full_patch(const Scene& scene) { return Patch{scene.scene_id, full_canvas(), std::nullopt}; }

ToolEnv::ToolEnv(const Scene& scene, DetectorNoise noise) : scene_(scene), noise_(noise) {}

void ToolEnv::check_patch(const Patch& patch) const {
  if (patch.scene_ref != scene_.scene_id) throw LookupError("unknown scene '" + patch.scene_ref + "'");
}

bool ToolEnv::maybe_flip(bool value, std::string_view tool, const Patch& within, std::string_view a,
                         std::string_view b) const {
  if (noise_.rate <= 0.0) return value;
  std::uint64_t h = hash_combine(noise_.seed, stable_hash(scene_.scene_id));
  h = hash_combine(h, stable_hash(tool));
  h = hash_combine(h, stable_hash(a));
  h = hash_combine(h, stable_hash(b));
  for (int v : {within.box.left, within.box.lower, within.box.right, within.box.upper})
    h = hash_combine(h, static_cast<std::uint64_t>(v));
  return unit_interval(h) < noise_.rate ? !value : value;
}

std::vector<Patch> ToolEnv::find(const Patch& within, std::string_view name) const {
  check_patch(within);
  const std::string wanted = lower(name);
  std::vector<const SceneObject*> hits;
  for (const auto& object : scene_.objects) {
    if (lower(object.name) == wanted && center_inside(object, within)) hits.push_back(&object);
  }
  std::sort(hits.begin(), hits.end(), [](const SceneObject* a, const SceneObject* b) {
    return std::tie(a->box.left, a->box.lower, a->id) < std::tie(b->box.left, b->box.lower, b->id);
  });
  std::vector<Patch> out;
  out.reserve(hits.size());
  for (const auto* object : hits) out.push_back(Patch{scene_.scene_id, object->box, object->id});
  return out;
}

bool ToolEnv::exists(const Patch& within, std::string_view name) const {
  return maybe_flip(!find(within, name).empty(), "exists", within, lower(name), "");
}

bool ToolEnv::verify_property(const Patch& within, std::string_view name, std::string_view property) const {
  bool holds = false;
  for (const auto& patch : find(within, name)) {
    if (scene_.find_object(*patch.matched_object)->has_attribute(lower(property))) holds = true;
  }
  return maybe_flip(holds, "verify_property", within, lower(name), lower(property));
}

std::string ToolEnv::best_text_match(const Patch& within, const std::vector<std::string>& options) const {
  check_patch(within);
  if (options.empty()) throw ArgumentError("best_text_match: options must be non-empty");
  std::string description;
  if (within.matched_object) {
    if (const auto* object = scene_.find_object(*within.matched_object)) {
      description = object->name;
      for (const auto& a : object->attributes) description += " " + a;
    }
  } else {
    for (const auto& object : scene_.objects) {
      if (!center_inside(object, within)) continue;
      description += " " + object.name;
      for (const auto& a : object.attributes) description += " " + a;
    }
  }
  const auto known = tokens(description);
  std::size_t best = 0;
  std::size_t best_overlap = 0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    std::size_t overlap = 0;
    for (const auto& t : tokens(options[i])) overlap += known.count(t);
    if (overlap > best_overlap) {
      best = i;
      best_overlap = overlap;
    }
  }
  return options[best];
}

std::string ToolEnv::simple_query(const Patch& within, std::string_view question) const {
  check_patch(within);
  return answer_oracle(scene_, question);
}

double ToolEnv::compute_depth(const Patch& within) const {
  check_patch(within);
  if (within.matched_object) {
    if (const auto* object = scene_.find_object(*within.matched_object)) return object->depth;
  }
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& object : scene_.objects) {
    const auto area = overlap_area(object.box, within.box);
    if (area == 0) continue;
    weighted += static_cast<double>(area) * object.depth;
    total += static_cast<double>(area);
  }
  return total > 0.0 ? weighted / total : 0.0;
}

double patch_distance(const Patch& a, const Patch& b) {
  return std::hypot(a.horizontal_center() - b.horizontal_center(), a.vertical_center() - b.vertical_center());
}

}  // namespace fact
