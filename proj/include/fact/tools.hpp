#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fact/scene.hpp"

namespace fact {

// A rectangular view onto a scene, possibly matched to one object.
struct Patch {
  std::string scene_ref;
  Box box;
  std::optional<std::string> matched_object;

  double horizontal_center() const { return box.horizontal_center(); }
  double vertical_center() const { return box.vertical_center(); }
  int width() const { return box.width(); }
  int height() const { return box.height(); }

  friend bool operator==(const Patch&, const Patch&) = default;
};

Patch full_patch(const Scene& scene);

// Flips exists / verify_property results with probability `rate`. The flip
// is a pure function of (seed, scene, call), so tools stay side-effect free.
struct DetectorNoise {
  double rate = 0.0;
  std::uint64_t seed = 0;
};

// The tool API that programs call. Holds a reference to an immutable scene.
class ToolEnv {
 public:
  explicit ToolEnv(const Scene& scene, DetectorNoise noise = {});

  const Scene& scene() const { return scene_; }

  std::vector<Patch> find(const Patch& within, std::string_view name) const;
  bool exists(const Patch& within, std::string_view name) const;
  bool verify_property(const Patch& within, std::string_view name, std::string_view property) const;
  std::string best_text_match(const Patch& within, const std::vector<std::string>& options) const;
  std::string simple_query(const Patch& within, std::string_view question) const;
  double compute_depth(const Patch& within) const;

 private:
  void check_patch(const Patch& patch) const;
  bool maybe_flip(bool value, std::string_view tool, const Patch& within, std::string_view a,
                  std::string_view b) const;

  const Scene& scene_;
  DetectorNoise noise_;
};

// Euclidean distance between patch centers, in pixels.
double patch_distance(const Patch& a, const Patch& b);

}  // namespace fact
