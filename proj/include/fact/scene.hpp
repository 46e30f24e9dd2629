#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fact/jsonl.hpp"

namespace fact {

inline constexpr int kCanvasWidth = 224;
inline constexpr int kCanvasHeight = 224;

// Pixel box in canvas coordinates; `upper` > `lower` (y grows upward).
struct Box {
  int left = 0;
  int lower = 0;
  int right = 0;
  int upper = 0;

  double horizontal_center() const { return (left + right) / 2.0; }
  double vertical_center() const { return (lower + upper) / 2.0; }
  int width() const { return right - left; }
  int height() const { return upper - lower; }
  std::int64_t area() const { return static_cast<std::int64_t>(width()) * height(); }
  bool contains_point(double x, double y) const {
    return x >= left && x <= right && y >= lower && y <= upper;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

inline Box full_canvas() { return Box{0, 0, kCanvasWidth, kCanvasHeight}; }

struct SceneObject {
  std::string id;
  std::string name;
  Box box;
  std::vector<std::string> attributes;
  double depth = 0.0;

  bool has_attribute(std::string_view attribute) const;
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Relation {
  std::string subject;
  std::string predicate;
  std::string object;
  friend bool operator==(const Relation&, const Relation&) = default;
};

struct Scene {
  std::string scene_id;
  std::vector<SceneObject> objects;
  std::vector<Relation> relations;

  const SceneObject* find_object(std::string_view id) const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

// Raises SchemaError on the first violated invariant.
void validate_scene(const Scene& scene);

struct Query {
  std::string query_id;
  std::string scene_id;
  std::string question;
  std::string expected_answer;
  // Rows that are carried into the dataset as label-only examples; no
  // program is generated for them.
  bool label_only = false;

  friend bool operator==(const Query&, const Query&) = default;
};

// Fixed generation vocabulary.
struct Vocabulary {
  static const std::vector<std::string>& nouns();
  static const std::vector<std::string>& colors();
  static const std::vector<std::string>& materials();
  static const std::vector<std::string>& predicates();
  // Attribute class ("color" / "material") to its values.
  static const std::vector<std::string>& attribute_class(std::string_view name);
};

std::string plural(std::string_view noun);

Json scene_to_json(const Scene& scene);
Scene scene_from_json(const Json& value, const std::string& where);
Json query_to_json(const Query& query);
Query query_from_json(const Json& value, const std::string& where);

// scenes.json is a top-level list of scene records.
std::vector<Scene> load_scenes(const std::filesystem::path& path);
std::vector<Scene> scenes_from_json(const Json& value);
void save_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes);

std::vector<Query> load_queries(const std::filesystem::path& path);
void save_queries(const std::filesystem::path& path, const std::vector<Query>& queries);

// Deterministic for fixed (n, seed). Each scene holds 2 to 8 objects.
std::vector<Scene> generate_scenes(std::size_t n, std::uint64_t seed);

enum class QueryKind { Count, Exists, Attribute, Spatial, Relation };
inline constexpr int kQueryKinds = 5;
const char* query_kind_name(QueryKind kind);

// One query per scene, cycling through the five kinds (falling back to the
// next feasible kind). `label_only` extra queries are appended, drawn the same
// way from the leading scenes and flagged label-only.
std::vector<Query> generate_queries(const std::vector<Scene>& scenes, std::uint64_t seed,
                                    std::size_t label_only = 0);

}  // namespace fact
