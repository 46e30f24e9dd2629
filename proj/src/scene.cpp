#include "fact/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "fact/errors.hpp"
#include "fact/oracle.hpp"
#include "fact/rng.hpp"

namespace fact {

bool SceneObject::has_attribute(std::string_view attribute) const {
  return std::find(attributes.begin(), attributes.end(), attribute) != attributes.end();
}

const SceneObject* Scene::find_object(std::string_view id) const {
  for (const auto& object : objects) {
    if (object.id == id) return &object;
  }
  return nullptr;
}

void validate_scene(const Scene& scene) {
  const std::string where = "scene '" + scene.scene_id + "'";
  if (scene.scene_id.empty()) throw SchemaError("scene_id: must be non-empty");
  std::unordered_set<std::string> ids;
  for (const auto& object : scene.objects) {
    const std::string at = where + " object '" + object.id + "'";
    if (object.id.empty()) throw SchemaError(where + ": objects.id must be non-empty");
    if (!ids.insert(object.id).second) throw SchemaError(at + ": objects.id duplicated");
    if (object.name.empty()) throw SchemaError(at + ": objects.name must be non-empty");
    const Box& b = object.box;
    if (!(0 <= b.left && b.left < b.right && b.right <= kCanvasWidth))
      throw SchemaError(at + ": objects.box horizontal extent outside canvas or empty");
    if (!(0 <= b.lower && b.lower < b.upper && b.upper <= kCanvasHeight))
      throw SchemaError(at + ": objects.box vertical extent outside canvas or empty");
    std::set<std::string> seen(object.attributes.begin(), object.attributes.end());
    if (seen.size() != object.attributes.size()) throw SchemaError(at + ": objects.attributes has duplicates");
    if (!std::isfinite(object.depth) || object.depth < 0.0)
      throw SchemaError(at + ": objects.depth must be finite and non-negative");
  }
  for (const auto& relation : scene.relations) {
    if (!ids.contains(relation.subject) || !ids.contains(relation.object))
      throw SchemaError(where + ": relations endpoint references unknown object");
    if (relation.predicate.empty()) throw SchemaError(where + ": relations predicate must be non-empty");
  }
}

const std::vector<std::string>& Vocabulary::nouns() {
  static const std::vector<std::string> values = {"muffin", "cup",  "plate",  "dog", "cat",  "chair", "table",
                                                  "apple",  "book", "lamp",   "bottle", "car", "ball", "phone"};
  return values;
}

const std::vector<std::string>& Vocabulary::colors() {
  static const std::vector<std::string> values = {"red", "blue", "green", "yellow", "white", "brown"};
  return values;
}

const std::vector<std::string>& Vocabulary::materials() {
  static const std::vector<std::string> values = {"wooden", "metal", "plastic", "glass", "paper", "chocolate"};
  return values;
}

const std::vector<std::string>& Vocabulary::predicates() {
  static const std::vector<std::string> values = {"on", "under", "near", "behind"};
  return values;
}

const std::vector<std::string>& Vocabulary::attribute_class(std::string_view name) {
  if (name == "color") return colors();
  if (name == "material") return materials();
  throw ArgumentError("unknown attribute class: " + std::string(name));
}

std::string plural(std::string_view noun) {
  std::string out(noun);
  if (out.ends_with("s") || out.ends_with("x") || out.ends_with("ch") || out.ends_with("sh")) return out + "es";
  return out + "s";
}

const char* query_kind_name(QueryKind kind) {
  switch (kind) {
    case QueryKind::Count: return "count";
    case QueryKind::Exists: return "exists";
    case QueryKind::Attribute: return "attribute";
    case QueryKind::Spatial: return "spatial";
    case QueryKind::Relation: return "relation";
  }
  return "?";
}

// --- JSON -------------------------------------------------------------------

Json scene_to_json(const Scene& scene) {
  Json objects = Json::array();
  for (const auto& o : scene.objects) {
    objects.push_back(Json{{"id", o.id},
                           {"name", o.name},
                           {"box", {o.box.left, o.box.lower, o.box.right, o.box.upper}},
                           {"attributes", o.attributes},
                           {"depth", o.depth}});
  }
  Json relations = Json::array();
  for (const auto& r : scene.relations) relations.push_back(Json::array({r.subject, r.predicate, r.object}));
  return Json{{"scene_id", scene.scene_id}, {"objects", objects}, {"relations", relations}};
}

Scene scene_from_json(const Json& value, const std::string& where) {
  Scene scene;
  scene.scene_id = require_string(value, "scene_id", where);
  const std::string at = where + " (" + scene.scene_id + ")";
  const Json& objects = require_field(value, "objects", at);
  if (!objects.is_array()) throw SchemaError(at + ": field 'objects' must be a list");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string oat = at + " objects[" + std::to_string(i) + "]";
    const Json& o = objects[i];
    SceneObject object;
    object.id = require_string(o, "id", oat);
    object.name = require_string(o, "name", oat);
    const Json& box = require_field(o, "box", oat);
    if (!box.is_array() || box.size() != 4 || !std::all_of(box.begin(), box.end(), [](const Json& v) {
          return v.is_number_integer();
        }))
      throw SchemaError(oat + ": field 'box' must be four integers [left, lower, right, upper]");
    object.box = Box{box[0].get<int>(), box[1].get<int>(), box[2].get<int>(), box[3].get<int>()};
    const Json& attributes = require_field(o, "attributes", oat);
    if (!attributes.is_array()) throw SchemaError(oat + ": field 'attributes' must be a list");
    for (const auto& a : attributes) {
      if (!a.is_string()) throw SchemaError(oat + ": field 'attributes' must hold strings");
      object.attributes.push_back(a.get<std::string>());
    }
    const Json& depth = require_field(o, "depth", oat);
    if (!depth.is_number()) throw SchemaError(oat + ": field 'depth' must be a number");
    object.depth = depth.get<double>();
    scene.objects.push_back(std::move(object));
  }
  if (auto it = value.find("relations"); it != value.end()) {
    if (!it->is_array()) throw SchemaError(at + ": field 'relations' must be a list");
    for (const auto& r : *it) {
      if (!r.is_array() || r.size() != 3 || !r[0].is_string() || !r[1].is_string() || !r[2].is_string())
        throw SchemaError(at + ": field 'relations' entries must be [subject, predicate, object]");
      scene.relations.push_back({r[0].get<std::string>(), r[1].get<std::string>(), r[2].get<std::string>()});
    }
  }
  try {
    validate_scene(scene);
  } catch (const SchemaError& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return scene;
}

Json query_to_json(const Query& q) {
  Json out{{"query_id", q.query_id}, {"scene_id", q.scene_id}, {"question", q.question},
           {"expected_answer", q.expected_answer}};
  if (q.label_only) out["label_only"] = true;
  return out;
}

Query query_from_json(const Json& value, const std::string& where) {
  Query q;
  q.query_id = require_string(value, "query_id", where);
  q.scene_id = require_string(value, "scene_id", where);
  q.question = require_string(value, "question", where);
  q.expected_answer = require_string(value, "expected_answer", where);
  if (auto it = value.find("label_only"); it != value.end()) {
    if (!it->is_boolean()) throw SchemaError(where + ": field 'label_only' must be a boolean");
    q.label_only = it->get<bool>();
  }
  return q;
}

std::vector<Scene> scenes_from_json(const Json& value) {
  if (!value.is_array()) throw SchemaError("scenes: top level must be a list of scene records");
  std::vector<Scene> scenes;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < value.size(); ++i) {
    Scene scene = scene_from_json(value[i], "scenes[" + std::to_string(i) + "]");
    if (!seen.insert(scene.scene_id).second) throw DuplicateError("duplicate scene_id '" + scene.scene_id + "'");
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

std::vector<Scene> load_scenes(const std::filesystem::path& path) { return scenes_from_json(read_json_file(path)); }

void save_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes) {
  Json out = Json::array();
  for (const auto& scene : scenes) out.push_back(scene_to_json(scene));
  write_json_file(path, out);
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
  std::vector<Query> queries;
  for (const auto& row : read_jsonl(path))
    queries.push_back(query_from_json(row.value, path.filename().string() + ":" + std::to_string(row.line)));
  return queries;
}

void save_queries(const std::filesystem::path& path, const std::vector<Query>& queries) {
  std::vector<Json> rows;
  rows.reserve(queries.size());
  for (const auto& q : queries) rows.push_back(query_to_json(q));
  write_jsonl(path, rows);
}

// --- generation ---------------------------------------------------------------

namespace {

std::string zero_pad(std::size_t value, int width) {
  std::string digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return digits;
}

Scene generate_one(std::size_t index, Rng& rng) {
  Scene scene;
  scene.scene_id = "scene_" + zero_pad(index, 5);

  // A small per-scene palette makes repeated names (and so counting) common.
  std::vector<std::string> palette = Vocabulary::nouns();
  rng.shuffle(palette);
  palette.resize(static_cast<std::size_t>(rng.uniform_int(1, 4)));

  const auto count = rng.uniform_int(2, 8);
  for (std::int64_t i = 0; i < count; ++i) {
    SceneObject object;
    object.id = "o" + std::to_string(i);
    object.name = rng.pick(palette);
    const int w = static_cast<int>(rng.uniform_int(12, 60));
    const int h = static_cast<int>(rng.uniform_int(12, 60));
    object.box.left = static_cast<int>(rng.uniform_int(0, kCanvasWidth - w));
    object.box.lower = static_cast<int>(rng.uniform_int(0, kCanvasHeight - h));
    object.box.right = object.box.left + w;
    object.box.upper = object.box.lower + h;
    object.attributes = {rng.pick(Vocabulary::colors()), rng.pick(Vocabulary::materials())};
    object.depth = std::round((1.0 + 19.0 * rng.uniform()) * 100.0) / 100.0;
    scene.objects.push_back(std::move(object));
  }

  const auto attempts = rng.uniform_int(0, 3);
  for (std::int64_t i = 0; i < attempts; ++i) {
    const auto& subject = rng.pick(scene.objects);
    const auto& object = rng.pick(scene.objects);
    if (subject.name == object.name) continue;
    const std::string& predicate = rng.pick(Vocabulary::predicates());
    const bool taken = std::any_of(scene.relations.begin(), scene.relations.end(), [&](const Relation& r) {
      return r.subject == subject.id && r.predicate == predicate;
    });
    if (!taken) scene.relations.push_back({subject.id, predicate, object.id});
  }
  return scene;
}

std::vector<const SceneObject*> uniquely_named(const Scene& scene) {
  std::vector<const SceneObject*> out;
  for (const auto& o : scene.objects) {
    const auto n = std::count_if(scene.objects.begin(), scene.objects.end(),
                                 [&](const SceneObject& other) { return other.name == o.name; });
    if (n == 1) out.push_back(&o);
  }
  return out;
}

std::string article_for(std::string_view noun) {
  return std::string_view("aeiou").find(noun.front()) != std::string_view::npos ? "an" : "a";
}

std::optional<std::string> question_for(const Scene& scene, QueryKind kind, Rng& rng) {
  const auto& nouns = Vocabulary::nouns();
  auto present_name = [&] { return rng.pick(scene.objects).name; };
  auto absent_name = [&]() -> std::optional<std::string> {
    std::vector<std::string> absent;
    for (const auto& n : nouns) {
      if (std::none_of(scene.objects.begin(), scene.objects.end(), [&](const auto& o) { return o.name == n; }))
        absent.push_back(n);
    }
    if (absent.empty()) return std::nullopt;
    return rng.pick(absent);
  };

  switch (kind) {
    case QueryKind::Count: {
      std::string name = present_name();
      if (rng.uniform() < 0.2) name = absent_name().value_or(name);
      return "how many " + plural(name);
    }
    case QueryKind::Exists: {
      std::string name = present_name();
      if (rng.uniform() < 0.5) name = absent_name().value_or(name);
      return "is there " + article_for(name) + " " + name;
    }
    case QueryKind::Attribute: {
      const auto unique = uniquely_named(scene);
      if (unique.empty()) return std::nullopt;
      const auto* target = rng.pick(unique);
      return std::string(rng.uniform() < 0.5 ? "what color" : "what material") + " is the " + target->name;
    }
    case QueryKind::Spatial: {
      const auto unique = uniquely_named(scene);
      if (unique.size() < 2) return std::nullopt;
      static const std::vector<std::string> relations = {"left of", "right of", "above", "below"};
      const std::string& relation = rng.pick(relations);
      const bool horizontal = relation == "left of" || relation == "right of";
      std::vector<std::pair<const SceneObject*, const SceneObject*>> pairs;
      for (const auto* a : unique) {
        for (const auto* b : unique) {
          if (a == b) continue;
          const double da = horizontal ? a->box.horizontal_center() : a->box.vertical_center();
          const double db = horizontal ? b->box.horizontal_center() : b->box.vertical_center();
          if (da != db) pairs.emplace_back(a, b);
        }
      }
      if (pairs.empty()) return std::nullopt;
      const auto& [a, b] = rng.pick(pairs);
      return "is the " + a->name + " " + relation + " the " + b->name;
    }
    case QueryKind::Relation: {
      const auto unique = uniquely_named(scene);
      std::vector<const Relation*> usable;
      for (const auto& r : scene.relations) {
        if (std::any_of(unique.begin(), unique.end(), [&](const auto* o) { return o->id == r.subject; }))
          usable.push_back(&r);
      }
      if (usable.empty()) return std::nullopt;
      const Relation* r = rng.pick(usable);
      return "what is the " + scene.find_object(r->subject)->name + " " + r->predicate;
    }
  }
  return std::nullopt;
}

Query make_query(const Scene& scene, std::size_t index, std::size_t slot, std::uint64_t seed) {
  Rng rng(hash_combine(seed, index));
  for (int attempt = 0; attempt < kQueryKinds; ++attempt) {
    const auto kind = static_cast<QueryKind>((slot + static_cast<std::size_t>(attempt)) % kQueryKinds);
    if (auto question = question_for(scene, kind, rng)) {
      Query q;
      q.query_id = "q_" + zero_pad(index, 5);
      q.scene_id = scene.scene_id;
      q.question = *question;
      q.expected_answer = answer_oracle(scene, q.question);
      return q;
    }
  }
  // Count questions are always feasible, so this is unreachable.
  throw GenerationError("no feasible question for " + scene.scene_id);
}

}  // namespace

std::vector<Scene> generate_scenes(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("generate_scenes: n must be at least 1");
  Rng rng(seed);
  std::vector<Scene> scenes;
  scenes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) scenes.push_back(generate_one(i, rng));
  return scenes;
}

std::vector<Query> generate_queries(const std::vector<Scene>& scenes, std::uint64_t seed, std::size_t label_only) {
  std::vector<Query> queries;
  queries.reserve(scenes.size() + label_only);
  for (std::size_t i = 0; i < scenes.size(); ++i) queries.push_back(make_query(scenes[i], i, i, seed));
  for (std::size_t j = 0; j < label_only && !scenes.empty(); ++j) {
    const std::size_t index = scenes.size() + j;
    Query q = make_query(scenes[j % scenes.size()], index, j + 1, seed);
    q.label_only = true;
    queries.push_back(std::move(q));
  }
  return queries;
}

}  // namespace fact
