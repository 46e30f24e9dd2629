#include "fact/value.hpp"

#include <charconv>

#include "fact/errors.hpp"

namespace fact {

const char* RuntimeValue::type_name() const {
  switch (data.index()) {
    case 0: return "int";
    case 1: return "float";
    case 2: return "bool";
    case 3: return "str";
    case 4: return "list";
    case 5: return "patch";
  }
  return "?";
}

RuntimeValue snapshot(const RuntimeValue& value, std::size_t max_elements) {
  if (!value.is<ValueList>()) return value;
  const auto& list = value.as<ValueList>();
  ValueList out;
  const std::size_t n = std::min(list.size(), max_elements);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(snapshot(list[i], max_elements));
  return RuntimeValue(std::move(out));
}

namespace {

std::string float_text(double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  std::string text(buffer, ptr);
  if (text.find_first_of(".en") == std::string::npos) text += ".0";
  return text;
}

bool plain_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '+';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::string value_str(const RuntimeValue& value) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, double>) return float_text(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "True" : "False";
        else if constexpr (std::is_same_v<T, std::string>) return v;
        else return value_text(value);
      },
      value.data);
}

std::string value_text(const RuntimeValue& value, const Scene* scene) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, double>) return float_text(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>) return plain_token(v) ? v : Json(v).dump();
        else if constexpr (std::is_same_v<T, ValueList>) {
          std::string out = "[";
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            out += value_text(v[i], scene);
          }
          return out + "]";
        } else {
          std::string label = "patch";
          if (v.matched_object) {
            label = *v.matched_object;
            if (scene) {
              if (const auto* object = scene->find_object(*v.matched_object)) label = object->name;
            }
          }
          return label + "@[" + std::to_string(v.box.left) + "," + std::to_string(v.box.lower) + "," +
                 std::to_string(v.box.right) + "," + std::to_string(v.box.upper) + "]";
        }
      },
      value.data);
}

Json value_to_json(const RuntimeValue& value) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ValueList>) {
          Json out = Json::array();
          for (const auto& item : v) out.push_back(value_to_json(item));
          return out;
        } else if constexpr (std::is_same_v<T, Patch>) {
          Json out{{"scene", v.scene_ref}, {"box", {v.box.left, v.box.lower, v.box.right, v.box.upper}}};
          out["object"] = v.matched_object ? Json(*v.matched_object) : Json(nullptr);
          return Json{{"patch", out}};
        } else {
          return Json(v);
        }
      },
      value.data);
}

RuntimeValue value_from_json(const Json& json) {
  if (json.is_boolean()) return RuntimeValue(json.get<bool>());
  if (json.is_number_integer()) return RuntimeValue(json.get<std::int64_t>());
  if (json.is_number_float()) return RuntimeValue(json.get<double>());
  if (json.is_string()) return RuntimeValue(json.get<std::string>());
  if (json.is_array()) {
    ValueList out;
    for (const auto& item : json) out.push_back(value_from_json(item));
    return RuntimeValue(std::move(out));
  }
  if (json.is_object() && json.contains("patch")) {
    const Json& p = json["patch"];
    Patch patch;
    patch.scene_ref = p.at("scene").get<std::string>();
    const Json& box = p.at("box");
    patch.box = Box{box.at(0).get<int>(), box.at(1).get<int>(), box.at(2).get<int>(), box.at(3).get<int>()};
    if (!p.at("object").is_null()) patch.matched_object = p.at("object").get<std::string>();
    return RuntimeValue(std::move(patch));
  }
  throw SchemaError("value: unsupported JSON form " + json.dump());
}

}  // namespace fact
