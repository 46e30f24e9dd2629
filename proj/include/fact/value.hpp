#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fact/jsonl.hpp"
#include "fact/tools.hpp"

namespace fact {

struct RuntimeValue;
using ValueList = std::vector<RuntimeValue>;

struct RuntimeValue {
  std::variant<std::int64_t, double, bool, std::string, ValueList, Patch> data;

  RuntimeValue() : data(std::int64_t{0}) {}
  RuntimeValue(std::int64_t v) : data(v) {}
  RuntimeValue(int v) : data(std::int64_t{v}) {}
  RuntimeValue(double v) : data(v) {}
  RuntimeValue(bool v) : data(v) {}
  RuntimeValue(std::string v) : data(std::move(v)) {}
  RuntimeValue(const char* v) : data(std::string(v)) {}
  RuntimeValue(ValueList v) : data(std::move(v)) {}
  RuntimeValue(Patch v) : data(std::move(v)) {}

  template <typename T>
  bool is() const { return std::holds_alternative<T>(data); }
  template <typename T>
  const T& as() const { return std::get<T>(data); }

  const char* type_name() const;

  friend bool operator==(const RuntimeValue&, const RuntimeValue&) = default;
};

// Deep copy with every list cut to at most `max_elements` entries.
RuntimeValue snapshot(const RuntimeValue& value, std::size_t max_elements = 64);

// Compact, whitespace-free text form used in symbolic traces. Strings that
// are plain tokens print bare; anything else is JSON-quoted. Lists print as
// [a,b], patches as name@[l,lo,r,u].
std::string value_text(const RuntimeValue& value, const Scene* scene = nullptr);

// Python-style str(): integers as digits, reals in shortest round-trip form,
// booleans as True/False.
std::string value_str(const RuntimeValue& value);

Json value_to_json(const RuntimeValue& value);
RuntimeValue value_from_json(const Json& json);

}  // namespace fact
