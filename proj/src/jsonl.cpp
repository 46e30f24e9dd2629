#include "fact/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "fact/errors.hpp"

namespace fact {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LookupError("cannot write " + path.string());
  out << text;
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

std::vector<JsonlRow> read_jsonl(const std::filesystem::path& path) {
  return read_jsonl(path, [&](std::size_t line, const std::string& message) {
    throw SchemaError(path.string() + ":" + std::to_string(line) + ": " + message);
  });
}

std::vector<JsonlRow> read_jsonl(const std::filesystem::path& path,
                                 const std::function<void(std::size_t, const std::string&)>& on_bad_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot open " + path.string());
  std::vector<JsonlRow> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back({number, Json::parse(line)});
    } catch (const Json::parse_error& e) {
      on_bad_line(number, e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
  std::string text;
  for (const auto& row : rows) {
    text += row.dump();
    text += '\n';
  }
  write_text_file(path, text);
}

const Json& require_field(const Json& obj, const char* field, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + field + "'");
  return *it;
}

std::string require_string(const Json& obj, const char* field, const std::string& where) {
  const Json& value = require_field(obj, field, where);
  if (!value.is_string()) throw SchemaError(where + ": field '" + std::string(field) + "' must be a string");
  return value.get<std::string>();
}

}  // namespace fact
