#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fact {

using Json = nlohmann::json;

// One parsed line of a JSONL file. `line` is 1-based.
struct JsonlRow {
  std::size_t line = 0;
  Json value;
};

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

// Blank lines are skipped. A line that is not valid JSON raises SchemaError
// naming the file and line.
std::vector<JsonlRow> read_jsonl(const std::filesystem::path& path);
// Reports unparsable lines through `on_bad_line(line, message)` and skips them.
std::vector<JsonlRow> read_jsonl(const std::filesystem::path& path,
                                 const std::function<void(std::size_t, const std::string&)>& on_bad_line);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Field accessors that raise SchemaError naming the offending field.
const Json& require_field(const Json& obj, const char* field, const std::string& where);
std::string require_string(const Json& obj, const char* field, const std::string& where);

}  // namespace fact
