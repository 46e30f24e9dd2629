#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fact/ast.hpp"
#include "fact/jsonl.hpp"
#include "fact/oracle.hpp"
#include "fact/scene.hpp"

namespace fact {

struct Program {
  std::string program_id;
  std::string query_id;
  std::string source;
  Ast ast;
  std::string template_name;
  bool corrupted = false;
};

// A program sketch for one question kind. `instantiate` returns source text;
// with `corrupted` set it returns a variant that answers wrongly.
struct ProgramTemplate {
  std::string name;
  QueryKind kind;
  std::function<std::string(const ParsedQuestion&, bool corrupted)> instantiate;
};

class TemplateBank {
 public:
  // count-loop, existence-check, attribute-lookup, spatial-comparison and
  // relation-lookup sketches.
  static TemplateBank standard();

  void add(ProgramTemplate t) { templates_.push_back(std::move(t)); }
  const ProgramTemplate* match(const ParsedQuestion& parsed) const;
  const std::vector<ProgramTemplate>& templates() const { return templates_; }

 private:
  std::vector<ProgramTemplate> templates_;
};

std::string program_id_for(const Query& query);

// Raises GenerationError when no template matches the question.
Program generate_program(const Query& query, const TemplateBank& bank, bool corrupted = false);

struct GeneratorConfig {
  double corruption_rate = 0.0;
  std::uint64_t seed = 0;
};

struct GenerationFailure {
  std::string query_id;
  std::string message;
};

struct GeneratedBatch {
  std::vector<Program> programs;
  std::vector<GenerationFailure> failures;
};

// Exactly ceil(rate * n) of the n generated programs are corrupted; which
// ones is a seeded choice. Label-only queries are skipped.
GeneratedBatch generate_programs(const std::vector<Query>& queries, const TemplateBank& bank,
                                 const GeneratorConfig& config);

std::size_t corrupted_count(double rate, std::size_t n);

Json program_to_json(const Program& program);
// Re-parses the source; the stored AST is always the parse of `source`.
Program program_from_json(const Json& json, const std::string& where);

// Remote program generator. POSTs {question, scene_summary, api_doc_version}
// to `url` and expects {source}.
struct ExternalGeneratorConfig {
  bool enabled = false;
  std::string url;  // scheme://host:port/path
  double timeout_seconds = 10.0;
  std::string api_doc_version = "1";
};

std::string scene_summary(const Scene& scene);

class ExternalGenerator {
 public:
  explicit ExternalGenerator(ExternalGeneratorConfig config);

  // Raises TransportError on connection or protocol failure and ParseError
  // when the returned source does not parse.
  Program generate(const Query& query, const Scene& scene) const;

  const ExternalGeneratorConfig& config() const { return config_; }

 private:
  ExternalGeneratorConfig config_;
};

struct UrlParts {
  std::string scheme_host_port;
  std::string path;
};
UrlParts split_url(const std::string& url);

}  // namespace fact
