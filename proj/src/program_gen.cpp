#include "fact/program_gen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fact/dsl.hpp"
#include "fact/errors.hpp"
#include "fact/http.hpp"
#include "fact/rng.hpp"

namespace fact {

namespace {

std::string quote(const std::string& s) { return Json(s).dump(); }

std::string list_literal(const std::vector<std::string>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += quote(values[i]);
  }
  return out + "]";
}

std::string count_program(const ParsedQuestion& q, bool corrupted) {
  const std::string name = quote(q.subject);
  return "patches = image.find(" + name + ")\n"
         "num = len(patches)\n"
         "count = " + std::string(corrupted ? "1" : "0") + "\n"
         "for patch in patches:\n"
         "    if patch.exists(" + name + "):\n"
         "        count = count + 1\n"
         "return str(count)";
}

std::string exists_program(const ParsedQuestion& q, bool corrupted) {
  const std::string name = quote(q.subject);
  return "patches = image.find(" + name + ")\n"
         "num = len(patches)\n"
         "found = image.exists(" + name + ")\n"
         "return bool_to_yesno(" + std::string(corrupted ? "not found" : "found") + ")";
}

std::string attribute_program(const ParsedQuestion& q, bool corrupted) {
  std::string klass = q.qualifier;
  if (corrupted) klass = klass == "color" ? "material" : "color";
  return "patches = image.find(" + quote(q.subject) + ")\n"
         "target = patches[0]\n"
         "options = " + list_literal(Vocabulary::attribute_class(klass)) + "\n"
         "depth = target.compute_depth()\n"
         "answer = target.best_text_match(options)\n"
         "return answer";
}

std::string spatial_program(const ParsedQuestion& q, bool corrupted) {
  std::string axis = "horizontal_center";
  std::string op;
  if (q.qualifier == "left of") op = "<";
  else if (q.qualifier == "right of") op = ">";
  else if (q.qualifier == "above") op = ">";
  else op = "<";
  if (q.qualifier == "above" || q.qualifier == "below") axis = "vertical_center";
  if (corrupted) op = op == "<" ? ">=" : "<=";
  return "first = image.find(" + quote(q.subject) + ")[0]\n"
         "second = image.find(" + quote(q.other) + ")[0]\n"
         "gap = distance(first, second)\n"
         "if first." + axis + " " + op + " second." + axis + ":\n"
         "    return \"yes\"\n"
         "else:\n"
         "    return \"no\"";
}

std::string relation_program(const ParsedQuestion& q, bool corrupted) {
  const std::string ask = corrupted ? "target.best_text_match(" + list_literal({q.subject, kUnknownAnswer}) + ")"
                                    : "target.simple_query(" + quote("what is the " + q.subject + " " + q.qualifier) + ")";
  return "target = image.find(" + quote(q.subject) + ")[0]\n"
         "depth = target.compute_depth()\n"
         "answer = " + ask + "\n"
         "return answer";
}

}  // namespace

TemplateBank TemplateBank::standard() {
  TemplateBank bank;
  bank.add({"count_loop", QueryKind::Count, count_program});
  bank.add({"existence_check", QueryKind::Exists, exists_program});
  bank.add({"attribute_lookup", QueryKind::Attribute, attribute_program});
  bank.add({"spatial_comparison", QueryKind::Spatial, spatial_program});
  bank.add({"relation_lookup", QueryKind::Relation, relation_program});
  return bank;
}

const ProgramTemplate* TemplateBank::match(const ParsedQuestion& parsed) const {
  for (const auto& t : templates_) {
    if (t.kind == parsed.kind) return &t;
  }
  return nullptr;
}

std::string program_id_for(const Query& query) { return "p_" + query.query_id; }

Program generate_program(const Query& query, const TemplateBank& bank, bool corrupted) {
  const auto parsed = parse_question(query.question);
  const ProgramTemplate* t = parsed ? bank.match(*parsed) : nullptr;
  if (!t) throw GenerationError("no template matches question '" + query.question + "'");
  Program p;
  p.program_id = program_id_for(query);
  p.query_id = query.query_id;
  p.template_name = t->name;
  p.corrupted = corrupted;
  p.source = t->instantiate(*parsed, corrupted);
  p.ast = parse(p.source);
  return p;
}

std::size_t corrupted_count(double rate, std::size_t n) {
  if (rate < 0.0 || rate > 1.0) throw ArgumentError("corruption rate must lie in [0, 1]");
  const double k = std::ceil(rate * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

GeneratedBatch generate_programs(const std::vector<Query>& queries, const TemplateBank& bank,
                                 const GeneratorConfig& config) {
  GeneratedBatch batch;
  std::vector<const Query*> sources;
  for (const auto& q : queries) {
    if (q.label_only) continue;
    try {
      batch.programs.push_back(generate_program(q, bank, false));
      sources.push_back(&q);
    } catch (const Error& e) {
      batch.failures.push_back({q.query_id, e.what()});
    }
  }
  const std::size_t n = batch.programs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hash_combine(config.seed, stable_hash("corruption")));
  rng.shuffle(order);
  const std::size_t k = corrupted_count(config.corruption_rate, n);
  for (std::size_t i = 0; i < k; ++i) {
    Program& p = batch.programs[order[i]];
    p = generate_program(*sources[order[i]], bank, true);
  }
  return batch;
}

Json program_to_json(const Program& program) {
  return Json{{"program_id", program.program_id},
              {"query_id", program.query_id},
              {"source", program.source},
              {"template", program.template_name},
              {"corrupted", program.corrupted}};
}

Program program_from_json(const Json& json, const std::string& where) {
  Program p;
  p.program_id = require_string(json, "program_id", where);
  p.query_id = require_string(json, "query_id", where);
  p.source = require_string(json, "source", where);
  if (auto it = json.find("template"); it != json.end() && it->is_string()) p.template_name = it->get<std::string>();
  if (auto it = json.find("corrupted"); it != json.end() && it->is_boolean()) p.corrupted = it->get<bool>();
  p.ast = parse(p.source);
  return p;
}

std::string scene_summary(const Scene& scene) {
  std::map<std::string, int> counts;
  for (const auto& o : scene.objects) ++counts[o.name];
  std::string out;
  for (const auto& [name, n] : counts) {
    if (!out.empty()) out += ", ";
    out += std::to_string(n) + " " + (n == 1 ? name : plural(name));
  }
  return out;
}

ExternalGenerator::ExternalGenerator(ExternalGeneratorConfig config) : config_(std::move(config)) {
  if (config_.enabled && config_.url.empty()) throw ConfigError("external generator enabled without a url");
}

Program ExternalGenerator::generate(const Query& query, const Scene& scene) const {
  if (!config_.enabled) throw PreconditionError("external generator is disabled");
  const Json request{{"question", query.question},
                     {"scene_summary", scene_summary(scene)},
                     {"api_doc_version", config_.api_doc_version}};
  const Json response = post_json(config_.url, request, config_.timeout_seconds);
  const auto it = response.find("source");
  if (it == response.end() || !it->is_string()) throw TransportError("generator response lacks a 'source' string");
  Program p;
  p.program_id = program_id_for(query);
  p.query_id = query.query_id;
  p.source = it->get<std::string>();
  p.template_name = "external";
  p.ast = parse(p.source);
  return p;
}

}  // namespace fact
