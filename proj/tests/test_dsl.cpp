#include <doctest.h>

#include <atomic>
#include <cmath>

#include "fact/dsl.hpp"
#include "fact/pipeline.hpp"
#include "fact/program_gen.hpp"
#include "support/oracles.hpp"
#include "support/stub_server.hpp"

using namespace fact;
using fact::testing::StubServer;
using fact::testing::TempDir;

namespace {

std::vector<NodeKind> kinds_of(const Ast& ast, const std::vector<NodeId>& ids) {
  std::vector<NodeKind> out;
  for (NodeId id : ids) out.push_back(ast.node(id).kind);
  return out;
}

}  // namespace

TEST_SUITE("dsl_frontend") {

TEST_CASE("smallest program") {
  const Ast ast = parse("x = 1\nreturn x");
  CHECK(ast.node(ast.root).kind == NodeKind::Function);
  CHECK(kinds_of(ast, ast.node(ast.root).children) == std::vector<NodeKind>{NodeKind::Assign, NodeKind::Return});
  CHECK(ast.node(ast.node(ast.root).children[0]).text == "x");
}

TEST_CASE("if with one arm then a trailing return") {
  const Ast ast = parse("if a == 1:\n    return 'yes'\nreturn 'no'");
  const auto& top = ast.node(ast.root).children;
  REQUIRE(top.size() == 2);
  const AstNode& branch = ast.node(top[0]);
  CHECK(branch.kind == NodeKind::If);
  CHECK(branch.arm_sizes == std::vector<int>{1});
  CHECK_FALSE(branch.has_else);
  CHECK(ast.node(top[1]).kind == NodeKind::Return);
}

TEST_CASE("edges form a tree over every node") {
  const Ast ast = parse("for p in image.find(\"cup\"):\n    if p.exists(\"cup\"):\n        n = 1\nreturn 2");
  const auto edges = ast.edges();
  CHECK(edges.size() + 1 == ast.size());
  const auto parents = ast.parents();
  CHECK(parents[static_cast<std::size_t>(ast.root)] == kNoNode);
  for (auto [p, c] : edges) CHECK(parents[static_cast<std::size_t>(c)] == p);
}

TEST_CASE("parse errors carry a position") {
  try {
    parse("x = (1 +\nreturn x");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 1);
    CHECK(e.kind() == ParseError::Kind::Syntax);
  }
  CHECK_THROWS_AS(parse("x = 1 $ 2"), ParseError);
  CHECK_THROWS_AS(parse("if x:\nreturn 1"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("render formatting") {
  CHECK(render_source(parse("x=1")) == "x = 1");
  const std::string nested = "for p in ps:\n    if p.x > 1:\n        n = n + 1\n    else:\n        n = 0\nreturn n";
  CHECK(render_source(parse(nested)) == nested);
  const std::string def = "def execute_command(image):\n    return 1";
  CHECK(render_source(parse(def)) == def);
}

TEST_CASE("round trip over 100 generated programs, all templates") {
  const auto scenes = generate_scenes(120, 31);
  const auto queries = generate_queries(scenes, 32);
  const auto batch = generate_programs(queries, TemplateBank::standard(), {0.5, 33});
  REQUIRE(batch.programs.size() >= 100);
  std::set<std::string> templates;
  for (std::size_t i = 0; i < 100; ++i) {
    const Program& p = batch.programs[i];
    const Ast again = parse(render_source(p.ast));
    CHECK(structurally_equal(p.ast, again));
    CHECK(render_source(again) == render_source(p.ast));
    templates.insert(p.template_name);
  }
  CHECK(templates.size() == 5);
}

TEST_CASE("structural equality notices payload changes") {
  CHECK_FALSE(structurally_equal(parse("x = 1\nreturn x"), parse("x = 2\nreturn x")));
  CHECK_FALSE(structurally_equal(parse("x = 1\nreturn x"), parse("y = 1\nreturn y")));
  CHECK(structurally_equal(parse("x=1\nreturn x"), parse("x = 1\nreturn  x")));
}

TEST_CASE("counting template shape") {
  const Query q{"q1", "s1", "how many muffins", "3", false};
  const Program p = generate_program(q, TemplateBank::standard());
  CHECK(p.template_name == "count_loop");
  CHECK(p.source.find("image.find(\"muffin\")") != std::string::npos);
  CHECK(p.source.find("for patch in patches:") != std::string::npos);
  CHECK(p.source.find("count = count + 1") != std::string::npos);
  CHECK(p.source.find("return str(count)") != std::string::npos);
}

TEST_CASE("existence template") {
  const Program p = generate_program(Query{"q2", "s1", "is there a dog", "no", false}, TemplateBank::standard());
  CHECK(p.source.find("image.exists(\"dog\")") != std::string::npos);
  CHECK(p.source.find("bool_to_yesno") != std::string::npos);
}

TEST_CASE("unmatched question is a generation error") {
  CHECK_THROWS_AS(generate_program(Query{"q3", "s1", "why is the sky", "x", false}, TemplateBank::standard()),
                  GenerationError);
}

TEST_CASE("corruption count is the ceiling of rate times n") {
  const auto scenes = generate_scenes(97, 4);
  const auto queries = generate_queries(scenes, 5);
  for (double rate : {0.0, 0.1, 0.3, 0.5, 1.0}) {
    const auto batch = generate_programs(queries, TemplateBank::standard(), {rate, 9});
    REQUIRE(batch.failures.empty());
    const auto n = static_cast<double>(batch.programs.size());
    std::size_t corrupted = 0;
    for (const auto& p : batch.programs) corrupted += p.corrupted;
    CHECK(corrupted == static_cast<std::size_t>(std::ceil(rate * n - 1e-9)));
  }
  CHECK(corrupted_count(0.3, 10) == 3);
  CHECK(corrupted_count(0.3, 11) == 4);
}

TEST_CASE("label-only queries get no program") {
  const auto scenes = generate_scenes(10, 4);
  const auto queries = generate_queries(scenes, 5, 4);
  const auto batch = generate_programs(queries, TemplateBank::standard(), {0.0, 1});
  CHECK(batch.programs.size() == 10);
}

TEST_CASE("program json round trip re-parses the source") {
  const Program p = generate_program(Query{"q1", "s1", "how many cups", "2", false}, TemplateBank::standard(), true);
  const Program back = program_from_json(program_to_json(p), "test");
  CHECK(back.corrupted);
  CHECK(back.template_name == p.template_name);
  CHECK(structurally_equal(back.ast, p.ast));
  Json bad = program_to_json(p);
  bad["source"] = "return (";
  CHECK_THROWS(program_from_json(bad, "test"));
}

TEST_CASE("external generator: accepted, rejected, transport failure") {
  const Scene scene = fact::testing::muffin_scene(2);
  const Query q{"q1", scene.scene_id, "how many muffins", "2", false};
  Json seen;
  StubServer good("/gen", [&](const Json& body) {
    seen = body;
    return std::pair{200, Json{{"source", "return \"2\""}}.dump()};
  });
  ExternalGeneratorConfig cfg{true, good.url("/gen"), 5.0, "1"};
  const Program p = ExternalGenerator(cfg).generate(q, scene);
  CHECK(p.template_name == "external");
  CHECK(render_source(p.ast) == "return \"2\"");
  CHECK(seen.at("question") == "how many muffins");
  CHECK(seen.at("api_doc_version") == "1");
  CHECK(seen.at("scene_summary").get<std::string>().find("2 muffins") != std::string::npos);

  StubServer broken("/gen", [](const Json&) { return std::pair{200, Json{{"source", "return ("}}.dump()}; });
  CHECK_THROWS_AS(ExternalGenerator({true, broken.url("/gen"), 5.0, "1"}).generate(q, scene), ParseError);

  StubServer failing("/gen", [](const Json&) { return std::pair{500, std::string("{}")}; });
  CHECK_THROWS_AS(ExternalGenerator({true, failing.url("/gen"), 5.0, "1"}).generate(q, scene), TransportError);
  CHECK_THROWS_AS(ExternalGenerator({false, "", 1.0, "1"}).generate(q, scene), PreconditionError);
  CHECK_THROWS_AS(ExternalGenerator({true, "", 1.0, "1"}), ConfigError);
}

TEST_CASE("program-gen stage: external failures are recorded rows, disabled endpoint never called") {
  std::atomic<int> calls{0};
  StubServer server("/gen", [&](const Json& body) {
    ++calls;
    if (body.at("question").get<std::string>().rfind("how many", 0) == 0)
      return std::pair{200, Json{{"source", "return (("}}.dump()};
    return std::pair{200, Json{{"source", "return \"no\""}}.dump()};
  });
  TempDir dir("extgen");
  PipelineConfig config;
  config.work_dir = dir.path;
  config.scenes = 20;
  config.workers = 2;
  config.external_generator.url = server.url("/gen");
  run_scene_gen(config);

  const StageReport local = run_program_gen(config);
  CHECK(calls == 0);
  CHECK(local.counts.at("generated") == 20);

  config.external_generator.enabled = true;
  const StageReport remote = run_program_gen(config);
  CHECK(calls == 20);
  std::size_t counting = 0;
  for (const auto& q : load_queries(config.path("queries"))) counting += q.question.rfind("how many", 0) == 0;
  REQUIRE(counting > 0);
  CHECK(remote.errors.size() == counting);
  CHECK(remote.counts.at("generated") == 20 - counting);
  for (const auto& e : remote.errors) CHECK(e.message.find("syntax error") != std::string::npos);

  config.strict = true;
  CHECK_THROWS_AS(run_program_gen(config), StageError);
}

}
