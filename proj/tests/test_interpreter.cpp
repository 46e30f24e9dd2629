#include <doctest.h>

#include "fact/dsl.hpp"
#include "fact/interpreter.hpp"
#include "fact/program_gen.hpp"
#include "support/oracles.hpp"

using namespace fact;
using fact::testing::def_use_violation;
using fact::testing::muffin_scene;

namespace {

const Program& counting_program() {
  static const Program p =
      generate_program(Query{"q_m", "s_muffins", "how many muffins", "3", false}, TemplateBank::standard());
  return p;
}

struct Corpus {
  std::vector<Scene> scenes;
  std::vector<Query> queries;
  std::vector<Program> programs;
  const Scene& scene_of(const Program& p) const {
    for (const auto& q : queries) {
      if (q.query_id == p.query_id) {
        for (const auto& s : scenes) {
          if (s.scene_id == q.scene_id) return s;
        }
      }
    }
    throw LookupError(p.query_id);
  }
  const Query& query_of(const Program& p) const {
    for (const auto& q : queries) {
      if (q.query_id == p.query_id) return q;
    }
    throw LookupError(p.query_id);
  }
};

Corpus corpus(std::size_t n, std::uint64_t seed, double corruption) {
  Corpus c;
  c.scenes = generate_scenes(n, seed);
  c.queries = generate_queries(c.scenes, seed + 1);
  c.programs = generate_programs(c.queries, TemplateBank::standard(), {corruption, seed + 2}).programs;
  return c;
}

}  // namespace

TEST_SUITE("trace_interpreter") {

TEST_CASE("counting on three muffins: hand-simulated event sequence") {
  const Scene scene = muffin_scene(3);
  const ExecutionTrace t = execute(counting_program().ast, scene);
  REQUIRE(t.status == TraceStatus::Ok);
  CHECK(value_str(*t.result) == "3");

  // patches, num, count, for: 3 x (iter, exists call, branch, count + 1), exit, str(), return
  using K = EventKind;
  std::vector<K> expected = {K::Assign, K::Assign, K::Assign, K::LoopEnter};
  for (int i = 0; i < 3; ++i) {
    for (K k : {K::LoopIter, K::ToolCall, K::BranchTaken, K::Assign}) expected.push_back(k);
  }
  for (K k : {K::LoopExit, K::BuiltinCall, K::Return}) expected.push_back(k);
  std::vector<K> got;
  for (const auto& e : t.events) got.push_back(e.kind);
  CHECK(got == expected);

  const TraceEvent& patches = t.event(0);
  REQUIRE(patches.invocation);
  CHECK(patches.invocation->callee == "find");
  CHECK(t.event(1).invocation->callee == "len");
  CHECK(value_str(t.event(1).bindings.at("num")) == "3");
  for (int i = 0; i < 3; ++i) {
    const TraceEvent& iter = t.event(4 + 4 * i);
    CHECK(iter.parent == 3);
    CHECK(iter.index == i);
    CHECK(t.event(6 + 4 * i).parent == iter.seq);
    CHECK(value_str(t.event(7 + 4 * i).bindings.at("count")) == std::to_string(i + 1));
  }
  CHECK(t.event(16).index == 3);
  CHECK(def_use_violation(t) == "");
}

TEST_CASE("events are sequential and counts match an uninstrumented run") {
  const Corpus c = corpus(150, 71, 0.3);
  for (const auto& p : c.programs) {
    const Scene& s = c.scene_of(p);
    const ExecutionTrace t = execute(p.ast, s);
    for (std::size_t i = 0; i < t.events.size(); ++i) CHECK(t.events[i].seq == static_cast<std::int64_t>(i));
    const ExecutionCounts counts = count_execution(p.ast, s);
    std::int64_t assigns = 0, iters = 0, branches = 0;
    for (const auto& e : t.events) {
      assigns += e.kind == EventKind::Assign;
      iters += e.kind == EventKind::LoopIter;
      branches += e.kind == EventKind::BranchTaken;
    }
    CHECK(assigns == counts.assign_statements);
    CHECK(iters == counts.loop_iterations);
    CHECK(branches == counts.branches_taken);
    CHECK(def_use_violation(t) == "");
  }
}

TEST_CASE("execution is deterministic") {
  const Corpus c = corpus(40, 3, 0.0);
  for (const auto& p : c.programs) {
    const ExecuteOptions noisy{{}, DetectorNoise{0.3, 5}, true};
    CHECK(trace_to_json(execute(p.ast, c.scene_of(p), noisy)) == trace_to_json(execute(p.ast, c.scene_of(p), noisy)));
  }
}

TEST_CASE("undefined name is a runtime error at that node") {
  const Ast ast = parse("x = 1\nreturn y");
  const ExecutionTrace t = execute(ast, muffin_scene(1));
  CHECK(t.status == TraceStatus::RuntimeError);
  REQUIRE(t.error_node != kNoNode);
  CHECK(ast.node(t.error_node).kind == NodeKind::Name);
  CHECK(ast.node(t.error_node).text == "y");
  CHECK_FALSE(t.result);
  CHECK(t.events.size() == 1);
}

TEST_CASE("long loop stops at the step limit") {
  const Ast ast = parse("xs = [0] * 1000000\nn = 0\nfor x in xs:\n    n = n + 1\nreturn n");
  StepLimits limits;
  limits.max_steps = 10'000;
  const ExecutionTrace t = execute(ast, muffin_scene(1), limits);
  CHECK(t.status == TraceStatus::StepLimit);
  CHECK(t.events.size() == 10'000);
}

TEST_CASE("runtime faults") {
  const Scene s = muffin_scene(1);
  CHECK(execute(parse("return 1 / 0"), s).status == TraceStatus::RuntimeError);
  CHECK(execute(parse("return image.best_text_match([])"), s).status == TraceStatus::RuntimeError);
  CHECK(execute(parse("return image.find(\"dog\")[0]"), s).status == TraceStatus::RuntimeError);
  CHECK(execute(parse("x = 1"), s).status == TraceStatus::RuntimeError);
  CHECK(execute(parse("for x in 3:\n    y = 1\nreturn 1"), s).status == TraceStatus::RuntimeError);
  CHECK(execute(parse("return 9223372036854775807 + 1"), s).status == TraceStatus::RuntimeError);
}

TEST_CASE("python-style arithmetic and builtins") {
  const Scene s = muffin_scene(3);
  auto run = [&](const std::string& src) {
    const auto t = execute(parse(src), s);
    REQUIRE(t.status == TraceStatus::Ok);
    return value_str(*t.result);
  };
  CHECK(run("return -7 + 2 * 3") == "-1");
  CHECK(run("return 1 < 2 and not 2 < 1") == "True");
  CHECK(run("return \"cup\" in [\"cup\", \"dog\"]") == "True");
  CHECK(run("return 1 + 2.5") == "3.5");
  CHECK(run("return 7 / 2") == "3.5");
  CHECK(run("return len(image.find(\"muffin\"))") == "3");
  CHECK(run("return max([3, 9, 4])") == "9");
  CHECK(run("return min(5, 2)") == "2");
  CHECK(run("return bool_to_yesno(1 < 2)") == "yes");
  CHECK(run("return str(True)") == "True");
  CHECK(run("return distance(image.find(\"muffin\")[0], image.find(\"muffin\")[1])") == "25.0");
}

TEST_CASE("trace json round trip") {
  const Corpus c = corpus(30, 8, 0.3);
  for (const auto& p : c.programs) {
    ExecutionTrace t = execute(p.ast, c.scene_of(p));
    t.program_id = p.program_id;
    t.query_id = p.query_id;
    const Json j = trace_to_json(t);
    const ExecutionTrace back = trace_from_json(j, "test");
    CHECK(back.events == t.events);
    CHECK(back.status == t.status);
    CHECK(trace_to_json(back) == j);
  }
  Json broken = trace_to_json(execute(counting_program().ast, muffin_scene(2)));
  broken["events"][1]["seq"] = 7;
  CHECK_THROWS_AS(trace_from_json(broken, "test"), SchemaError);
}

TEST_CASE("faithfulness filter") {
  const Scene scene = muffin_scene(3);
  const Query q{"q_m", scene.scene_id, "how many muffins", "3", false};
  CHECK_FALSE(check_faithful(execute(counting_program().ast, scene), q).rejection);

  const Program bad = generate_program(q, TemplateBank::standard(), true);
  const auto outcome = check_faithful(execute(bad.ast, scene), q);
  REQUIRE(outcome.rejection);
  CHECK(*outcome.rejection == RejectReason::WrongAnswer);

  CHECK(check_faithful(execute(parse("return y"), scene), q).rejection == RejectReason::RuntimeError);
  const Query three_word{"q_w", scene.scene_id, "how many muffins", "three", false};
  CHECK_FALSE(check_faithful(execute(counting_program().ast, scene), three_word).rejection);
}

TEST_CASE("with no corruption and no noise every generated program is kept") {
  const Corpus c = corpus(300, 12, 0.0);
  REQUIRE(c.programs.size() == 300);
  std::vector<ExecutionTrace> traces;
  for (const auto& p : c.programs) traces.push_back(execute(p.ast, c.scene_of(p)));
  std::vector<std::pair<const ExecutionTrace*, const Query*>> items;
  for (std::size_t i = 0; i < traces.size(); ++i) items.emplace_back(&traces[i], &c.query_of(c.programs[i]));
  const auto result = faithfulness_filter(items);
  CHECK(result.kept.size() == 300);
  CHECK(result.rejected.empty());
}

TEST_CASE("every corrupted program is rejected") {
  const Corpus c = corpus(200, 13, 1.0);
  for (const auto& p : c.programs) {
    REQUIRE(p.corrupted);
    CHECK(check_faithful(execute(p.ast, c.scene_of(p)), c.query_of(p)).rejection);
  }
}

}
