// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "fact/distill.hpp"
#include "fact/editor.hpp"
#include "fact/pipeline.hpp"
#include "fact/program_gen.hpp"
#include "fact/transfer.hpp"
#include "support/oracles.hpp"
#include "support/scripted_student.hpp"

using namespace fact;
namespace ft = fact::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// Faithful traces over a seeded corpus, uncorrupted, no detector noise.
struct FaithfulCorpus {
  std::vector<Scene> scenes;
  std::vector<Query> queries;
  std::vector<Program> programs;
  std::vector<ExecutionTrace> traces;
  std::vector<const Scene*> scene_of;
};

FaithfulCorpus faithful_corpus(std::size_t n, std::uint64_t seed) {
  FaithfulCorpus c;
  c.scenes = generate_scenes(n, seed);
  c.queries = generate_queries(c.scenes, seed + 1);
  std::map<std::string, const Scene*> scene_by_id;
  for (const auto& s : c.scenes) scene_by_id[s.scene_id] = &s;
  std::map<std::string, const Query*> query_by_id;
  for (const auto& q : c.queries) query_by_id[q.query_id] = &q;
  for (auto& p : generate_programs(c.queries, TemplateBank::standard(), {0.0, seed + 2}).programs) {
    const Query& q = *query_by_id.at(p.query_id);
    const Scene* s = scene_by_id.at(q.scene_id);
    ExecutionTrace t = execute(p.ast, *s);
    if (check_faithful(t, q).rejection) continue;
    c.programs.push_back(std::move(p));
    c.traces.push_back(std::move(t));
    c.scene_of.push_back(s);
  }
  return c;
}

Outcome slice_soundness() {
  const auto start = Clock::now();
  const FaithfulCorpus c = faithful_corpus(600, 2024);
  std::map<std::string, int> per_template;
  std::size_t sound = 0;
  std::string first_bad;
  for (std::size_t i = 0; i < c.traces.size(); ++i) {
    const PrunedTrace p = prune(c.traces[i], c.programs[i].ast);
    const auto r = ft::replay_slice(c.programs[i].ast, c.traces[i], p.kept_seqs, *c.scene_of[i]);
    ++per_template[c.programs[i].template_name];
    if (r.ok) {
      ++sound;
    } else if (first_bad.empty()) {
      first_bad = c.programs[i].program_id + " " + r.original + " vs " + r.replayed;
    }
  }
  const double secs = seconds_since(start);
  std::string templates;
  for (const auto& [name, n] : per_template) templates += " " + name + "=" + std::to_string(n);
  const bool pass = c.traces.size() >= 500 && per_template.size() == 5 && sound == c.traces.size() && secs < 60.0;
  return {pass, std::to_string(sound) + "/" + std::to_string(c.traces.size()) + " slices replay exactly;" + templates +
                    "; " + fmt(secs, 3) + " s" + (first_bad.empty() ? "" : "; first mismatch " + first_bad)};
}

Outcome merge_correctness() {
  // The literal example first: num = len(patches) over 8 patches.
  const Scene eight = ft::muffin_scene(8);
  const Program counting =
      generate_program(Query{"q8", eight.scene_id, "how many muffins", "8", false}, TemplateBank::standard());
  const SymbolicTrace literal = merge(keep_all(execute(counting.ast, eight)), &eight);
  const std::string golden = literal.records.size() > 1 ? record_line(literal.records[1]) : "";
  const bool golden_ok = golden == "assigned num:8 len";

  FaithfulCorpus c = faithful_corpus(600, 77);
  for (int k = 2; k <= 8; ++k) {
    const Scene s = ft::muffin_scene(k, "s_m" + std::to_string(k));
    c.scenes.push_back(s);
  }
  std::size_t looped = 0, ok = 0;
  std::string first_bad;
  auto check_trace = [&](const Program& prog, const ExecutionTrace& t, const Scene& scene) {
    int max_iters = 0;
    for (const auto& e : t.events) {
      if (e.kind == EventKind::LoopIter) max_iters = std::max(max_iters, static_cast<int>(*e.index) + 1);
    }
    if (max_iters < 2) return;
    ++looped;
    const PrunedTrace p = prune(t, prog.ast);
    const SymbolicTrace m = merge(p, &scene);
    std::map<std::string, std::string> last;
    std::map<std::string, std::string> loop_final;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      const auto& r = m.records[i];
      if (r.operation == Operation::Assigned) last[r.arguments[0].first] = r.arguments[0].second;
      if (r.operation == Operation::Looped && m.links[i].final_value)
        loop_final[r.arguments[0].first] = *m.links[i].final_value;
    }
    bool good = m.records.size() < p.kept_seqs.size();
    for (const auto* values : {&last, &loop_final}) {
      for (const auto& [name, value] : *values) {
        const auto env = t.environment.find(name);
        if (env == t.environment.end() || value_text(env->second, &scene) != value) {
          good = false;
          if (first_bad.empty()) first_bad = prog.program_id + ":" + name + "=" + value;
        }
      }
    }
    ok += good;
  };
  for (std::size_t i = 0; i < c.traces.size(); ++i) check_trace(c.programs[i], c.traces[i], *c.scene_of[i]);
  for (int k = 2; k <= 8; ++k) {
    const Scene& s = c.scenes[c.scenes.size() - 9 + static_cast<std::size_t>(k)];
    check_trace(counting, execute(counting.ast, s), s);
  }
  const bool pass = golden_ok && looped >= 50 && ok == looped;
  return {pass, "golden \"" + golden + "\"; " + std::to_string(ok) + "/" + std::to_string(looped) +
                    " looped traces merge to final values with fewer records than kept events" +
                    (first_bad.empty() ? "" : "; first mismatch " + first_bad)};
}

Outcome verdict_table() {
  const Query q{"q", "s", "how many cups", "2", false};
  CotRationale r;
  r.query_id = "q";
  r.text = "Therefore the answer is 2.";
  auto score = [&](const std::vector<std::pair<bool, bool>>& outcomes) {
    StudentList students;
    for (const auto& [b, a] : outcomes) students.push_back(std::make_unique<ft::ScriptedStudent>("s", b, a));
    return utility_score(r, q, students).score;
  };
  const bool cells = score({{false, true}}) == 1 && score({{false, false}}) == -1 && score({{true, true}}) == 0;
  int agree = 0;
  for (int code = 0; code < 64; ++code) {
    std::vector<std::pair<bool, bool>> outcomes;
    int expected = 0;
    for (int k = 0; k < 3; ++k) {
      const bool before = (code >> (2 * k + 1)) & 1, after = (code >> (2 * k)) & 1;
      outcomes.emplace_back(before, after);
      expected += before ? (after ? 0 : -1) : (after ? 1 : -1);
    }
    ScoredRationale s;
    s.score = score(outcomes);
    const bool kept = !filter_by_score({s}, 0).kept.empty();
    agree += s.score == expected && kept == (expected >= 0);
  }
  return {cells && agree == 64, std::string("cells +1/-1/0 ") + (cells ? "match" : "differ") + "; brute force " +
                                    std::to_string(agree) + "/64 agree"};
}

Outcome loss_and_gradients() {
  const auto start = Clock::now();
  double worst_identity = 0.0, worst_grad = 0.0;
  std::size_t params = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CorrelatedTaskConfig tc;
    tc.train_rows = 24;
    tc.heldout_rows = 4;
    const CorrelatedTask task = make_correlated_task(tc, 500 + seed);
    ToyModel m = ToyModel::build(task.train, 6, seed, 0.5);
    m.lambda = 0.25 * static_cast<double>(seed % 5);
    const EncodedBatch batch = m.encode(task.train);
    const LossReport l = loss(m, batch);
    worst_identity = std::max(worst_identity, std::abs(l.total - (l.label + m.lambda * l.rationale)));
    worst_grad = std::max(worst_grad, ft::max_relative_gradient_error(m, batch, gradients(m, batch), 1e-5));
    params += static_cast<std::size_t>(m.E.size() + m.U.size() + m.R.size());
  }
  const double secs = seconds_since(start);
  const bool pass = worst_identity <= 1e-12 && worst_grad <= 1e-5 && secs < 10.0;
  return {pass, "max |L - (L_label + lambda L_rationale)| = " + fmt(worst_identity) + "; max relative gradient error " +
                    fmt(worst_grad) + " over " + std::to_string(params) + " parameters in 10 batches; " + fmt(secs, 3) +
                    " s"};
}

Outcome distillation_effect() {
  double total = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CorrelatedTask task = make_correlated_task({}, seed);
    TrainConfig with, without;
    with.seed = without.seed = seed;
    with.lambda = 1.0;
    without.lambda = 0.0;
    const double a = fit_and_evaluate(task.train, task.heldout, with).accuracy_heldout;
    const double b = fit_and_evaluate(task.train, task.heldout, without).accuracy_heldout;
    total += a - b;
    per_seed += " " + fmt(100.0 * (a - b), 3);
  }
  const double mean = total / 5.0;
  return {mean >= 0.05, "mean held-out gain " + fmt(100.0 * mean, 3) + " pp (per seed:" + per_seed + ")"};
}

Outcome conciseness_ordering() {
  ft::TempDir dir("acc_ablate");
  PipelineConfig c;
  c.work_dir = dir.path;
  c.scenes = 400;
  c.seed = 11;
  c.epochs = 100;
  run_all(c);
  const auto cells = run_ablation(c);
  auto cell = [&](bool p, bool m, bool b) -> const AblationCell& {
    for (const auto& x : cells) {
      if (x.prune == p && x.merge == m && x.bridge == b) return x;
    }
    throw Error("missing ablation cell");
  };
  for (const auto& x : cells) {
    if (!x.error.empty()) return {false, "cell failed: " + x.error};
  }
  const double full = cell(true, true, true).mean_tokens, merge_only = cell(false, true, false).mean_tokens,
               none = cell(false, false, false).mean_tokens;
  // The same ordering restricted to the loop template.
  std::map<std::string, std::string> template_of;
  for (const auto& row : read_jsonl(c.path("programs")))
    template_of[row.value.at("program_id").get<std::string>()] = row.value.at("template").get<std::string>();
  auto loop_mean = [&](bool p, bool m, bool b) {
    const std::string name = std::string("p") + (p ? "1" : "0") + "m" + (m ? "1" : "0") + "b" + (b ? "1" : "0");
    double tokens = 0.0;
    int n = 0;
    for (const auto& row : read_jsonl(c.work_dir / "ablation" / name / "rationales.jsonl")) {
      if (template_of.at(row.value.at("program_id").get<std::string>()) != "count_loop") continue;
      tokens += static_cast<double>(token_count(row.value.at("text").get<std::string>()));
      ++n;
    }
    return n ? tokens / n : 0.0;
  };
  const double lf = loop_mean(true, true, true), lm = loop_mean(false, true, false), ln = loop_mean(false, false, false);
  const double kp = cell(true, false, false).keep_rate, km = cell(false, true, false).keep_rate,
               kb = cell(false, false, true).keep_rate;
  const bool pass = full < merge_only && merge_only < none && lf > 0.0 && lf < lm && lm < ln && kp >= km && km >= kb;
  return {pass, "mean tokens full " + fmt(full) + " < merge-only " + fmt(merge_only) + " < none " + fmt(none) +
                    " (loop programs " + fmt(lf) + " < " + fmt(lm) + " < " + fmt(ln) + ")" +
                    "; keep rate prune " + fmt(kp) + " >= merge " + fmt(km) + " >= bridge " + fmt(kb)};
}

Outcome determinism() {
  ft::TempDir a("acc_det_a"), b("acc_det_b");
  PipelineConfig ca, cb;
  ca.work_dir = a.path;
  cb.work_dir = b.path;
  ca.scenes = cb.scenes = 200;
  ca.label_only = cb.label_only = 20;
  ca.workers = 1;
  cb.workers = 3;
  run_all(ca);
  run_all(cb);
  int same = 0, total = 0;
  std::string differing;
  for (const char* f : {"scenes", "queries", "programs", "traces", "rationales", "scored", "dataset", "metrics", "manifest"}) {
    ++total;
    if (read_text_file(ca.path(f)) == read_text_file(cb.path(f))) {
      ++same;
    } else {
      differing += std::string(" ") + f;
    }
  }
  return {same == total, std::to_string(same) + "/" + std::to_string(total) + " stage files byte-identical" +
                             (differing.empty() ? "" : "; differ:" + differing)};
}

Outcome funnel_integrity() {
  std::string detail;
  bool pass = true;
  for (double rate : {0.0, 0.1, 0.3, 0.5}) {
    ft::TempDir dir("acc_funnel");
    PipelineConfig c;
    c.work_dir = dir.path;
    c.scenes = 200;
    c.label_only = 15;
    c.corruption_rate = rate;
    c.detector_noise = 0.0;
    c.epochs = 20;
    run_all(c);
    const FunnelCounts f = read_funnel(c.path("manifest"));
    const double keep = static_cast<double>(f.faithful_kept) / static_cast<double>(f.generated);
    const bool monotone = f.faithful_kept <= f.executed && f.executed <= f.generated && f.score_kept <= f.faithful_kept &&
                          f.emitted == f.score_kept + f.masked;
    const bool exact = keep == 1.0 - rate;
    pass = pass && monotone && exact;
    detail += (detail.empty() ? "" : "; ") + std::string("c=") + fmt(rate) + ": " + std::to_string(f.generated) + " -> " +
              std::to_string(f.faithful_kept) + " -> " + std::to_string(f.score_kept) + " (+" +
              std::to_string(f.masked) + " masked = " + std::to_string(f.emitted) + "), keep " + fmt(keep);
  }
  return {pass, detail};
}

}  // namespace

int main() {
  report("slice soundness", slice_soundness);
  report("merge correctness", merge_correctness);
  report("verdict table", verdict_table);
  report("loss identity and gradients", loss_and_gradients);
  report("directional distillation effect", distillation_effect);
  report("conciseness ordering", conciseness_ordering);
  report("determinism audit", determinism);
  report("funnel integrity", funnel_integrity);
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
