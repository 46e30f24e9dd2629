#include "fact/editor.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "fact/errors.hpp"
#include "fact/http.hpp"

namespace fact {

// --- pruning ------------------------------------------------------------------------

bool PrunedTrace::keeps(std::int64_t seq) const {
  return std::binary_search(kept_seqs.begin(), kept_seqs.end(), seq);
}

namespace {

std::int64_t return_seq(const ExecutionTrace& trace) {
  if (trace.status != TraceStatus::Ok) throw PreconditionError("trace " + trace.program_id + " did not finish ok");
  if (trace.events.empty() || trace.events.back().kind != EventKind::Return)
    throw PreconditionError("trace " + trace.program_id + " has no return event");
  return trace.events.back().seq;
}

}  // namespace

PrunedTrace prune(const ExecutionTrace& trace, const Ast& ast) {
  const std::int64_t root = return_seq(trace);
  const NodeId node = trace.event(root).node_id;
  if (node < 0 || static_cast<std::size_t>(node) >= ast.nodes.size() || ast.node(node).kind != NodeKind::Return)
    throw PreconditionError("trace " + trace.program_id + " does not belong to this program");

  std::vector<bool> kept(trace.events.size(), false);
  std::vector<std::int64_t> work{root};
  kept[static_cast<std::size_t>(root)] = true;
  auto visit = [&](std::int64_t seq) {
    if (!kept[static_cast<std::size_t>(seq)]) {
      kept[static_cast<std::size_t>(seq)] = true;
      work.push_back(seq);
    }
  };
  while (!work.empty()) {
    const TraceEvent& e = trace.event(work.back());
    work.pop_back();
    for (const auto& u : e.uses) visit(u.seq);
    if (e.parent) visit(*e.parent);
  }
  PrunedTrace out;
  out.base = &trace;
  out.slice_root = root;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i]) out.kept_seqs.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

PrunedTrace keep_all(const ExecutionTrace& trace) {
  PrunedTrace out;
  out.base = &trace;
  out.slice_root = return_seq(trace);
  for (const auto& e : trace.events) out.kept_seqs.push_back(e.seq);
  return out;
}

bool is_closed(const ExecutionTrace& trace, const std::vector<std::int64_t>& kept) {
  std::vector<bool> in(trace.events.size(), false);
  for (auto s : kept) in.at(static_cast<std::size_t>(s)) = true;
  if (trace.events.empty() || !in.back()) return false;
  for (auto s : kept) {
    const TraceEvent& e = trace.event(s);
    for (const auto& u : e.uses) {
      if (!in[static_cast<std::size_t>(u.seq)]) return false;
    }
    if (e.parent && !in[static_cast<std::size_t>(*e.parent)]) return false;
  }
  return true;
}

// --- symbolic records ---------------------------------------------------------------

const char* operation_name(Operation op) {
  switch (op) {
    case Operation::Assigned: return "assigned";
    case Operation::Called: return "called";
    case Operation::Looped: return "looped";
    case Operation::Branch: return "branch";
    case Operation::Returned: return "returned";
  }
  return "?";
}

const std::string& SymbolicRecord::argument(std::string_view key) const {
  for (const auto& [k, v] : arguments) {
    if (k == key) return v;
  }
  throw LookupError(std::string("record has no argument '") + std::string(key) + "'");
}

std::string record_line(const SymbolicRecord& r) {
  switch (r.operation) {
    case Operation::Assigned: {
      std::string out = "assigned " + r.arguments.at(0).first + ":" + r.arguments.at(0).second;
      if (r.invocation) out += " " + *r.invocation;
      return out;
    }
    case Operation::Called: {
      std::string out = "called " + r.invocation.value_or("") + "(" + r.argument("args") + ") -> " + r.argument("result");
      if (r.multiplicity >= 2) out += " x" + std::to_string(r.multiplicity);
      return out;
    }
    case Operation::Looped:
      return "looped " + r.arguments.at(0).first + " over " + r.arguments.at(0).second + " items";
    case Operation::Branch: return "branch arm " + r.argument("arm");
    case Operation::Returned: return "returned " + r.argument("value");
  }
  return {};
}

namespace {

// Scans one whitespace-free value token starting at `pos`. Quoted strings and
// bracketed lists are consumed whole; at depth 0 any character in `stops`
// ends the token.
std::string scan_value(std::string_view s, std::size_t& pos, std::string_view stops) {
  const std::size_t start = pos;
  int depth = 0;
  while (pos < s.size()) {
    const char c = s[pos];
    if (c == '"') {
      ++pos;
      while (pos < s.size() && s[pos] != '"') pos += s[pos] == '\\' ? 2 : 1;
      if (pos >= s.size()) throw SchemaError("unterminated string in record line");
      ++pos;
      continue;
    }
    if (c == '[') ++depth;
    if (c == ']') {
      if (depth == 0) break;
      --depth;
    }
    if (depth == 0 && stops.find(c) != std::string_view::npos) break;
    ++pos;
  }
  if (depth != 0) throw SchemaError("unbalanced brackets in record line");
  if (pos == start) throw SchemaError("empty value in record line");
  return std::string(s.substr(start, pos - start));
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return !std::isdigit(static_cast<unsigned char>(s.front()));
}

bool is_count(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

void expect(bool ok, std::string_view line) {
  if (!ok) throw SchemaError("malformed record line '" + std::string(line) + "'");
}

}  // namespace

SymbolicRecord parse_record_line(std::string_view line) {
  SymbolicRecord r;
  auto starts = [&](std::string_view p) { return line.substr(0, p.size()) == p; };
  if (starts("assigned ")) {
    r.operation = Operation::Assigned;
    std::size_t pos = 9;
    const auto colon = line.find(':', pos);
    expect(colon != std::string_view::npos, line);
    const std::string name(line.substr(pos, colon - pos));
    expect(is_identifier(name), line);
    pos = colon + 1;
    std::string value = scan_value(line, pos, " ");
    r.arguments.emplace_back(name, std::move(value));
    if (pos < line.size()) {
      const auto inv = line.substr(pos + 1);
      expect(line[pos] == ' ' && is_identifier(inv), line);
      r.invocation = std::string(inv);
    }
    return r;
  }
  if (starts("called ")) {
    r.operation = Operation::Called;
    std::size_t pos = 7;
    const auto open = line.find('(', pos);
    expect(open != std::string_view::npos, line);
    const std::string callee(line.substr(pos, open - pos));
    expect(is_identifier(callee), line);
    r.invocation = callee;
    pos = open + 1;
    std::string args;
    while (pos < line.size() && line[pos] != ')') {
      if (!args.empty() || line[pos] == ',') {
        expect(line[pos] == ',', line);
        args += ',';
        ++pos;
      }
      args += scan_value(line, pos, ",)");
    }
    expect(pos < line.size(), line);
    ++pos;
    expect(line.substr(pos, 4) == " -> ", line);
    pos += 4;
    std::string result = scan_value(line, pos, " ");
    r.arguments = {{"args", args}, {"result", result}};
    if (pos < line.size()) {
      expect(line.substr(pos, 2) == " x", line);
      const auto k = line.substr(pos + 2);
      expect(is_count(k), line);
      r.multiplicity = std::stoi(std::string(k));
      expect(r.multiplicity >= 2, line);
    }
    return r;
  }
  if (starts("looped ")) {
    r.operation = Operation::Looped;
    const auto over = line.find(" over ", 7);
    expect(over != std::string_view::npos && line.ends_with(" items"), line);
    const std::string var(line.substr(7, over - 7));
    const auto n = line.substr(over + 6, line.size() - 6 - (over + 6));
    expect(is_identifier(var) && is_count(n), line);
    r.arguments.emplace_back(var, std::string(n));
    return r;
  }
  if (starts("branch arm ")) {
    r.operation = Operation::Branch;
    const auto i = line.substr(11);
    expect(is_count(i), line);
    r.arguments.emplace_back("arm", std::string(i));
    return r;
  }
  if (starts("returned ")) {
    r.operation = Operation::Returned;
    std::size_t pos = 9;
    std::string value = scan_value(line, pos, " ");
    expect(pos == line.size(), line);
    r.arguments.emplace_back("value", std::move(value));
    return r;
  }
  expect(false, line);
  return r;
}

namespace {

// Collects the variables an event reads and the string arguments of any
// calls it consumes through temporaries.
void collect_reads(const ExecutionTrace& trace, const TraceEvent& e, RecordLinks& links) {
  if (e.parent) links.depends_on.insert(*e.parent);
  for (const auto& u : e.uses) links.depends_on.insert(u.seq);
  if (e.invocation) {
    for (const auto& a : e.invocation->args) {
      if (a.is<std::string>()) links.entities.insert(a.as<std::string>());
    }
  }
  for (const auto& u : e.uses) {
    if (is_temporary(u.name)) {
      collect_reads(trace, trace.event(u.seq), links);
    } else {
      links.reads.insert(u.name);
    }
  }
}

std::string args_text(const Invocation& inv, const Scene* scene) {
  std::string out;
  for (std::size_t i = 0; i < inv.args.size(); ++i) {
    if (i) out += ',';
    out += value_text(inv.args[i], scene);
  }
  return out;
}

// Seq of the innermost enclosing loop_enter, or -1 outside loops.
std::int64_t loop_activation(const ExecutionTrace& trace, const TraceEvent& e) {
  std::optional<std::int64_t> p = e.parent;
  while (p) {
    const TraceEvent& c = trace.event(*p);
    if (c.kind == EventKind::LoopIter) return *c.parent;
    p = c.parent;
  }
  return -1;
}

struct LoopFacts {
  std::int64_t iterations = 0;
  std::optional<RuntimeValue> last;
  std::string var;
};

LoopFacts loop_facts(const ExecutionTrace& trace, std::int64_t enter) {
  LoopFacts f;
  for (std::size_t s = static_cast<std::size_t>(enter) + 1; s < trace.events.size(); ++s) {
    const TraceEvent& e = trace.events[s];
    if (e.parent != enter) continue;
    if (e.kind == EventKind::LoopIter) {
      ++f.iterations;
      f.var = e.bindings.begin()->first;
      f.last = e.bindings.begin()->second;
    } else if (e.kind == EventKind::LoopExit) {
      f.iterations = *e.index;
      break;
    }
  }
  if (f.var.empty()) {
    // A loop over an empty list has no iterations to name its variable.
    f.var = "item";
  }
  return f;
}

class Builder {
 public:
  Builder(const PrunedTrace& pruned, const Scene* scene, bool fold)
      : trace_(*pruned.base), pruned_(pruned), scene_(scene), fold_(fold) {}

  SymbolicTrace build() {
    for (auto seq : pruned_.kept_seqs) add(trace_.event(seq));
    SymbolicTrace out;
    out.program_id = trace_.program_id;
    out.query_id = trace_.query_id;
    for (auto& g : groups_) {
      out.records.push_back(std::move(g.record));
      out.links.push_back(std::move(g.links));
    }
    return out;
  }

 private:
  struct Group {
    SymbolicRecord record;
    RecordLinks links;
  };
  using Key = std::tuple<int, std::string, std::int64_t, std::int64_t>;

  std::string text(const RuntimeValue& v) const { return value_text(v, scene_); }

  // Returns the group for `key`, creating it in first-occurrence position.
  Group& group(const Key& key, bool& fresh) {
    if (fold_) {
      auto it = index_.find(key);
      if (it != index_.end()) {
        fresh = false;
        return groups_[it->second];
      }
      index_[key] = groups_.size();
    }
    fresh = true;
    groups_.emplace_back();
    return groups_.back();
  }

  void add(const TraceEvent& e) {
    bool fresh = true;
    switch (e.kind) {
      case EventKind::Assign: {
        Group& g = group({0, "", e.node_id, loop_activation(trace_, e)}, fresh);
        const auto& [name, value] = *e.bindings.begin();
        g.record.operation = Operation::Assigned;
        g.record.arguments = {{name, text(value)}};
        if (e.invocation) g.record.invocation = e.invocation->callee;
        g.links.defines.insert(name);
        collect_reads(trace_, e, g.links);
        g.links.events.push_back(e.seq);
        return;
      }
      case EventKind::ToolCall:
      case EventKind::BuiltinCall: {
        const std::string args = args_text(*e.invocation, scene_);
        Group& g = group({1, e.invocation->callee + "(" + args + ")", 0, 0}, fresh);
        g.record.operation = Operation::Called;
        g.record.invocation = e.invocation->callee;
        g.record.arguments = {{"args", args}, {"result", text(e.invocation->result)}};
        g.record.multiplicity = fresh ? 1 : g.record.multiplicity + 1;
        collect_reads(trace_, e, g.links);
        g.links.events.push_back(e.seq);
        return;
      }
      case EventKind::LoopEnter: {
        Group& g = group({2, "", e.seq, 0}, fresh);
        const LoopFacts f = loop_facts(trace_, e.seq);
        g.record.operation = Operation::Looped;
        g.record.arguments = {{f.var, std::to_string(f.iterations)}};
        g.links.defines.insert(f.var);
        if (f.last) g.links.final_value = text(*f.last);
        collect_reads(trace_, e, g.links);
        g.links.events.push_back(e.seq);
        return;
      }
      case EventKind::LoopIter: {
        if (fold_) {
          Group& g = group({2, "", *e.parent, 0}, fresh);
          g.links.events.push_back(e.seq);
          return;
        }
        Group& g = group({}, fresh);
        const auto& [name, value] = *e.bindings.begin();
        g.record.operation = Operation::Assigned;
        g.record.arguments = {{name, text(value)}};
        g.links.defines.insert(name);
        collect_reads(trace_, e, g.links);
        g.links.events.push_back(e.seq);
        return;
      }
      case EventKind::LoopExit: {
        if (fold_) {
          Group& g = group({2, "", *e.parent, 0}, fresh);
          g.links.events.push_back(e.seq);
        }
        return;
      }
      case EventKind::BranchTaken: {
        Group& g = group({3, std::to_string(*e.index), e.node_id, loop_activation(trace_, e)}, fresh);
        g.record.operation = Operation::Branch;
        g.record.arguments = {{"arm", std::to_string(*e.index)}};
        collect_reads(trace_, e, g.links);
        g.links.events.push_back(e.seq);
        return;
      }
      case EventKind::Return: {
        Group& g = group({4, "", e.seq, 0}, fresh);
        g.record.operation = Operation::Returned;
        g.record.arguments = {{"value", text(e.bindings.at("%return"))}};
        collect_reads(trace_, e, g.links);
        g.links.events.push_back(e.seq);
        return;
      }
    }
  }

  const ExecutionTrace& trace_;
  const PrunedTrace& pruned_;
  const Scene* scene_;
  bool fold_;
  std::vector<Group> groups_;
  std::map<Key, std::size_t> index_;
};

}  // namespace

SymbolicTrace merge(const PrunedTrace& pruned, const Scene* scene) { return Builder(pruned, scene, true).build(); }

SymbolicTrace symbolize(const PrunedTrace& pruned, const Scene* scene) {
  return Builder(pruned, scene, false).build();
}

// --- rendering ----------------------------------------------------------------------

namespace {

const char* verb_for(const std::string& callee) {
  static const std::map<std::string, const char*> verbs = {
      {"len", "Counting"},
      {"find", "Searching"},
      {"exists", "Checking existence"},
      {"verify_property", "Verifying"},
      {"best_text_match", "Matching"},
      {"simple_query", "Asking"},
      {"compute_depth", "Measuring depth"},
      {"distance", "Measuring distance"},
      {"sorted", "Sorting"},
      {"min", "Comparing"},
      {"max", "Comparing"},
      {"abs", "Computing"},
      {"str", "Converting"},
      {"int", "Converting"},
      {"bool_to_yesno", "Converting"},
  };
  auto it = verbs.find(callee);
  return it == verbs.end() ? "Computing" : it->second;
}

}  // namespace

std::string render_record(const SymbolicRecord& r) {
  switch (r.operation) {
    case Operation::Assigned: {
      const auto& [name, value] = r.arguments.at(0);
      if (r.invocation) return std::string(verb_for(*r.invocation)) + " gives " + name + " = " + value + " (via " + *r.invocation + ").";
      return "Now " + name + " = " + value + ".";
    }
    case Operation::Called: {
      std::string out = "Calling " + *r.invocation + "(" + r.argument("args") + ") gives " + r.argument("result");
      if (r.multiplicity >= 2) out += " (" + std::to_string(r.multiplicity) + " times)";
      return out + ".";
    }
    case Operation::Looped: {
      const auto& [var, n] = r.arguments.at(0);
      if (n == "1") return "Checked the single " + var + ".";
      return "Checked each of the " + n + " " + plural(var) + " in turn.";
    }
    case Operation::Branch: return "Branch " + r.argument("arm") + " is taken.";
    case Operation::Returned: return "Therefore the answer is " + r.argument("value") + ".";
  }
  return {};
}

std::vector<std::string> render(const SymbolicTrace& trace) {
  std::vector<std::string> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) out.push_back(render_record(r));
  return out;
}

// --- gap tagging and bridging -------------------------------------------------------

const char* joint_tag(Joint joint) { return joint == Joint::Gap ? "<gap>" : "<no-gap>"; }

Joint ReferentialTagger::tag(const SymbolicTrace& trace, const std::vector<std::size_t>& prev,
                             const std::vector<std::size_t>& next) const {
  std::set<std::string> mentioned;
  for (auto i : prev) {
    const auto& l = trace.links.at(i);
    mentioned.insert(l.defines.begin(), l.defines.end());
    mentioned.insert(l.reads.begin(), l.reads.end());
    mentioned.insert(l.entities.begin(), l.entities.end());
  }
  std::set<std::int64_t> prev_events;
  for (auto i : prev) prev_events.insert(trace.links.at(i).events.begin(), trace.links.at(i).events.end());
  for (auto i : next) {
    const auto& l = trace.links.at(i);
    for (auto seq : l.depends_on) {
      if (prev_events.count(seq)) return Joint::NoGap;
    }
    for (const auto* set : {&l.reads, &l.entities, &l.defines}) {
      for (const auto& name : *set) {
        if (mentioned.count(name)) return Joint::NoGap;
      }
    }
  }
  return Joint::Gap;
}

TaggedDraft tag_gaps(const std::vector<std::string>& sentences, const SymbolicTrace& trace, const GapTagger& tagger) {
  if (sentences.empty()) throw PreconditionError("tag_gaps needs at least one sentence");
  if (sentences.size() != trace.records.size())
    throw PreconditionError("tag_gaps: one sentence per record is required");
  TaggedDraft draft;
  draft.sentences = sentences;
  for (std::size_t i = 0; i < sentences.size(); ++i) draft.source_records.push_back({i});
  for (std::size_t i = 0; i + 1 < sentences.size(); ++i)
    draft.joints.push_back(tagger.tag(trace, draft.source_records[i], draft.source_records[i + 1]));
  return draft;
}

namespace {

// Value of the latest definition of `name` at or before record `limit`.
std::optional<std::string> latest_value(const SymbolicTrace& trace, const std::string& name, std::size_t limit) {
  for (std::size_t i = limit + 1; i-- > 0;) {
    const auto& r = trace.records[i];
    if (!trace.links[i].defines.count(name)) continue;
    if (r.operation == Operation::Assigned) return r.arguments.at(0).second;
    if (r.operation == Operation::Looped && trace.links[i].final_value) return trace.links[i].final_value;
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> shared_facts(const SymbolicTrace& trace, const std::vector<std::size_t>& prev,
                                      const std::vector<std::size_t>& next) {
  std::vector<std::string> facts;
  if (prev.empty()) return facts;
  const std::size_t limit = *std::max_element(prev.begin(), prev.end());
  std::set<std::string> reads;
  for (auto i : next) reads.insert(trace.links.at(i).reads.begin(), trace.links.at(i).reads.end());
  for (const auto& name : reads) {
    if (auto v = latest_value(trace, name, limit)) facts.push_back(name + " = " + *v);
  }
  return facts;
}

namespace {

// Element count of a list in value-text form, or nullopt for non-lists.
std::optional<std::size_t> list_size(std::string_view value) {
  if (value.size() < 2 || value.front() != '[' || value.back() != ']') return std::nullopt;
  if (value == "[]") return 0;
  std::size_t n = 1;
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 1; i + 1 < value.size(); ++i) {
    const char c = value[i];
    if (quoted) {
      if (c == '\\') ++i;
      else if (c == '"') quoted = false;
      continue;
    }
    if (c == '"') quoted = true;
    else if (c == '[') ++depth;
    else if (c == ']') --depth;
    else if (c == ',' && depth == 0) ++n;
  }
  return n;
}

// Lists are summarized by length; restating them would cost more than the
// gap it closes.
std::string recall(const std::string& fact) {
  const auto eq = fact.find(" = ");
  if (eq != std::string::npos) {
    if (const auto n = list_size(std::string_view(fact).substr(eq + 3)))
      return "Recall that " + fact.substr(0, eq) + " holds " + std::to_string(*n) + (*n == 1 ? " item." : " items.");
  }
  return "Recall that " + fact + ".";
}

}  // namespace

std::string TemplateBridger::bridge(const SymbolicTrace& trace, const BridgeRequest& request) const {
  if (!request.facts.empty()) return recall(request.facts.front());
  for (auto i : request.next_records) {
    const auto& l = trace.links.at(i);
    if (!l.defines.empty()) return "Next, we track " + *l.defines.begin() + ".";
  }
  for (auto i : request.next_records) {
    const auto& l = trace.links.at(i);
    if (!l.entities.empty()) return "Next, we turn to " + *l.entities.begin() + ".";
  }
  return "Next, we continue.";
}

ExternalBridger::ExternalBridger(std::string url, double timeout_seconds)
    : url_(std::move(url)), timeout_seconds_(timeout_seconds) {
  if (url_.empty()) throw ConfigError("external bridger needs a url");
}

std::string ExternalBridger::bridge(const SymbolicTrace&, const BridgeRequest& request) const {
  const Json body{{"prev", request.prev}, {"next", request.next}, {"facts", request.facts}};
  const Json response = post_json(url_, body, timeout_seconds_);
  const auto it = response.find("bridge_text");
  if (it == response.end() || !it->is_string() || it->get<std::string>().empty())
    throw TransportError("bridger response lacks a non-empty 'bridge_text'");
  return it->get<std::string>();
}

namespace {

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

CotRationale start_rationale(const TaggedDraft& tagged, const SymbolicTrace& trace) {
  if (tagged.sentences.empty()) throw PreconditionError("bridge needs at least one sentence");
  if (tagged.joints.size() + 1 != tagged.sentences.size())
    throw PreconditionError("tagged draft needs one joint between each pair of sentences");
  CotRationale out;
  out.query_id = trace.query_id;
  out.program_id = trace.program_id;
  out.joints = tagged.joints;
  return out;
}

void push_sentence(CotRationale& out, std::string text, std::vector<std::size_t> sources, bool inserted) {
  out.sentences.push_back(std::move(text));
  out.source_records.push_back(std::move(sources));
  out.inserted.push_back(inserted);
}

}  // namespace

CotRationale bridge(const TaggedDraft& tagged, const SymbolicTrace& trace, const Bridger& bridger) {
  CotRationale out = start_rationale(tagged, trace);
  out.lineage.bridged = true;
  const TemplateBridger fallback;
  for (std::size_t i = 0; i < tagged.sentences.size(); ++i) {
    if (i > 0 && tagged.joints[i - 1] == Joint::Gap) {
      BridgeRequest request;
      request.prev = tagged.sentences[i - 1];
      request.next = tagged.sentences[i];
      request.prev_records = tagged.source_records[i - 1];
      request.next_records = tagged.source_records[i];
      request.facts = shared_facts(trace, request.prev_records, request.next_records);
      std::string text;
      try {
        text = bridger.bridge(trace, request);
      } catch (const std::exception& e) {
        ++out.lineage.bridge_fallbacks;
        if (out.lineage.fallback_error.empty()) out.lineage.fallback_error = e.what();
        text = fallback.bridge(trace, request);
      }
      push_sentence(out, std::move(text), {}, true);
    }
    push_sentence(out, tagged.sentences[i], tagged.source_records[i], false);
  }
  out.text = join_sentences(out.sentences);
  return out;
}

CotRationale unbridged(const TaggedDraft& tagged, const SymbolicTrace& trace) {
  CotRationale out = start_rationale(tagged, trace);
  for (std::size_t i = 0; i < tagged.sentences.size(); ++i)
    push_sentence(out, tagged.sentences[i], tagged.source_records[i], false);
  out.text = join_sentences(out.sentences);
  return out;
}

CotRationale edit_trace(const ExecutionTrace& trace, const Ast& ast, const EditOptions& options) {
  const PrunedTrace pruned = options.prune ? prune(trace, ast) : keep_all(trace);
  const SymbolicTrace symbolic = options.merge ? merge(pruned, options.scene) : symbolize(pruned, options.scene);
  const ReferentialTagger default_tagger;
  const TemplateBridger default_bridger;
  const TaggedDraft draft =
      tag_gaps(render(symbolic), symbolic, options.tagger ? *options.tagger : static_cast<const GapTagger&>(default_tagger));
  CotRationale out = options.bridge
                         ? bridge(draft, symbolic, options.bridger ? *options.bridger : static_cast<const Bridger&>(default_bridger))
                         : unbridged(draft, symbolic);
  out.lineage.pruned = options.prune;
  out.lineage.merged = options.merge;
  return out;
}

Json rationale_to_json(const CotRationale& r) {
  Json joints = Json::array();
  for (auto j : r.joints) joints.push_back(joint_tag(j));
  Json lineage{{"pruned", r.lineage.pruned}, {"merged", r.lineage.merged}, {"bridged", r.lineage.bridged}};
  if (r.lineage.bridge_fallbacks > 0) {
    lineage["bridge_fallbacks"] = r.lineage.bridge_fallbacks;
    lineage["fallback_error"] = r.lineage.fallback_error;
  }
  return Json{{"query_id", r.query_id},
              {"program_id", r.program_id},
              {"text", r.text},
              {"lineage", lineage},
              {"sentences", r.sentences},
              {"joints", joints},
              {"source_records", r.source_records},
              {"inserted", r.inserted}};
}

CotRationale rationale_from_json(const Json& json, const std::string& where) {
  CotRationale r;
  try {
    r.query_id = require_string(json, "query_id", where);
    r.program_id = require_string(json, "program_id", where);
    r.text = require_string(json, "text", where);
    const Json& lineage = require_field(json, "lineage", where);
    r.lineage.pruned = lineage.at("pruned").get<bool>();
    r.lineage.merged = lineage.at("merged").get<bool>();
    r.lineage.bridged = lineage.at("bridged").get<bool>();
    r.lineage.bridge_fallbacks = lineage.value("bridge_fallbacks", 0);
    r.lineage.fallback_error = lineage.value("fallback_error", std::string());
    r.sentences = require_field(json, "sentences", where).get<std::vector<std::string>>();
    for (const auto& j : require_field(json, "joints", where)) {
      const auto tag = j.get<std::string>();
      if (tag != "<gap>" && tag != "<no-gap>") throw SchemaError(where + ": bad joint tag '" + tag + "'");
      r.joints.push_back(tag == "<gap>" ? Joint::Gap : Joint::NoGap);
    }
    if (auto it = json.find("source_records"); it != json.end())
      r.source_records = it->get<std::vector<std::vector<std::size_t>>>();
    if (auto it = json.find("inserted"); it != json.end()) r.inserted = it->get<std::vector<bool>>();
  } catch (const Json::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return r;
}

std::size_t token_count(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

}  // namespace fact
