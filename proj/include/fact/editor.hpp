#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fact/ast.hpp"
#include "fact/interpreter.hpp"
#include "fact/jsonl.hpp"

namespace fact {

// --- pruning ------------------------------------------------------------------------

struct PrunedTrace {
  const ExecutionTrace* base = nullptr;
  std::vector<std::int64_t> kept_seqs;  // ascending
  std::int64_t slice_root = 0;          // the return event

  bool keeps(std::int64_t seq) const;
};

// Backward closure from the return event over data dependence (`uses`) and
// control dependence (`parent`). Raises PreconditionError unless the trace
// finished with status ok.
PrunedTrace prune(const ExecutionTrace& trace, const Ast& ast);

// Keeps every event; used when pruning is switched off.
PrunedTrace keep_all(const ExecutionTrace& trace);

// True iff every kept event's uses and parent are kept and the return event
// is kept.
bool is_closed(const ExecutionTrace& trace, const std::vector<std::int64_t>& kept);

// --- symbolic records ---------------------------------------------------------------

enum class Operation { Assigned, Called, Looped, Branch, Returned };
const char* operation_name(Operation op);

// assigned: {name: value};  called: {args: "a,b", result: v} with the callee
// as invocation;  looped: {var: N};  branch: {arm: i};  returned: {value: v}.
struct SymbolicRecord {
  Operation operation = Operation::Assigned;
  std::vector<std::pair<std::string, std::string>> arguments;
  std::optional<std::string> invocation;
  int multiplicity = 1;  // repeats folded into a called record

  const std::string& argument(std::string_view key) const;
  friend bool operator==(const SymbolicRecord&, const SymbolicRecord&) = default;
};

std::string record_line(const SymbolicRecord& record);
// Inverse of record_line. Raises SchemaError on malformed lines.
SymbolicRecord parse_record_line(std::string_view line);

// Names a record writes and reads, and the entity strings it mentions. Call
// results read through temporaries are attributed to the reading record.
struct RecordLinks {
  std::set<std::string> defines;
  std::set<std::string> reads;
  std::set<std::string> entities;
  std::vector<std::int64_t> events;   // source events, ascending
  std::set<std::int64_t> depends_on;  // events read or control-depended on
  std::optional<std::string> final_value;  // last loop value for looped records
};

struct SymbolicTrace {
  std::string program_id;
  std::string query_id;
  std::vector<SymbolicRecord> records;
  std::vector<RecordLinks> links;  // parallel to records
};

// Folds loop-carried assignments per (statement, loop activation), each loop
// activation into one looped record, branch repeats per (statement, arm, loop
// activation), and identical calls into one record with a repeat count.
// Records follow first-occurrence order.
SymbolicTrace merge(const PrunedTrace& pruned, const Scene* scene = nullptr);

// One record per kept event, no folding. Loop iterations appear as
// assignments of the loop variable; loop exits produce no record.
SymbolicTrace symbolize(const PrunedTrace& pruned, const Scene* scene = nullptr);

// --- rendering ----------------------------------------------------------------------

std::string render_record(const SymbolicRecord& record);
std::vector<std::string> render(const SymbolicTrace& trace);

// --- gap tagging and bridging -------------------------------------------------------

enum class Joint { Gap, NoGap };
const char* joint_tag(Joint joint);

struct TaggedDraft {
  std::vector<std::string> sentences;
  std::vector<Joint> joints;  // sentences.size() - 1 entries
  std::vector<std::vector<std::size_t>> source_records;
};

class GapTagger {
 public:
  virtual ~GapTagger() = default;
  virtual Joint tag(const SymbolicTrace& trace, const std::vector<std::size_t>& prev,
                    const std::vector<std::size_t>& next) const = 0;
};

// <no-gap> iff the next sentence's records refer to a name or entity that the
// previous sentence's records define, read or mention, or depend directly on
// one of its events.
class ReferentialTagger : public GapTagger {
 public:
  Joint tag(const SymbolicTrace& trace, const std::vector<std::size_t>& prev,
            const std::vector<std::size_t>& next) const override;
};

// Sentence i is sourced from record i. Raises PreconditionError when there
// are no sentences or the counts differ.
TaggedDraft tag_gaps(const std::vector<std::string>& sentences, const SymbolicTrace& trace,
                     const GapTagger& tagger = ReferentialTagger{});

struct BridgeRequest {
  std::string prev;
  std::string next;
  std::vector<std::string> facts;
  std::vector<std::size_t> prev_records;
  std::vector<std::size_t> next_records;
};

class Bridger {
 public:
  virtual ~Bridger() = default;
  // May throw; the caller then falls back to the template bridger.
  virtual std::string bridge(const SymbolicTrace& trace, const BridgeRequest& request) const = 0;
};

class TemplateBridger : public Bridger {
 public:
  std::string bridge(const SymbolicTrace& trace, const BridgeRequest& request) const override;
};

// POSTs {prev, next, facts} and expects {bridge_text}. Safe for concurrent
// use: every call opens its own connection.
class ExternalBridger : public Bridger {
 public:
  ExternalBridger(std::string url, double timeout_seconds = 10.0);
  std::string bridge(const SymbolicTrace& trace, const BridgeRequest& request) const override;

 private:
  std::string url_;
  double timeout_seconds_;
};

// "name = value" for each name the next records read whose latest definition
// sits at or before the previous records.
std::vector<std::string> shared_facts(const SymbolicTrace& trace, const std::vector<std::size_t>& prev,
                                      const std::vector<std::size_t>& next);

struct Lineage {
  bool pruned = false;
  bool merged = false;
  bool bridged = false;
  int bridge_fallbacks = 0;
  std::string fallback_error;
};

struct CotRationale {
  std::string query_id;
  std::string program_id;
  std::string text;
  std::vector<std::string> sentences;
  std::vector<std::vector<std::size_t>> source_records;  // empty for inserted bridges
  std::vector<bool> inserted;
  std::vector<Joint> joints;  // from the draft
  Lineage lineage;
};

// Inserts one bridge sentence at every <gap> joint. A throwing bridger is
// replaced by the template bridger for that joint and counted in lineage.
CotRationale bridge(const TaggedDraft& tagged, const SymbolicTrace& trace, const Bridger& bridger);

// Draft text with no insertions.
CotRationale unbridged(const TaggedDraft& tagged, const SymbolicTrace& trace);

struct EditOptions {
  bool prune = true;
  bool merge = true;
  bool bridge = true;
  const Scene* scene = nullptr;
  const GapTagger* tagger = nullptr;  // default: ReferentialTagger
  const Bridger* bridger = nullptr;   // default: TemplateBridger
};

CotRationale edit_trace(const ExecutionTrace& trace, const Ast& ast, const EditOptions& options = {});

Json rationale_to_json(const CotRationale& rationale);
CotRationale rationale_from_json(const Json& json, const std::string& where);

std::size_t token_count(std::string_view text);

}  // namespace fact
