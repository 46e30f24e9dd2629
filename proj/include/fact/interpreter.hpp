#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fact/ast.hpp"
#include "fact/scene.hpp"
#include "fact/tools.hpp"
#include "fact/value.hpp"

namespace fact {

struct StepLimits {
  std::int64_t max_steps = 10'000;
  std::size_t max_list_length = 1'000'000;
  std::size_t snapshot_elements = 64;
};

enum class EventKind { Assign, ToolCall, BuiltinCall, BranchTaken, LoopEnter, LoopIter, LoopExit, Return };
const char* event_kind_name(EventKind kind);
EventKind event_kind_from_name(std::string_view name);

struct Invocation {
  std::string callee;
  std::vector<RuntimeValue> args;  // receiver excluded for method calls
  RuntimeValue result;
  friend bool operator==(const Invocation&, const Invocation&) = default;
};

// A read of `name` whose value was written by event `seq`. Call results and
// loop iterables are bound to temporaries named "%<seq>".
struct Use {
  std::string name;
  std::int64_t seq = 0;
  friend bool operator==(const Use&, const Use&) = default;
};

bool is_temporary(std::string_view name);
std::string temporary_name(std::int64_t seq);

// `parent` is the innermost enclosing branch_taken or loop event (control
// dependence). `index` is the chosen arm for branch_taken, the iteration
// number for loop_iter and the iteration count for loop_exit.
struct TraceEvent {
  std::int64_t seq = 0;
  NodeId node_id = kNoNode;
  EventKind kind = EventKind::Assign;
  std::map<std::string, RuntimeValue> bindings;
  std::optional<Invocation> invocation;
  std::vector<Use> uses;
  std::optional<std::int64_t> parent;
  std::optional<std::int64_t> index;
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

enum class TraceStatus { Ok, RuntimeError, StepLimit };
const char* trace_status_name(TraceStatus status);
TraceStatus trace_status_from_name(std::string_view name);

struct ExecutionTrace {
  std::string program_id;
  std::string query_id;
  std::vector<TraceEvent> events;
  std::optional<RuntimeValue> result;
  TraceStatus status = TraceStatus::Ok;
  NodeId error_node = kNoNode;
  std::string error;
  // Final environment with full (untruncated) values. Kept in memory only.
  std::map<std::string, RuntimeValue> environment;

  const TraceEvent& event(std::int64_t seq) const { return events.at(static_cast<std::size_t>(seq)); }
};

struct ExecuteOptions {
  StepLimits limits;
  DetectorNoise noise;
  // Run without recording events; only counts executed statements.
  bool record = true;
};

// Statement counts from an execution; used to cross-check event completeness.
struct ExecutionCounts {
  std::int64_t assign_statements = 0;
  std::int64_t loop_iterations = 0;
  std::int64_t branches_taken = 0;
};

// Executes the program against the scene's tools. Never throws on program
// faults: failures are reported through `status`.
ExecutionTrace execute(const Ast& ast, const Scene& scene, const ExecuteOptions& options = {});
ExecutionTrace execute(const Ast& ast, const Scene& scene, const StepLimits& limits);

// Instrumentation-free run that only counts executed statements.
ExecutionCounts count_execution(const Ast& ast, const Scene& scene, const ExecuteOptions& options = {});

Json trace_to_json(const ExecutionTrace& trace);
ExecutionTrace trace_from_json(const Json& json, const std::string& where);

enum class RejectReason { WrongAnswer, RuntimeError, StepLimit };
const char* reject_reason_name(RejectReason reason);

struct FilterOutcome {
  std::size_t index = 0;  // position in the input list
  std::optional<RejectReason> rejection;
};

struct FaithfulnessResult {
  std::vector<std::size_t> kept;
  std::vector<std::pair<std::size_t, RejectReason>> rejected;
};

// Keeps traces with status ok whose normalized result equals the normalized
// expected answer.
FilterOutcome check_faithful(const ExecutionTrace& trace, const Query& query);
FaithfulnessResult faithfulness_filter(const std::vector<std::pair<const ExecutionTrace*, const Query*>>& items);

}  // namespace fact
