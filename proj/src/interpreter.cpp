#include "fact/interpreter.hpp"

#include <algorithm>
#include <cmath>

#include "fact/errors.hpp"
#include "fact/oracle.hpp"

namespace fact {

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::Assign: return "assign";
    case EventKind::ToolCall: return "tool_call";
    case EventKind::BuiltinCall: return "builtin_call";
    case EventKind::BranchTaken: return "branch_taken";
    case EventKind::LoopEnter: return "loop_enter";
    case EventKind::LoopIter: return "loop_iter";
    case EventKind::LoopExit: return "loop_exit";
    case EventKind::Return: return "return";
  }
  return "?";
}

EventKind event_kind_from_name(std::string_view name) {
  for (auto kind : {EventKind::Assign, EventKind::ToolCall, EventKind::BuiltinCall, EventKind::BranchTaken,
                    EventKind::LoopEnter, EventKind::LoopIter, EventKind::LoopExit, EventKind::Return}) {
    if (name == event_kind_name(kind)) return kind;
  }
  throw SchemaError("unknown event kind '" + std::string(name) + "'");
}

const char* trace_status_name(TraceStatus status) {
  switch (status) {
    case TraceStatus::Ok: return "ok";
    case TraceStatus::RuntimeError: return "runtime_error";
    case TraceStatus::StepLimit: return "step_limit";
  }
  return "?";
}

TraceStatus trace_status_from_name(std::string_view name) {
  for (auto s : {TraceStatus::Ok, TraceStatus::RuntimeError, TraceStatus::StepLimit}) {
    if (name == trace_status_name(s)) return s;
  }
  throw SchemaError("unknown trace status '" + std::string(name) + "'");
}

const char* reject_reason_name(RejectReason reason) {
  switch (reason) {
    case RejectReason::WrongAnswer: return "wrong_answer";
    case RejectReason::RuntimeError: return "runtime_error";
    case RejectReason::StepLimit: return "step_limit";
  }
  return "?";
}

bool is_temporary(std::string_view name) { return !name.empty() && name.front() == '%'; }
std::string temporary_name(std::int64_t seq) { return "%" + std::to_string(seq); }

namespace {

struct RuntimeFault {
  NodeId node;
  std::string message;
};

struct StepLimitHit {};

bool is_number(const RuntimeValue& v) { return v.is<std::int64_t>() || v.is<double>(); }

double as_double(const RuntimeValue& v) {
  if (v.is<std::int64_t>()) return static_cast<double>(v.as<std::int64_t>());
  if (v.is<bool>()) return v.as<bool>() ? 1.0 : 0.0;
  return v.as<double>();
}

bool truthy(const RuntimeValue& v) {
  return std::visit(
      [](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) return x != 0;
        else if constexpr (std::is_same_v<T, double>) return x != 0.0;
        else if constexpr (std::is_same_v<T, bool>) return x;
        else if constexpr (std::is_same_v<T, std::string>) return !x.empty();
        else if constexpr (std::is_same_v<T, ValueList>) return !x.empty();
        else return true;
      },
      v.data);
}

bool values_equal(const RuntimeValue& a, const RuntimeValue& b) {
  const bool an = is_number(a) || a.is<bool>();
  const bool bn = is_number(b) || b.is<bool>();
  if (an && bn) return as_double(a) == as_double(b);
  if (a.is<ValueList>() && b.is<ValueList>()) {
    const auto& x = a.as<ValueList>();
    const auto& y = b.as<ValueList>();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!values_equal(x[i], y[i])) return false;
    }
    return true;
  }
  return a == b;
}

class Interpreter {
 public:
  Interpreter(const Ast& ast, const Scene& scene, const ExecuteOptions& options)
      : ast_(ast), scene_(scene), tools_(scene, options.noise), options_(options) {}

  ExecutionTrace run() {
    const AstNode& root = ast_.node(ast_.root);
    env_[root.text] = Binding{RuntimeValue(full_patch(scene_)), -1};
    try {
      const bool returned = exec_block(root.children);
      if (!returned) throw RuntimeFault{ast_.root, "program ended without return"};
      trace_.status = TraceStatus::Ok;
    } catch (const RuntimeFault& fault) {
      trace_.status = TraceStatus::RuntimeError;
      trace_.error_node = fault.node;
      trace_.error = fault.message;
      trace_.result.reset();
    } catch (const StepLimitHit&) {
      trace_.status = TraceStatus::StepLimit;
      trace_.error = "step limit of " + std::to_string(options_.limits.max_steps) + " reached";
      trace_.result.reset();
    }
    for (const auto& [name, binding] : env_) {
      if (name != root.text) trace_.environment[name] = binding.value;
    }
    return std::move(trace_);
  }

  ExecutionCounts counts() const { return counts_; }

 private:
  struct Binding {
    RuntimeValue value;
    std::int64_t seq;
  };

  // Reserves the next sequence number, enforcing the step limit.
  std::int64_t next_seq() {
    if (seq_ >= options_.limits.max_steps) throw StepLimitHit{};
    return seq_++;
  }

  std::optional<std::int64_t> control() const {
    if (control_.empty()) return std::nullopt;
    return control_.back();
  }

  void emit(TraceEvent event) {
    if (options_.record) trace_.events.push_back(std::move(event));
  }

  RuntimeValue snap(const RuntimeValue& v) const { return snapshot(v, options_.limits.snapshot_elements); }

  void check_length(std::size_t n, NodeId node) const {
    if (n > options_.limits.max_list_length)
      throw RuntimeFault{node, "list length " + std::to_string(n) + " exceeds the configured maximum"};
  }

  [[noreturn]] void type_error(NodeId node, const std::string& what) const {
    throw RuntimeFault{node, "type mismatch: " + what};
  }

  // --- statements -----------------------------------------------------------------

  bool exec_block(const std::vector<NodeId>& ids) {
    for (NodeId id : ids) {
      if (exec_statement(id)) return true;
    }
    return false;
  }

  bool exec_block(const std::vector<NodeId>& ids, std::size_t from, std::size_t count) {
    for (std::size_t i = from; i < from + count; ++i) {
      if (exec_statement(ids[i])) return true;
    }
    return false;
  }

  bool exec_statement(NodeId id) {
    const AstNode& n = ast_.node(id);
    switch (n.kind) {
      case NodeKind::Assign: {
        std::vector<Use> uses;
        std::optional<Invocation> invocation;
        RuntimeValue value;
        const NodeKind rhs = ast_.node(n.children[0]).kind;
        if (rhs == NodeKind::Call || rhs == NodeKind::MethodCall) {
          Invocation fused;
          value = eval_call(n.children[0], uses, &fused);
          invocation = std::move(fused);
        } else {
          value = eval(n.children[0], uses);
        }
        const std::int64_t seq = next_seq();
        ++counts_.assign_statements;
        if (options_.record) {
          TraceEvent e;
          e.seq = seq;
          e.node_id = id;
          e.kind = EventKind::Assign;
          e.bindings[n.text] = snap(value);
          e.invocation = std::move(invocation);
          e.uses = std::move(uses);
          e.parent = control();
          emit(std::move(e));
        }
        env_[n.text] = Binding{std::move(value), seq};
        return false;
      }
      case NodeKind::ExprStmt: {
        std::vector<Use> uses;
        eval(n.children[0], uses);
        return false;
      }
      case NodeKind::Return: {
        std::vector<Use> uses;
        RuntimeValue value = eval(n.children[0], uses);
        const std::int64_t seq = next_seq();
        if (options_.record) {
          TraceEvent e;
          e.seq = seq;
          e.node_id = id;
          e.kind = EventKind::Return;
          e.bindings["%return"] = snap(value);
          e.uses = std::move(uses);
          e.parent = control();
          emit(std::move(e));
        }
        trace_.result = std::move(value);
        return true;
      }
      case NodeKind::If: return exec_if(n);
      case NodeKind::For: return exec_for(n);
      default: throw RuntimeFault{id, std::string("unexpected node ") + node_kind_name(n.kind)};
    }
  }

  bool exec_if(const AstNode& n) {
    std::vector<Use> uses;
    std::size_t cursor = 0;
    const std::size_t arms = n.arm_sizes.size();
    for (std::size_t arm = 0; arm < arms; ++arm) {
      const bool is_else = n.has_else && arm + 1 == arms;
      bool taken = true;
      if (!is_else) {
        taken = truthy(eval(n.children[cursor], uses));
        ++cursor;
      }
      const auto body_size = static_cast<std::size_t>(n.arm_sizes[arm]);
      if (!taken) {
        cursor += body_size;
        continue;
      }
      const std::int64_t seq = next_seq();
      ++counts_.branches_taken;
      if (options_.record) {
        TraceEvent e;
        e.seq = seq;
        e.node_id = n.id;
        e.kind = EventKind::BranchTaken;
        e.bindings["%cond"] = RuntimeValue(true);
        e.uses = std::move(uses);
        e.parent = control();
        e.index = static_cast<std::int64_t>(arm);
        emit(std::move(e));
      }
      control_.push_back(seq);
      const bool returned = exec_block(n.children, cursor, body_size);
      control_.pop_back();
      return returned;
    }
    return false;
  }

  bool exec_for(const AstNode& n) {
    std::vector<Use> uses;
    RuntimeValue iterable = eval(n.children[0], uses);
    if (!iterable.is<ValueList>()) type_error(n.children[0], std::string("cannot iterate over ") + iterable.type_name());
    const ValueList items = iterable.as<ValueList>();
    const std::int64_t enter = next_seq();
    const std::string list_temp = temporary_name(enter);
    if (options_.record) {
      TraceEvent e;
      e.seq = enter;
      e.node_id = n.id;
      e.kind = EventKind::LoopEnter;
      e.bindings[list_temp] = snap(iterable);
      e.uses = std::move(uses);
      e.parent = control();
      emit(std::move(e));
    }
    const std::vector<NodeId> body(n.children.begin() + 1, n.children.end());
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::int64_t iter = next_seq();
      ++counts_.loop_iterations;
      if (options_.record) {
        TraceEvent e;
        e.seq = iter;
        e.node_id = n.id;
        e.kind = EventKind::LoopIter;
        e.bindings[n.text] = snap(items[i]);
        e.uses = {Use{list_temp, enter}};
        e.parent = enter;
        e.index = static_cast<std::int64_t>(i);
        emit(std::move(e));
      }
      env_[n.text] = Binding{items[i], iter};
      control_.push_back(iter);
      const bool returned = exec_block(body);
      control_.pop_back();
      if (returned) return true;
    }
    const std::int64_t exit = next_seq();
    if (options_.record) {
      TraceEvent e;
      e.seq = exit;
      e.node_id = n.id;
      e.kind = EventKind::LoopExit;
      e.uses = {Use{list_temp, enter}};
      e.parent = enter;
      e.index = static_cast<std::int64_t>(items.size());
      emit(std::move(e));
    }
    return false;
  }

  // --- expressions ----------------------------------------------------------------

  RuntimeValue eval(NodeId id, std::vector<Use>& uses) {
    const AstNode& n = ast_.node(id);
    switch (n.kind) {
      case NodeKind::Literal:
        return std::visit(
            [&](const auto& v) -> RuntimeValue {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, std::monostate>) throw RuntimeFault{id, "empty literal"};
              else return RuntimeValue(v);
            },
            n.literal);
      case NodeKind::Name: {
        auto it = env_.find(n.text);
        if (it == env_.end()) throw RuntimeFault{id, "name '" + n.text + "' is not defined"};
        if (it->second.seq >= 0) uses.push_back(Use{n.text, it->second.seq});
        return it->second.value;
      }
      case NodeKind::ListLit: {
        check_length(n.children.size(), id);
        ValueList out;
        for (NodeId c : n.children) out.push_back(eval(c, uses));
        return RuntimeValue(std::move(out));
      }
      case NodeKind::Attribute: return attribute(n, eval(n.children[0], uses));
      case NodeKind::Index: {
        RuntimeValue obj = eval(n.children[0], uses);
        RuntimeValue idx = eval(n.children[1], uses);
        if (!idx.is<std::int64_t>()) type_error(id, std::string("index must be int, not ") + idx.type_name());
        std::int64_t i = idx.as<std::int64_t>();
        if (obj.is<ValueList>()) {
          const auto& list = obj.as<ValueList>();
          const auto size = static_cast<std::int64_t>(list.size());
          if (i < 0) i += size;
          if (i < 0 || i >= size) throw RuntimeFault{id, "index out of range"};
          return list[static_cast<std::size_t>(i)];
        }
        if (obj.is<std::string>()) {
          const auto& s = obj.as<std::string>();
          const auto size = static_cast<std::int64_t>(s.size());
          if (i < 0) i += size;
          if (i < 0 || i >= size) throw RuntimeFault{id, "index out of range"};
          return RuntimeValue(std::string(1, s[static_cast<std::size_t>(i)]));
        }
        type_error(id, std::string("cannot index ") + obj.type_name());
      }
      case NodeKind::Call:
      case NodeKind::MethodCall: return eval_call(id, uses, nullptr);
      case NodeKind::Unary: {
        RuntimeValue v = eval(n.children[0], uses);
        if (n.text == "not") return RuntimeValue(!truthy(v));
        if (v.is<std::int64_t>()) return RuntimeValue(-v.as<std::int64_t>());
        if (v.is<double>()) return RuntimeValue(-v.as<double>());
        type_error(id, std::string("bad operand for unary -: ") + v.type_name());
      }
      case NodeKind::Binary: return binary(n, uses);
      default: throw RuntimeFault{id, std::string("unexpected node ") + node_kind_name(n.kind)};
    }
  }

  RuntimeValue attribute(const AstNode& n, const RuntimeValue& obj) {
    if (!obj.is<Patch>()) type_error(n.id, std::string("'") + obj.type_name() + "' has no attribute '" + n.text + "'");
    const Patch& p = obj.as<Patch>();
    if (n.text == "left") return RuntimeValue(std::int64_t{p.box.left});
    if (n.text == "lower") return RuntimeValue(std::int64_t{p.box.lower});
    if (n.text == "right") return RuntimeValue(std::int64_t{p.box.right});
    if (n.text == "upper") return RuntimeValue(std::int64_t{p.box.upper});
    if (n.text == "width") return RuntimeValue(std::int64_t{p.width()});
    if (n.text == "height") return RuntimeValue(std::int64_t{p.height()});
    if (n.text == "horizontal_center") return RuntimeValue(p.horizontal_center());
    if (n.text == "vertical_center") return RuntimeValue(p.vertical_center());
    throw RuntimeFault{n.id, "patch has no attribute '" + n.text + "'"};
  }

  RuntimeValue binary(const AstNode& n, std::vector<Use>& uses) {
    const std::string& op = n.text;
    if (op == "and" || op == "or") {
      RuntimeValue left = eval(n.children[0], uses);
      const bool t = truthy(left);
      if ((op == "and" && !t) || (op == "or" && t)) return left;
      return eval(n.children[1], uses);
    }
    RuntimeValue a = eval(n.children[0], uses);
    RuntimeValue b = eval(n.children[1], uses);
    const NodeId id = n.id;
    if (op == "==") return RuntimeValue(values_equal(a, b));
    if (op == "!=") return RuntimeValue(!values_equal(a, b));
    if (op == "in") {
      if (b.is<ValueList>()) {
        const auto& list = b.as<ValueList>();
        return RuntimeValue(std::any_of(list.begin(), list.end(), [&](const auto& x) { return values_equal(a, x); }));
      }
      if (b.is<std::string>() && a.is<std::string>())
        return RuntimeValue(b.as<std::string>().find(a.as<std::string>()) != std::string::npos);
      type_error(id, std::string("'in' needs a list or string, not ") + b.type_name());
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      int cmp = 0;
      if (is_number(a) && is_number(b)) {
        const double x = as_double(a), y = as_double(b);
        cmp = x < y ? -1 : (x > y ? 1 : 0);
      } else if (a.is<std::string>() && b.is<std::string>()) {
        cmp = a.as<std::string>().compare(b.as<std::string>());
      } else {
        type_error(id, std::string("cannot compare ") + a.type_name() + " and " + b.type_name());
      }
      if (op == "<") return RuntimeValue(cmp < 0);
      if (op == "<=") return RuntimeValue(cmp <= 0);
      if (op == ">") return RuntimeValue(cmp > 0);
      return RuntimeValue(cmp >= 0);
    }
    if (op == "+") {
      if (a.is<std::string>() && b.is<std::string>()) return RuntimeValue(a.as<std::string>() + b.as<std::string>());
      if (a.is<ValueList>() && b.is<ValueList>()) {
        ValueList out = a.as<ValueList>();
        check_length(out.size() + b.as<ValueList>().size(), id);
        out.insert(out.end(), b.as<ValueList>().begin(), b.as<ValueList>().end());
        return RuntimeValue(std::move(out));
      }
    }
    if (op == "*") {
      const RuntimeValue* seq = a.is<ValueList>() || a.is<std::string>() ? &a : (b.is<ValueList>() || b.is<std::string>() ? &b : nullptr);
      const RuntimeValue* times = seq == &a ? &b : &a;
      if (seq && times->is<std::int64_t>()) {
        const std::int64_t k = std::max<std::int64_t>(0, times->as<std::int64_t>());
        if (seq->is<ValueList>()) {
          const auto& list = seq->as<ValueList>();
          check_length(list.size() * static_cast<std::size_t>(k), id);
          ValueList out;
          out.reserve(list.size() * static_cast<std::size_t>(k));
          for (std::int64_t r = 0; r < k; ++r) out.insert(out.end(), list.begin(), list.end());
          return RuntimeValue(std::move(out));
        }
        const auto& s = seq->as<std::string>();
        check_length(s.size() * static_cast<std::size_t>(k), id);
        std::string out;
        for (std::int64_t r = 0; r < k; ++r) out += s;
        return RuntimeValue(std::move(out));
      }
    }
    if (!is_number(a) || !is_number(b))
      type_error(id, "unsupported operands for " + op + ": " + a.type_name() + " and " + b.type_name());
    if (op == "/") {
      if (as_double(b) == 0.0) throw RuntimeFault{id, "division by zero"};
      return RuntimeValue(as_double(a) / as_double(b));
    }
    if (a.is<std::int64_t>() && b.is<std::int64_t>()) {
      std::int64_t out = 0;
      const std::int64_t x = a.as<std::int64_t>(), y = b.as<std::int64_t>();
      bool overflow = false;
      if (op == "+") overflow = __builtin_add_overflow(x, y, &out);
      if (op == "-") overflow = __builtin_sub_overflow(x, y, &out);
      if (op == "*") overflow = __builtin_mul_overflow(x, y, &out);
      if (overflow) throw RuntimeFault{id, "integer overflow"};
      return RuntimeValue(out);
    }
    const double x = as_double(a), y = as_double(b);
    double out = op == "+" ? x + y : (op == "-" ? x - y : x * y);
    if (!std::isfinite(out)) throw RuntimeFault{id, "non-finite result"};
    return RuntimeValue(out);
  }

  // Evaluates a call. With `fused` set the invocation is handed to the caller
  // (an assignment) instead of being emitted as its own event.
  RuntimeValue eval_call(NodeId id, std::vector<Use>& uses, Invocation* fused) {
    const AstNode& n = ast_.node(id);
    std::vector<Use> call_uses;
    std::vector<RuntimeValue> args;
    std::optional<RuntimeValue> receiver;
    std::size_t first_arg = 0;
    if (n.kind == NodeKind::MethodCall) {
      receiver = eval(n.children[0], call_uses);
      first_arg = 1;
    }
    for (std::size_t i = first_arg; i < n.children.size(); ++i) args.push_back(eval(n.children[i], call_uses));

    RuntimeValue result = n.kind == NodeKind::MethodCall ? call_tool(n, *receiver, args) : call_builtin(n, args);

    if (fused) {
      fused->callee = n.text;
      fused->args.clear();
      for (const auto& a : args) fused->args.push_back(snap(a));
      fused->result = snap(result);
      uses.insert(uses.end(), call_uses.begin(), call_uses.end());
      return result;
    }
    const std::int64_t seq = next_seq();
    if (options_.record) {
      TraceEvent e;
      e.seq = seq;
      e.node_id = id;
      e.kind = n.kind == NodeKind::MethodCall ? EventKind::ToolCall : EventKind::BuiltinCall;
      e.bindings[temporary_name(seq)] = snap(result);
      Invocation inv;
      inv.callee = n.text;
      for (const auto& a : args) inv.args.push_back(snap(a));
      inv.result = snap(result);
      e.invocation = std::move(inv);
      e.uses = std::move(call_uses);
      e.parent = control();
      emit(std::move(e));
    }
    uses.push_back(Use{temporary_name(seq), seq});
    return result;
  }

  const std::string& text_arg(const AstNode& n, const std::vector<RuntimeValue>& args, std::size_t i) {
    if (i >= args.size()) throw RuntimeFault{n.id, n.text + "() missing argument " + std::to_string(i + 1)};
    if (!args[i].is<std::string>()) type_error(n.id, n.text + "() expects a string argument");
    return args[i].as<std::string>();
  }

  void arity(const AstNode& n, const std::vector<RuntimeValue>& args, std::size_t want) {
    if (args.size() != want)
      throw RuntimeFault{n.id, n.text + "() takes " + std::to_string(want) + " argument(s), got " + std::to_string(args.size())};
  }

  RuntimeValue call_tool(const AstNode& n, const RuntimeValue& receiver, const std::vector<RuntimeValue>& args) {
    if (!receiver.is<Patch>()) type_error(n.id, std::string("'") + receiver.type_name() + "' has no method '" + n.text + "'");
    const Patch& patch = receiver.as<Patch>();
    try {
      if (n.text == "find") {
        arity(n, args, 1);
        ValueList out;
        for (auto& p : tools_.find(patch, text_arg(n, args, 0))) out.emplace_back(std::move(p));
        check_length(out.size(), n.id);
        return RuntimeValue(std::move(out));
      }
      if (n.text == "exists") {
        arity(n, args, 1);
        return RuntimeValue(tools_.exists(patch, text_arg(n, args, 0)));
      }
      if (n.text == "verify_property") {
        arity(n, args, 2);
        return RuntimeValue(tools_.verify_property(patch, text_arg(n, args, 0), text_arg(n, args, 1)));
      }
      if (n.text == "best_text_match") {
        arity(n, args, 1);
        if (!args[0].is<ValueList>()) type_error(n.id, "best_text_match() expects a list of strings");
        std::vector<std::string> options;
        for (const auto& o : args[0].as<ValueList>()) {
          if (!o.is<std::string>()) type_error(n.id, "best_text_match() expects a list of strings");
          options.push_back(o.as<std::string>());
        }
        return RuntimeValue(tools_.best_text_match(patch, options));
      }
      if (n.text == "simple_query") {
        arity(n, args, 1);
        return RuntimeValue(tools_.simple_query(patch, text_arg(n, args, 0)));
      }
      if (n.text == "compute_depth") {
        arity(n, args, 0);
        return RuntimeValue(tools_.compute_depth(patch));
      }
    } catch (const Error& e) {
      throw RuntimeFault{n.id, e.what()};
    }
    throw RuntimeFault{n.id, "patch has no method '" + n.text + "'"};
  }

  RuntimeValue call_builtin(const AstNode& n, const std::vector<RuntimeValue>& args) {
    const std::string& f = n.text;
    if (f == "len") {
      arity(n, args, 1);
      if (args[0].is<ValueList>()) return RuntimeValue(static_cast<std::int64_t>(args[0].as<ValueList>().size()));
      if (args[0].is<std::string>()) return RuntimeValue(static_cast<std::int64_t>(args[0].as<std::string>().size()));
      type_error(n.id, std::string("len() of ") + args[0].type_name());
    }
    if (f == "str") {
      arity(n, args, 1);
      return RuntimeValue(value_str(args[0]));
    }
    if (f == "bool_to_yesno") {
      arity(n, args, 1);
      return RuntimeValue(std::string(truthy(args[0]) ? "yes" : "no"));
    }
    if (f == "abs") {
      arity(n, args, 1);
      if (args[0].is<std::int64_t>()) return RuntimeValue(std::abs(args[0].as<std::int64_t>()));
      if (args[0].is<double>()) return RuntimeValue(std::abs(args[0].as<double>()));
      type_error(n.id, std::string("abs() of ") + args[0].type_name());
    }
    if (f == "int") {
      arity(n, args, 1);
      const auto& v = args[0];
      if (v.is<std::int64_t>()) return v;
      if (v.is<bool>()) return RuntimeValue(std::int64_t{v.as<bool>() ? 1 : 0});
      if (v.is<double>()) {
        if (!std::isfinite(v.as<double>())) throw RuntimeFault{n.id, "int() of non-finite value"};
        return RuntimeValue(static_cast<std::int64_t>(std::trunc(v.as<double>())));
      }
      if (v.is<std::string>()) {
        try {
          std::size_t used = 0;
          const auto parsed = std::stoll(v.as<std::string>(), &used);
          if (used == v.as<std::string>().size()) return RuntimeValue(static_cast<std::int64_t>(parsed));
        } catch (const std::exception&) {
        }
        throw RuntimeFault{n.id, "int() of invalid literal '" + v.as<std::string>() + "'"};
      }
      type_error(n.id, std::string("int() of ") + v.type_name());
    }
    if (f == "distance") {
      arity(n, args, 2);
      if (!args[0].is<Patch>() || !args[1].is<Patch>()) type_error(n.id, "distance() expects two patches");
      return RuntimeValue(patch_distance(args[0].as<Patch>(), args[1].as<Patch>()));
    }
    if (f == "sorted" || f == "min" || f == "max") {
      ValueList items;
      if (args.size() == 1 && args[0].is<ValueList>()) {
        items = args[0].as<ValueList>();
      } else if (f != "sorted" && args.size() >= 2) {
        items = args;
      } else {
        type_error(n.id, f + "() expects a list");
      }
      auto less = [&](const RuntimeValue& a, const RuntimeValue& b) {
        if (is_number(a) && is_number(b)) return as_double(a) < as_double(b);
        if (a.is<std::string>() && b.is<std::string>()) return a.as<std::string>() < b.as<std::string>();
        type_error(n.id, std::string("cannot order ") + a.type_name() + " and " + b.type_name());
      };
      if (f == "sorted") {
        std::stable_sort(items.begin(), items.end(), less);
        return RuntimeValue(std::move(items));
      }
      if (items.empty()) throw RuntimeFault{n.id, f + "() of empty list"};
      return f == "min" ? *std::min_element(items.begin(), items.end(), less)
                        : *std::max_element(items.begin(), items.end(), less);
    }
    throw RuntimeFault{n.id, "name '" + f + "' is not defined"};
  }

  const Ast& ast_;
  const Scene& scene_;
  ToolEnv tools_;
  ExecuteOptions options_;
  ExecutionTrace trace_;
  ExecutionCounts counts_;
  std::map<std::string, Binding> env_;
  std::vector<std::int64_t> control_;
  std::int64_t seq_ = 0;
};

}  // namespace

ExecutionTrace execute(const Ast& ast, const Scene& scene, const ExecuteOptions& options) {
  if (options.limits.max_steps < 1) throw ArgumentError("execute: max_steps must be at least 1");
  return Interpreter(ast, scene, options).run();
}

ExecutionTrace execute(const Ast& ast, const Scene& scene, const StepLimits& limits) {
  ExecuteOptions options;
  options.limits = limits;
  return execute(ast, scene, options);
}

ExecutionCounts count_execution(const Ast& ast, const Scene& scene, const ExecuteOptions& options) {
  ExecuteOptions quiet = options;
  quiet.record = false;
  Interpreter interpreter(ast, scene, quiet);
  interpreter.run();
  return interpreter.counts();
}

// --- serialization ----------------------------------------------------------------

Json trace_to_json(const ExecutionTrace& trace) {
  Json events = Json::array();
  for (const auto& e : trace.events) {
    Json bindings = Json::object();
    for (const auto& [name, value] : e.bindings) bindings[name] = value_to_json(value);
    Json uses = Json::array();
    for (const auto& u : e.uses) uses.push_back(Json::array({u.name, u.seq}));
    Json row{{"seq", e.seq}, {"node_id", e.node_id}, {"kind", event_kind_name(e.kind)}, {"bindings", bindings}};
    if (e.invocation) {
      Json args = Json::array();
      for (const auto& a : e.invocation->args) args.push_back(value_to_json(a));
      row["invocation"] = Json{{"callee", e.invocation->callee}, {"args", args},
                               {"result", value_to_json(e.invocation->result)}};
    } else {
      row["invocation"] = nullptr;
    }
    row["uses"] = uses;
    if (e.parent) row["parent"] = *e.parent;
    if (e.index) row["index"] = *e.index;
    events.push_back(std::move(row));
  }
  Json out{{"program_id", trace.program_id},
           {"query_id", trace.query_id},
           {"status", trace_status_name(trace.status)},
           {"result", trace.result ? value_to_json(*trace.result) : Json(nullptr)}};
  if (trace.status != TraceStatus::Ok) {
    out["error"] = trace.error;
    out["error_node"] = trace.error_node;
  }
  out["events"] = std::move(events);
  return out;
}

ExecutionTrace trace_from_json(const Json& json, const std::string& where) {
  ExecutionTrace trace;
  try {
    trace.program_id = require_string(json, "program_id", where);
    trace.query_id = require_string(json, "query_id", where);
    trace.status = trace_status_from_name(require_string(json, "status", where));
    const Json& result = require_field(json, "result", where);
    if (!result.is_null()) trace.result = value_from_json(result);
    if (auto it = json.find("error"); it != json.end()) trace.error = it->get<std::string>();
    if (auto it = json.find("error_node"); it != json.end()) trace.error_node = it->get<NodeId>();
    for (const auto& row : require_field(json, "events", where)) {
      TraceEvent e;
      e.seq = row.at("seq").get<std::int64_t>();
      e.node_id = row.at("node_id").get<NodeId>();
      e.kind = event_kind_from_name(row.at("kind").get<std::string>());
      for (const auto& [name, value] : row.at("bindings").items()) e.bindings[name] = value_from_json(value);
      const Json& inv = row.at("invocation");
      if (!inv.is_null()) {
        Invocation i;
        i.callee = inv.at("callee").get<std::string>();
        for (const auto& a : inv.at("args")) i.args.push_back(value_from_json(a));
        i.result = value_from_json(inv.at("result"));
        e.invocation = std::move(i);
      }
      for (const auto& u : row.at("uses")) e.uses.push_back(Use{u.at(0).get<std::string>(), u.at(1).get<std::int64_t>()});
      if (auto it = row.find("parent"); it != row.end()) e.parent = it->get<std::int64_t>();
      if (auto it = row.find("index"); it != row.end()) e.index = it->get<std::int64_t>();
      if (e.seq != static_cast<std::int64_t>(trace.events.size()))
        throw SchemaError("events must have consecutive seq numbers");
      trace.events.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw SchemaError(where + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return trace;
}

// --- faithfulness -----------------------------------------------------------------

FilterOutcome check_faithful(const ExecutionTrace& trace, const Query& query) {
  FilterOutcome out;
  if (trace.status == TraceStatus::RuntimeError) {
    out.rejection = RejectReason::RuntimeError;
  } else if (trace.status == TraceStatus::StepLimit) {
    out.rejection = RejectReason::StepLimit;
  } else if (!trace.result ||
             normalize_answer(value_str(*trace.result)) != normalize_answer(query.expected_answer)) {
    out.rejection = RejectReason::WrongAnswer;
  }
  return out;
}

FaithfulnessResult faithfulness_filter(const std::vector<std::pair<const ExecutionTrace*, const Query*>>& items) {
  FaithfulnessResult out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto outcome = check_faithful(*items[i].first, *items[i].second);
    if (outcome.rejection) {
      out.rejected.emplace_back(i, *outcome.rejection);
    } else {
      out.kept.push_back(i);
    }
  }
  return out;
}

}  // namespace fact
