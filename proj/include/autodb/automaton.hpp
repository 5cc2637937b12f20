#pragma once

// Event-driven automaton with an attached key-value context store.
//
// A machine is a graph of nodes joined by ordered edges. Each edge may consume
// one input token (guarded by a match predicate) or shift without input, and
// carries two event hooks: before_shift, which may veto the transition, and
// after_shift. Reaching a node fires its action. All hooks receive the run's
// ContextStore, so handlers can keep arbitrary state: a stack turns the
// machine into a pushdown automaton, counters and condition objects let it
// interpret loops that never halt. Runs are bounded by a step limit.

#include <any>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <typeinfo>
#include <unordered_map>
#include <utility>
#include <vector>

namespace autodb::automaton {

// ---------------------------------------------------------------------------
// Context store

class StoreError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class MissingKey : public StoreError {
 public:
  explicit MissingKey(std::string_view key)
      : StoreError("context store has no key '" + std::string(key) + "'") {}
};

class StoreTypeError : public StoreError {
 public:
  StoreTypeError(std::string_view key, const std::type_info& wanted)
      : StoreError("context store key '" + std::string(key) + "' does not hold " +
                   wanted.name()) {}
};

class EmptyStack : public StoreError {
 public:
  explicit EmptyStack(std::string_view key)
      : StoreError("pop from empty stack '" + std::string(key) + "'") {}
};

/// String-keyed heterogeneous storage owned by one run.
///
/// Reading an absent key throws MissingKey; there are no silent defaults.
/// Stacks are ordinary entries of type ContextStore::Stack.
class ContextStore {
 public:
  using Stack = std::vector<std::any>;

  template <class T>
  void put(std::string key, T value) {
    entries_[std::move(key)] = std::any(std::move(value));
  }

  bool contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

  void erase(std::string_view key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw MissingKey(key);
    entries_.erase(it);
  }

  template <class T>
  T& get(std::string_view key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw MissingKey(key);
    T* p = std::any_cast<T>(&it->second);
    if (p == nullptr) throw StoreTypeError(key, typeid(T));
    return *p;
  }

  template <class T>
  const T& get(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw MissingKey(key);
    const T* p = std::any_cast<T>(&it->second);
    if (p == nullptr) throw StoreTypeError(key, typeid(T));
    return *p;
  }

  /// Pushes onto the stack at `key`, creating an empty stack first if needed.
  template <class T>
  void push(std::string_view key, T value) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      it = entries_.emplace(std::string(key), std::any(Stack{})).first;
    }
    Stack* s = std::any_cast<Stack>(&it->second);
    if (s == nullptr) throw StoreTypeError(key, typeid(Stack));
    s->emplace_back(std::move(value));
  }

  template <class T>
  T pop(std::string_view key) {
    Stack& s = get<Stack>(key);
    if (s.empty()) throw EmptyStack(key);
    T* top = std::any_cast<T>(&s.back());
    if (top == nullptr) throw StoreTypeError(key, typeid(T));
    T out = std::move(*top);
    s.pop_back();
    return out;
  }

  template <class T>
  T& top(std::string_view key) {
    Stack& s = get<Stack>(key);
    if (s.empty()) throw EmptyStack(key);
    T* p = std::any_cast<T>(&s.back());
    if (p == nullptr) throw StoreTypeError(key, typeid(T));
    return *p;
  }

  std::size_t depth(std::string_view key) const { return get<Stack>(key).size(); }

  std::size_t size() const noexcept { return entries_.size(); }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
  }

 private:
  std::map<std::string, std::any, std::less<>> entries_;
};

// ---------------------------------------------------------------------------
// Graph definition

template <class Token>
struct Node {
  std::string id;
  bool terminal = false;
  // Fired on arrival. The token argument is the one just consumed, or null
  // after a non-consuming shift. The return value of a terminal node's action
  // becomes the run result.
  std::function<std::any(ContextStore&, const Token*)> action;
};

template <class Token>
struct Edge {
  std::string from;
  std::string to;
  bool consumes = true;
  // Null accepts any token.
  std::function<bool(const Token&)> match;
  // Sees the lookahead token (null at end of input). Returning false vetoes
  // the shift; the scan then continues with the next edge.
  std::function<bool(ContextStore&, const Token*)> before_shift;
  // Sees the consumed token, or null for a non-consuming edge.
  std::function<void(ContextStore&, const Token*)> after_shift;
  // Human-readable name of what this edge expects; feeds Reject diagnostics.
  std::string label;
};

// ---------------------------------------------------------------------------
// Errors

class BuildError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DuplicateNodeId : public BuildError {
 public:
  explicit DuplicateNodeId(const std::string& id) : BuildError("duplicate node id '" + id + "'") {}
};

class DanglingEdge : public BuildError {
 public:
  DanglingEdge(const std::string& from, const std::string& to, const std::string& missing)
      : BuildError("edge " + from + " -> " + to + " references unknown node '" + missing + "'") {}
};

class MissingStart : public BuildError {
 public:
  explicit MissingStart(const std::string& id) : BuildError("start node '" + id + "' not defined") {}
};

/// Base for failures during a run. Carries where the run stopped.
class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, std::string node, std::size_t steps, std::size_t consumed)
      : std::runtime_error(what), node_(std::move(node)), steps_(steps), consumed_(consumed) {}

  const std::string& node() const noexcept { return node_; }
  std::size_t steps_taken() const noexcept { return steps_; }
  std::size_t tokens_consumed() const noexcept { return consumed_; }

 private:
  std::string node_;
  std::size_t steps_;
  std::size_t consumed_;
};

class Reject : public RunError {
 public:
  Reject(std::string node, std::size_t steps, std::size_t consumed, std::vector<std::string> expected)
      : RunError("rejected at node '" + node + "' after " + std::to_string(consumed) + " tokens",
                 node, steps, consumed),
        expected_(std::move(expected)) {}

  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::vector<std::string> expected_;
};

class StepLimitExceeded : public RunError {
 public:
  StepLimitExceeded(std::string node, std::size_t steps, std::size_t consumed)
      : RunError("step limit of " + std::to_string(steps) + " exceeded", node, steps, consumed) {}
};

/// An event callback threw. The original exception is kept in cause().
class HandlerError : public RunError {
 public:
  HandlerError(const std::string& what, std::string node, std::size_t steps, std::size_t consumed,
               std::exception_ptr cause)
      : RunError("handler failed: " + what, std::move(node), steps, consumed),
        cause_(std::move(cause)) {}

  const std::exception_ptr& cause() const noexcept { return cause_; }
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

 private:
  std::exception_ptr cause_;
};

// ---------------------------------------------------------------------------
// Running

struct RunResult {
  std::any value;
  std::string final_node;
  std::size_t steps_taken = 0;
  std::size_t tokens_consumed = 0;
};

enum class Event { kBeforeShift, kDenied, kConsume, kAfterShift, kNodeAction };

struct TraceEntry {
  Event event;
  std::string from;
  std::string to;
  std::size_t cursor;  // tokens consumed at the moment of the event
};

struct RunOptions {
  // Overrides the machine's own limit when set.
  std::optional<std::size_t> step_limit;
  std::function<void(const TraceEntry&)> trace;
};

inline constexpr std::size_t kDefaultStepLimit = 1'000'000;

/// An immutable, validated machine. Safe to share across concurrent runs as
/// long as each run has its own ContextStore.
template <class Token>
class Automaton {
 public:
  using NodeT = Node<Token>;
  using EdgeT = Edge<Token>;

  static Automaton build(std::vector<NodeT> nodes, std::vector<EdgeT> edges, std::string start_id,
                         std::size_t step_limit = kDefaultStepLimit) {
    if (step_limit == 0) throw BuildError("step_limit must be positive");
    Automaton a;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!a.index_.emplace(nodes[i].id, i).second) throw DuplicateNodeId(nodes[i].id);
    }
    auto start = a.index_.find(start_id);
    if (start == a.index_.end()) throw MissingStart(start_id);
    a.start_ = start->second;
    a.out_.resize(nodes.size());
    a.edge_to_.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto from = a.index_.find(edges[e].from);
      if (from == a.index_.end()) throw DanglingEdge(edges[e].from, edges[e].to, edges[e].from);
      auto to = a.index_.find(edges[e].to);
      if (to == a.index_.end()) throw DanglingEdge(edges[e].from, edges[e].to, edges[e].to);
      a.out_[from->second].push_back(e);
      a.edge_to_.push_back(to->second);
    }
    a.nodes_ = std::move(nodes);
    a.edges_ = std::move(edges);
    a.step_limit_ = step_limit;
    return a;
  }

  const std::string& start_id() const noexcept { return nodes_[start_].id; }
  std::size_t step_limit() const noexcept { return step_limit_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool has_node(std::string_view id) const { return index_.count(std::string(id)) != 0; }

  /// Runs the machine over `tokens`.
  ///
  /// At the current node the outgoing edges are scanned in registration
  /// order. The first eligible edge whose before_shift allows it is taken:
  /// move, consume (if consuming), after_shift, then the destination's
  /// action. The run halts successfully at a terminal node once input is
  /// exhausted or no edge can be taken; a non-terminal dead end rejects.
  RunResult run(std::span<const Token> tokens, ContextStore& store,
                const RunOptions& options = {}) const {
    const std::size_t limit = options.step_limit.value_or(step_limit_);
    std::size_t current = start_;
    std::size_t cursor = 0;
    std::size_t steps = 0;
    RunResult result;

    auto emit = [&](Event ev, const EdgeT& e) {
      if (options.trace) options.trace(TraceEntry{ev, e.from, e.to, cursor});
    };
    auto guarded = [&](auto&& fn) -> decltype(auto) {
      try {
        return fn();
      } catch (const std::exception& ex) {
        throw HandlerError(ex.what(), nodes_[current].id, steps, cursor, std::current_exception());
      } catch (...) {
        throw HandlerError("unknown exception", nodes_[current].id, steps, cursor,
                           std::current_exception());
      }
    };

    for (;;) {
      const NodeT& node = nodes_[current];
      const Token* lookahead = cursor < tokens.size() ? &tokens[cursor] : nullptr;
      if (node.terminal && lookahead == nullptr) break;

      bool shifted = false;
      for (std::size_t ei : out_[current]) {
        const EdgeT& e = edges_[ei];
        if (e.consumes) {
          if (lookahead == nullptr) continue;
          if (e.match && !guarded([&] { return e.match(*lookahead); })) continue;
        }
        emit(Event::kBeforeShift, e);
        bool allowed = !e.before_shift || guarded([&] { return e.before_shift(store, lookahead); });
        if (!allowed) {
          emit(Event::kDenied, e);
          continue;
        }
        if (steps == limit) throw StepLimitExceeded(node.id, steps, cursor);

        const Token* consumed = nullptr;
        current = edge_to_[ei];
        if (e.consumes) {
          consumed = lookahead;
          ++cursor;
          emit(Event::kConsume, e);
        }
        ++steps;
        if (e.after_shift) {
          guarded([&] { e.after_shift(store, consumed); });
          emit(Event::kAfterShift, e);
        }
        const NodeT& dest = nodes_[current];
        if (dest.action) {
          std::any v = guarded([&] { return dest.action(store, consumed); });
          emit(Event::kNodeAction, e);
          if (dest.terminal) result.value = std::move(v);
        }
        shifted = true;
        break;
      }
      if (!shifted) {
        if (node.terminal) break;
        throw Reject(node.id, steps, cursor, expected_at(current));
      }
    }

    result.final_node = nodes_[current].id;
    result.steps_taken = steps;
    result.tokens_consumed = cursor;
    return result;
  }

 private:
  Automaton() = default;

  std::vector<std::string> expected_at(std::size_t node) const {
    std::vector<std::string> out;
    for (std::size_t ei : out_[node]) {
      const std::string& label = edges_[ei].label;
      if (label.empty()) continue;
      bool seen = false;
      for (const auto& s : out) seen = seen || s == label;
      if (!seen) out.push_back(label);
    }
    return out;
  }

  std::vector<NodeT> nodes_;
  std::vector<EdgeT> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::size_t> edge_to_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t start_ = 0;
  std::size_t step_limit_ = kDefaultStepLimit;
};

/// Accumulates nodes and edges, then validates them into an Automaton.
template <class Token>
class MachineBuilder {
 public:
  using Match = std::function<bool(const Token&)>;
  using Guard = std::function<bool(ContextStore&, const Token*)>;
  using Hook = std::function<void(ContextStore&, const Token*)>;
  using Action = std::function<std::any(ContextStore&, const Token*)>;

  MachineBuilder& node(std::string id, bool terminal = false, Action action = {}) {
    nodes_.push_back(Node<Token>{std::move(id), terminal, std::move(action)});
    return *this;
  }

  MachineBuilder& edge(std::string from, std::string to, Match match, std::string label,
                       Hook after = {}, Guard before = {}) {
    edges_.push_back(Edge<Token>{std::move(from), std::move(to), true, std::move(match),
                                 std::move(before), std::move(after), std::move(label)});
    return *this;
  }

  MachineBuilder& epsilon(std::string from, std::string to, Guard before = {}, Hook after = {},
                          std::string label = {}) {
    edges_.push_back(Edge<Token>{std::move(from), std::move(to), false, {}, std::move(before),
                                 std::move(after), std::move(label)});
    return *this;
  }

  Automaton<Token> build(std::string start_id, std::size_t step_limit = kDefaultStepLimit) && {
    return Automaton<Token>::build(std::move(nodes_), std::move(edges_), std::move(start_id),
                                   step_limit);
  }

 private:
  std::vector<Node<Token>> nodes_;
  std::vector<Edge<Token>> edges_;
};

}  // namespace autodb::automaton
