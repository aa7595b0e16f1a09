#pragma once

#include <string>
#include <utility>
#include <vector>

#include "regen/predicates.hpp"

namespace regen {

// A named predicate expression over one agent (a Low-Level State Translator
// binding).
struct AbstractState {
  std::string agent;
  std::string name;
  PredicateExpr expr;
  friend bool operator==(const AbstractState&, const AbstractState&) = default;
};

using StageRequirement = std::pair<std::string, std::string>;  // (agent, state)

struct TaskFsm {
  std::vector<std::vector<StageRequirement>> stages;
  std::size_t terminal_stage_index() const { return stages.empty() ? 0 : stages.size() - 1; }
  friend bool operator==(const TaskFsm&, const TaskFsm&) = default;
};

// Index of the binding for (agent, state), or -1.
int binding_index(const std::vector<AbstractState>& bindings, const StageRequirement& req);

// Stage-advance rule over per-tick truth values of the bindings. A stage is met
// on the first tick (strictly after the previous stage's tick) where all its
// requirements hold together; at most one stage advances per tick.
class FsmMonitor {
 public:
  // Throws kPrecondition if a requirement has no binding or the FSM is empty.
  FsmMonitor(const TaskFsm& fsm, const std::vector<AbstractState>& bindings);

  // Feeds one tick; returns true once the terminal stage has been met.
  bool feed(long tick, const std::vector<char>& values);

  bool done() const { return current_ >= stages_.size(); }
  std::size_t current_stage() const { return current_; }
  const std::vector<long>& stage_log() const { return log_; }

 private:
  std::vector<std::vector<int>> stages_;
  std::size_t current_ = 0;
  std::vector<long> log_;
};

}  // namespace regen
