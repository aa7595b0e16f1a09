#include "regen/fsm.hpp"

#include "regen/error.hpp"

namespace regen {

int binding_index(const std::vector<AbstractState>& bindings, const StageRequirement& req) {
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    if (bindings[i].agent == req.first && bindings[i].name == req.second) return static_cast<int>(i);
  }
  return -1;
}

FsmMonitor::FsmMonitor(const TaskFsm& fsm, const std::vector<AbstractState>& bindings) {
  require(!fsm.stages.empty(), "fsm: no stages");
  for (const auto& stage : fsm.stages) {
    std::vector<int> idx;
    for (const auto& req : stage) {
      int i = binding_index(bindings, req);
      require(i >= 0, "fsm: no binding for (" + req.first + ", " + req.second + ")");
      idx.push_back(i);
    }
    stages_.push_back(std::move(idx));
  }
}

bool FsmMonitor::feed(long tick, const std::vector<char>& values) {
  if (done()) return true;
  for (int i : stages_[current_]) {
    if (!values.at(i)) return false;
  }
  log_.push_back(tick);
  ++current_;
  return done();
}

}  // namespace regen
