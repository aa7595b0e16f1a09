// Seeded generators of small scenarios for the randomized cross-checks.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "regen/compiler.hpp"
#include "regen/solver.hpp"

namespace gen {

using namespace regen;

inline AbstractState state(const std::string& agent, const std::string& name, const std::string& expr) {
  return {agent, name, parse_expression(expr, agent)};
}

// Pool of states over the ego and one other actor.
inline std::vector<AbstractState> state_pool(const std::string& actor) {
  return {
      state(actor, "Moving", "is_currently_moving(agent_name)"),
      state(actor, "Stopped", "is_currently_stopped(agent_name)"),
      state(actor, "Ahead", "right_in_front(agent_name, 'ego-vehicle')"),
      state(actor, "Behind", "behind_vehicle(agent_name, 'ego-vehicle')"),
      state(actor, "Close", "are_close_by(agent_name, 'ego-vehicle')"),
      state(actor, "Braking", "is_braking(agent_name)"),
      state(kEgoName, "Steady", "is_ego_driving_steady(agent_name)"),
      state(kEgoName, "Ego Braking", "is_braking(agent_name)"),
      state(kEgoName, "Ego Stopped", "is_currently_stopped(agent_name)"),
      state(kEgoName, "Ego Moving", "is_currently_moving(agent_name)"),
  };
}

inline TaskFsm random_fsm(std::mt19937_64& rng, const std::vector<AbstractState>& pool) {
  TaskFsm fsm;
  std::uniform_int_distribution<int> n_stages(1, 4), n_reqs(1, 2);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  int stages = n_stages(rng);
  for (int k = 0; k < stages; ++k) {
    std::vector<StageRequirement> st;
    int reqs = n_reqs(rng);
    for (int r = 0; r < reqs; ++r) {
      const auto& s = pool[pick(rng)];
      StageRequirement req{s.agent, s.name};
      if (std::find(st.begin(), st.end(), req) == st.end()) st.push_back(req);
    }
    fsm.stages.push_back(st);
  }
  return fsm;
}

inline const char* kPolicies[] = {"driving_forward", "stop_abruptly", "change_lanes", "stationary"};

// One or two sedans on straight_2lane behind or ahead of the ego, with narrow
// regions so the joint candidate space stays small.
inline ScenarioConfig random_config(std::mt19937_64& rng, const std::string& route_id) {
  ScenarioConfig cfg;
  cfg.narrative = "randomized";
  cfg.route_id = route_id;
  cfg.entities.push_back({kEgoName, "agent", kEgoName, {{"action", "drive"}}, {}});
  std::uniform_int_distribution<int> n_actors(1, 2), lo_pick(-8, 12), width(0, 2), span(4, 12), lane(0, 1),
      speed(2, 5), policy(0, 3);
  int actors = n_actors(rng);
  std::vector<AbstractState> pool;
  for (int i = 0; i < actors; ++i) {
    std::string name = "sedan" + std::to_string(i + 1);
    std::string policy_name = kPolicies[policy(rng)];
    cfg.entities.push_back({name, "agent", "sedan", {{"action", policy_name}}, {}});
    bool dynamic = policy_name != std::string("stationary");
    cfg.vehicles.push_back({name, "vehicle.lincoln.mkz_2020", policy_name, dynamic ? "dynamic" : "static"});
    PlacementVar pv;
    pv.name = name;
    double lo = 5.0 * lo_pick(rng);
    Region start{"random start", lane(rng) ? LaneSelector::kAdjacent : LaneSelector::kSame, lo, lo + 5.0 * width(rng)};
    if (dynamic) {
      double end_lo = start.hi + 5.0 * span(rng);
      Region end{"random end", policy_name == std::string("change_lanes") ? LaneSelector::kSame : start.lane, end_lo,
                 end_lo + 5.0 * width(rng)};
      if (policy_name == std::string("change_lanes")) start.lane = LaneSelector::kAdjacent;
      pv.start = start;
      pv.end = end;
      double v = 10.0 * speed(rng);
      pv.speed_lo_kmh = v;
      pv.speed_hi_kmh = v + 10.0 * width(rng);
    } else {
      pv.location = start;
    }
    cfg.placement_vars.push_back(pv);
    for (auto& s : state_pool(name)) {
      if (binding_index(pool, {s.agent, s.name}) < 0) pool.push_back(s);
    }
  }
  cfg.predicates = pool;
  cfg.fsm = random_fsm(rng, pool);
  return cfg;
}

}  // namespace gen
