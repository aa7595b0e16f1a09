#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "regen/compiler.hpp"
#include "regen/placement.hpp"
#include "regen/road_map.hpp"
#include "regen/sim.hpp"

namespace regen {

// Concrete placement of one actor. Speed is in m/s.
struct Assignment {
  double x0 = 0.0;
  double y0 = 0.0;
  double xT = 0.0;
  double yT = 0.0;
  double speed = 0.0;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

using Assignments = std::map<std::string, Assignment>;

struct SearchOptions {
  double grid_step = 5.0;          // m
  double speed_step = 10.0 / 3.6;  // m/s
  std::size_t max_candidates = 2000;  // rollouts
  std::uint64_t seed = 0;
  double gap_min = 8.0;  // m
  long max_ticks = 600;
  int jobs = 1;
};

struct WorldOptions {
  SimParams params;
  std::map<std::string, double> gnss_sigma;  // actor -> sigma (m)
};

// Map and ego route a config is realized on.
struct ScenarioContext {
  std::shared_ptr<const RoadMap> map;
  RouteSpec route;
};

// Reads <maps_dir>/routes.json and the map the route names.
ScenarioContext load_context(const std::filesystem::path& maps_dir, const std::string& route_id);

struct ConcreteScenario {
  ScenarioConfig config;
  Assignments assignments;
  bool feasible = false;
  RunResult witness;  // rollout of the returned assignment
  std::size_t first_unmet_stage = 0;
  std::size_t candidates_evaluated = 0;
};

// Actor set, bindings and FSM for one assignment.
SimWorld build_world(const ScenarioConfig& config, const ScenarioContext& ctx,
                     const Assignments& assignments, const WorldOptions& options = {});

RunResult verify_assignment(const ScenarioConfig& config, const ScenarioContext& ctx,
                            const Assignments& assignments, long max_ticks, std::uint64_t seed,
                            const WorldOptions& options = {});

// Signed distance along the ego lane from the ego spawn; Euclidean distance
// when p does not project inside the lane.
double along_road_offset(const RoadMap& map, const EgoAnchor& anchor, Vec2 p);

// True iff every spawn is at least gap_min meters from the ego spawn along the
// road (closed bound).
bool min_spawn_gap_check(const std::vector<Vec2>& dynamic_spawns, const RoadMap& map,
                         const EgoAnchor& anchor, double gap_min);

struct EntityCandidate {
  Assignment assignment;
  double start_offset = 0.0;
  double end_offset = 0.0;
  double score = 0.0;
};

// Sorted candidate list of one placement variable: score is the distance to
// the region centers (offsets in m, speed in m/s); ties by (x0, y0, xT, yT,
// speed). Dynamic candidates must end ahead of where they start.
std::vector<EntityCandidate> entity_candidates(const PlacementVar& var, const RoadMap& map,
                                               const EgoAnchor& anchor, const SearchOptions& options);

// Joint candidates in non-decreasing total score; the first `limit` of them.
std::vector<std::vector<std::size_t>> joint_order(const std::vector<std::vector<EntityCandidate>>& lists,
                                                  std::size_t limit);

ConcreteScenario solve_placement(const ScenarioConfig& config, const ScenarioContext& ctx,
                                 const SearchOptions& search, const WorldOptions& options = {});

Json concrete_to_json(const ConcreteScenario& scenario);

}  // namespace regen
