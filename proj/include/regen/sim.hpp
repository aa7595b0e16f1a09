#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "regen/fsm.hpp"
#include "regen/geometry.hpp"
#include "regen/predicates.hpp"
#include "regen/road_map.hpp"

namespace regen {

// Every tunable threshold of the simulator and predicate library.
struct SimParams {
  double dt = 0.05;

  double behind_max = 50.0;          // m
  double behind_lateral_lanes = 2.0;  // lane widths
  double front_max = 15.0;           // m
  double front_lateral_lanes = 1.5;  // lane widths
  double close_by = 20.0;            // m, closed bound
  double moving_speed = 0.5;         // m/s, strict
  double stopped_speed = 0.1;        // m/s
  int stopped_ticks = 5;
  double steady_tolerance = 0.1;     // fraction of cruise speed
  int steady_ticks = 10;
  double braking_decel = 0.5;        // m/s^2, strict
  double lane_width = 4.0;

  double kp_speed = 1.0;
  double ki_speed = 0.05;
  double kp_heading = 1.5;
  double kd_heading = 0.1;
  double max_steer = 0.6;  // rad
  double lookahead_min = 8.0;
  double comfort_decel = 3.0;
  double abrupt_fraction = 0.85;  // of b_max
};

struct VehicleParams {
  double a_max = 3.0;
  double b_max = 6.0;
  double length = 4.6;
  double width = 1.9;
  double wheelbase = 2.9;
  bool brake_light = true;
};

VehicleParams vehicle_params(std::string_view asset_id);

enum class Primitive { kStationary, kDrivingForward, kChangeLanes, kStopAbruptly, kDelayedStart };

std::string_view to_string(Primitive p);
std::optional<Primitive> parse_primitive(std::string_view text);

struct GnssState {
  bool enabled = false;
  double sigma = 0.0;
  bool has_reading = false;
  Vec2 reading;
};

struct Actor {
  std::string name;
  std::string asset_id;
  bool is_ego = false;
  Pose pose;
  double speed = 0.0;  // m/s, never negative
  VehicleParams limits;
  Primitive primitive = Primitive::kStationary;

  std::vector<Vec2> route;
  std::vector<double> route_s;
  std::size_t route_segment = 0;
  double progress = 0.0;   // arc length along the route
  double cruise = 0.0;     // m/s
  double stop_s = 0.0;     // arc length where the actor comes to rest
  double delay = 0.0;      // s, delayed_start only

  std::map<std::string, std::string> properties;
  std::set<std::string> pinned;  // properties not derived from the dynamics
  GnssState gnss;

  double accel_cmd = 0.0;
  double steer_cmd = 0.0;
  double speed_integral = 0.0;
  double heading_error = 0.0;
  int stopped_count = 0;
  int steady_count = 0;
};

struct ActorSpec {
  std::string name;
  std::string asset_id;
  Primitive primitive = Primitive::kStationary;
  Vec2 start;
  Vec2 goal;
  double speed = 0.0;  // m/s
  std::optional<Vec2> stop_at;
  double delay = 3.0;
  std::map<std::string, std::string> properties;
  bool is_ego = false;
};

// Plans the route and sets the spawn state. Throws kPrecondition when a
// driving actor cannot be routed.
Actor make_actor(const RoadMap& map, const ActorSpec& spec);

struct Collision {
  long tick = 0;
  std::string a;
  std::string b;
  friend bool operator==(const Collision&, const Collision&) = default;
};

struct ActorSnapshot {
  std::string name;
  Pose pose;
  double speed = 0.0;
  double accel = 0.0;
  bool braking = false;
  std::map<std::string, std::string> properties;
  std::optional<Vec2> gnss;
  friend bool operator==(const ActorSnapshot&, const ActorSnapshot&) = default;
};

struct Snapshot {
  long tick = 0;
  std::vector<ActorSnapshot> actors;
  std::map<std::string, std::string> lights;
  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct SimWorld {
  std::shared_ptr<const RoadMap> map;
  SimParams params;
  std::vector<Actor> actors;
  long tick = 0;
  std::map<std::string, std::string> lights;
  std::vector<Collision> collisions;
  std::set<std::pair<std::size_t, std::size_t>> overlapping;
  std::vector<Snapshot> trace;

  double time() const { return static_cast<double>(tick) * params.dt; }
  Actor* find(std::string_view name);
  const Actor* find(std::string_view name) const;
};

SimWorld make_world(std::shared_ptr<const RoadMap> map, std::vector<Actor> actors,
                    SimParams params = {});

struct PidCommand {
  double accel = 0.0;
  double steer = 0.0;
  double integral = 0.0;
  double heading_error = 0.0;
  double target_speed = 0.0;
};

// Controller output for one tick at time t; does not modify the actor.
PidCommand pid_step(const Actor& actor, const SimParams& params, double t);

// Advances the world one tick and appends a trace snapshot.
void step(SimWorld& world, std::uint64_t seed);

void add_gnss_noise(SimWorld& world, std::string_view actor_name, double sigma);

// Throws kPrecondition for unknown predicates, agents, lanes or bad arity.
bool eval_predicate(const SimWorld& world, const PredicateCall& call);
bool eval_expression(const SimWorld& world, const PredicateExpr& expr);

enum class Verdict { kAccepted, kStalled, kCollided };
std::string_view to_string(Verdict v);

struct RunResult {
  Verdict verdict = Verdict::kStalled;
  std::vector<long> stage_log;  // tick at which each met stage was met
  std::size_t first_unmet_stage = 0;
  // Per tick, truth value of every binding (same order as the bindings).
  std::vector<std::vector<char>> state_values;
  std::vector<Snapshot> trace;
  std::vector<Collision> collisions;
};

// Steps until the terminal stage is met or max_ticks elapse.
RunResult run(SimWorld world, const TaskFsm& fsm, const std::vector<AbstractState>& bindings,
              long max_ticks, std::uint64_t seed);

// One row per (tick, actor): tick,time,actor,x,y,heading,speed,accel,braking,properties,gnss_x,gnss_y
std::string trace_csv(const std::vector<Snapshot>& trace, double dt);

}  // namespace regen
