#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regen/geometry.hpp"

namespace regen {

struct Lane {
  std::string id;
  std::vector<Vec2> centerline;
  double width = 4.0;
  std::string left;   // adjacent lane id, empty when none
  std::string right;
  std::vector<std::string> successors;

  std::vector<double> s;  // cumulative arc length, filled by the loader
  double length() const { return s.empty() ? 0.0 : s.back(); }
};

struct LightPhase {
  std::string state;  // red, green, yellow, off
  double duration = 0.0;
};

struct TrafficLight {
  std::string id;
  std::string intersection;
  std::vector<LightPhase> schedule;  // cyclic; a single phase means constant
  double offset = 0.0;

  std::string state_at(double t) const;
};

struct Intersection {
  std::string id;
  std::vector<Vec2> polygon;
  std::vector<std::string> incoming;
  std::vector<std::string> traffic_lights;
};

struct LanePoint {
  const Lane* lane = nullptr;
  Projection proj;
};

class RoadMap {
 public:
  std::string id;
  std::vector<Lane> lanes;
  std::vector<Intersection> intersections;
  std::vector<TrafficLight> lights;

  const Lane* lane(std::string_view lane_id) const;
  const Intersection* intersection(std::string_view iid) const;
  const TrafficLight* light(std::string_view lid) const;

  // Closest lane to p. When heading is given, lanes whose direction at the
  // foot point differs by more than 90 degrees are skipped.
  std::optional<LanePoint> locate(Vec2 p, std::optional<double> heading = std::nullopt) const;
  // Like locate but requires p to lie within half a lane width of the lane.
  std::optional<LanePoint> on_lane(Vec2 p, std::optional<double> heading = std::nullopt) const;

  // Intersection whose polygon contains p, if any.
  const Intersection* intersection_at(Vec2 p) const;
};

// Throws kValidation on broken references or asymmetric adjacency.
void validate_map(const RoadMap& map);
RoadMap parse_map(std::string_view text, const std::string& origin);
RoadMap load_map(const std::filesystem::path& path);

// Ego route presets: the behavior trajectory the scenario is conditioned on.
struct RouteSpec {
  std::string id;
  std::string map_id;
  std::string primitive;  // driving_forward, stop_abruptly, change_lanes, delayed_start
  Vec2 start;
  Vec2 goal;
  double cruise_kmh = 30.0;
  std::optional<Vec2> stop_at;  // stop_abruptly only
  double delay_s = 0.0;         // delayed_start only
  std::string description;
};

std::map<std::string, RouteSpec> load_routes(const std::filesystem::path& path);

struct RoutePlanOptions {
  double station_spacing = 2.0;
  double lane_change_length = 12.0;
  double lane_change_penalty = 6.0;
};

// A* over lane stations; lane changes only between same-direction neighbors.
// Returns waypoints from start to goal with spacing <= station_spacing.
// Throws kPrecondition when start or goal is off the drivable area or no path
// exists.
std::vector<Vec2> plan_route(const RoadMap& map, const Pose& start, const Pose& goal,
                             const RoutePlanOptions& options = {});

struct RoutePlan {
  std::vector<Vec2> waypoints;
  std::vector<std::string> lane_sequence;  // lane id per traversed arc run
  int lane_changes = 0;
  double cost = 0.0;
};
RoutePlan plan_route_detailed(const RoadMap& map, const Pose& start, const Pose& goal,
                              const RoutePlanOptions& options = {});

// Walks `offset` meters along the lane chain starting at (lane, s), choosing the
// straightest successor at lane ends (negative offsets walk predecessors).
// Empty when the walk leaves the map.
std::optional<LanePoint> advance_along(const RoadMap& map, const Lane& lane, double s, double offset);

}  // namespace regen
