#include "regen/road_map.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "regen/error.hpp"
#include "regen/util.hpp"

namespace regen {

std::string TrafficLight::state_at(double t) const {
  if (schedule.empty()) return "off";
  double cycle = 0.0;
  for (const auto& ph : schedule) cycle += ph.duration;
  if (schedule.size() == 1 || cycle <= 0.0) return schedule.front().state;
  double u = std::fmod(t + offset, cycle);
  if (u < 0) u += cycle;
  for (const auto& ph : schedule) {
    if (u < ph.duration) return ph.state;
    u -= ph.duration;
  }
  return schedule.back().state;
}

const Lane* RoadMap::lane(std::string_view lane_id) const {
  for (const auto& l : lanes) {
    if (l.id == lane_id) return &l;
  }
  return nullptr;
}

const Intersection* RoadMap::intersection(std::string_view iid) const {
  for (const auto& i : intersections) {
    if (i.id == iid) return &i;
  }
  return nullptr;
}

const TrafficLight* RoadMap::light(std::string_view lid) const {
  for (const auto& l : lights) {
    if (l.id == lid) return &l;
  }
  return nullptr;
}

std::optional<LanePoint> RoadMap::locate(Vec2 p, std::optional<double> heading) const {
  std::optional<LanePoint> best;
  for (const auto& l : lanes) {
    Projection pr = project_onto(l.centerline, l.s, p);
    if (heading) {
      double lane_heading = pose_at(l.centerline, l.s, pr.s).heading;
      if (std::abs(wrap_angle(lane_heading - *heading)) > 1.5707963267948966) continue;
    }
    if (!best || pr.distance < best->proj.distance - 1e-12) best = LanePoint{&l, pr};
  }
  return best;
}

std::optional<LanePoint> RoadMap::on_lane(Vec2 p, std::optional<double> heading) const {
  auto lp = locate(p, heading);
  if (!lp || lp->proj.distance > lp->lane->width / 2 + 1e-9) return std::nullopt;
  return lp;
}

const Intersection* RoadMap::intersection_at(Vec2 p) const {
  for (const auto& i : intersections) {
    if (point_in_polygon(p, i.polygon)) return &i;
  }
  return nullptr;
}

void validate_map(const RoadMap& map) {
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::kValidation, "map '" + map.id + "': " + what);
  };
  std::set<std::string> ids;
  for (const auto& l : map.lanes) {
    if (!ids.insert(l.id).second) bad("duplicate lane '" + l.id + "'");
    if (l.centerline.size() < 2) bad("lane '" + l.id + "': centerline needs two points");
    if (l.width <= 0) bad("lane '" + l.id + "': width must be positive");
  }
  for (const auto& l : map.lanes) {
    for (const auto& succ : l.successors) {
      if (!map.lane(succ)) bad("lane '" + l.id + "': unknown successor '" + succ + "'");
    }
    if (!l.left.empty()) {
      const Lane* n = map.lane(l.left);
      if (!n) bad("lane '" + l.id + "': unknown left neighbor '" + l.left + "'");
      if (n->right != l.id && n->left != l.id) bad("lane '" + l.id + "': adjacency not symmetric");
    }
    if (!l.right.empty()) {
      const Lane* n = map.lane(l.right);
      if (!n) bad("lane '" + l.id + "': unknown right neighbor '" + l.right + "'");
      if (n->left != l.id && n->right != l.id) bad("lane '" + l.id + "': adjacency not symmetric");
    }
  }
  for (const auto& i : map.intersections) {
    if (i.polygon.size() < 3) bad("intersection '" + i.id + "': polygon needs three points");
    for (const auto& in : i.incoming) {
      if (!map.lane(in)) bad("intersection '" + i.id + "': unknown lane '" + in + "'");
    }
    for (const auto& t : i.traffic_lights) {
      const TrafficLight* tl = map.light(t);
      if (!tl) bad("intersection '" + i.id + "': unknown light '" + t + "'");
      if (tl->intersection != i.id) bad("light '" + t + "' attached to another intersection");
    }
  }
  for (const auto& t : map.lights) {
    if (!map.intersection(t.intersection)) bad("light '" + t.id + "': unknown intersection");
  }
}

namespace {

Vec2 parse_point(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(ErrorKind::kParse, where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string opt_string(const Json& j, const char* key) {
  return j.contains(key) && j[key].is_string() ? j[key].get<std::string>() : std::string();
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (j.contains(key)) {
    for (const auto& v : j[key]) out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

RoadMap parse_map(std::string_view text, const std::string& origin) {
  Json doc = parse_json(text, origin);
  RoadMap map;
  try {
    map.id = doc.at("id").get<std::string>();
    for (std::size_t i = 0; i < doc.at("lanes").size(); ++i) {
      const Json& jl = doc["lanes"][i];
      std::string where = origin + ": lanes[" + std::to_string(i) + "]";
      Lane l;
      l.id = jl.at("id").get<std::string>();
      for (std::size_t k = 0; k < jl.at("centerline").size(); ++k) {
        l.centerline.push_back(parse_point(jl["centerline"][k], where + ".centerline"));
      }
      l.width = jl.value("width", 4.0);
      l.left = opt_string(jl, "left");
      l.right = opt_string(jl, "right");
      l.successors = string_list(jl, "successors");
      l.s = arc_lengths(l.centerline);
      map.lanes.push_back(std::move(l));
    }
    if (doc.contains("intersections")) {
      for (const auto& ji : doc["intersections"]) {
        Intersection in;
        in.id = ji.at("id").get<std::string>();
        for (const auto& p : ji.at("polygon")) in.polygon.push_back(parse_point(p, origin + ": polygon"));
        in.incoming = string_list(ji, "incoming");
        in.traffic_lights = string_list(ji, "traffic_lights");
        map.intersections.push_back(std::move(in));
      }
    }
    if (doc.contains("traffic_lights")) {
      for (const auto& jt : doc["traffic_lights"]) {
        TrafficLight t;
        t.id = jt.at("id").get<std::string>();
        t.intersection = jt.at("intersection").get<std::string>();
        t.offset = jt.value("offset", 0.0);
        for (const auto& ph : jt.at("schedule")) {
          t.schedule.push_back({ph.at("state").get<std::string>(), ph.at("duration").get<double>()});
        }
        map.lights.push_back(std::move(t));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, origin + ": malformed map: " + e.what());
  }
  validate_map(map);
  return map;
}

RoadMap load_map(const std::filesystem::path& path) {
  return parse_map(read_file(path), path.string());
}

std::map<std::string, RouteSpec> load_routes(const std::filesystem::path& path) {
  std::string origin = path.string();
  Json doc = load_json(path);
  std::map<std::string, RouteSpec> out;
  try {
    for (const auto& jr : doc.at("routes")) {
      RouteSpec r;
      r.id = jr.at("id").get<std::string>();
      r.map_id = jr.at("map").get<std::string>();
      r.primitive = jr.at("primitive").get<std::string>();
      r.start = parse_point(jr.at("start"), origin + ": " + r.id + ".start");
      r.goal = parse_point(jr.at("goal"), origin + ": " + r.id + ".goal");
      r.cruise_kmh = jr.at("cruise_kmh").get<double>();
      if (jr.contains("stop_at")) r.stop_at = parse_point(jr["stop_at"], origin + ": " + r.id + ".stop_at");
      r.delay_s = jr.value("delay_s", 0.0);
      r.description = jr.value("description", "");
      out.emplace(r.id, std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, origin + ": malformed route library: " + e.what());
  }
  return out;
}

// ---- A* ------------------------------------------------------------------

namespace {

struct StationGraph {
  struct Node {
    int lane;
    double s;
    Vec2 p;
  };
  struct Arc {
    int to;
    double cost;
    bool lane_change;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<Arc>> arcs;
  std::vector<int> first;  // first node index per lane
  std::vector<int> count;  // station count per lane
};

StationGraph build_stations(const RoadMap& map, const RoutePlanOptions& opt) {
  StationGraph g;
  for (std::size_t li = 0; li < map.lanes.size(); ++li) {
    const Lane& l = map.lanes[li];
    int n = static_cast<int>(std::ceil(l.length() / opt.station_spacing - 1e-9)) + 1;
    g.first.push_back(static_cast<int>(g.nodes.size()));
    g.count.push_back(n);
    for (int k = 0; k < n; ++k) {
      double s = std::min(k * opt.station_spacing, l.length());
      Pose p = pose_at(l.centerline, l.s, s);
      g.nodes.push_back({static_cast<int>(li), s, p.position()});
    }
  }
  g.arcs.resize(g.nodes.size());
  auto lane_index = [&](const std::string& id) {
    for (std::size_t i = 0; i < map.lanes.size(); ++i) {
      if (map.lanes[i].id == id) return static_cast<int>(i);
    }
    return -1;
  };
  for (std::size_t li = 0; li < map.lanes.size(); ++li) {
    const Lane& l = map.lanes[li];
    int f = g.first[li], n = g.count[li];
    for (int k = 0; k + 1 < n; ++k) {
      g.arcs[f + k].push_back({f + k + 1, g.nodes[f + k + 1].s - g.nodes[f + k].s, false});
    }
    for (const auto& succ : l.successors) {
      int si = lane_index(succ);
      int to = g.first[si];
      g.arcs[f + n - 1].push_back({to, distance(g.nodes[f + n - 1].p, g.nodes[to].p), false});
    }
    for (const std::string* nb : {&l.left, &l.right}) {
      if (nb->empty()) continue;
      int ni = lane_index(*nb);
      const Lane& other = map.lanes[ni];
      for (int k = 0; k < n; ++k) {
        const auto& node = g.nodes[f + k];
        double h = pose_at(l.centerline, l.s, node.s).heading;
        Projection pr = project_onto(other.centerline, other.s, node.p);
        double oh = pose_at(other.centerline, other.s, pr.s).heading;
        if (std::abs(wrap_angle(h - oh)) > 0.5) continue;  // opposing traffic
        double target = pr.s + opt.lane_change_length;
        if (target > other.length()) continue;
        int tk = static_cast<int>(std::ceil(target / opt.station_spacing - 1e-9));
        int to = g.first[ni] + std::min(tk, g.count[ni] - 1);
        g.arcs[f + k].push_back({to, distance(node.p, g.nodes[to].p) + opt.lane_change_penalty, true});
      }
    }
  }
  return g;
}

}  // namespace

RoutePlan plan_route_detailed(const RoadMap& map, const Pose& start, const Pose& goal,
                              const RoutePlanOptions& opt) {
  auto sp = map.on_lane(start.position(), start.heading);
  require(sp.has_value(), "plan_route: start is not on a drivable lane");
  auto gp = map.on_lane(goal.position());
  require(gp.has_value(), "plan_route: goal is not on a drivable lane");

  StationGraph g = build_stations(map, opt);
  int sl = static_cast<int>(sp->lane - map.lanes.data());
  int gl = static_cast<int>(gp->lane - map.lanes.data());
  int n = static_cast<int>(g.nodes.size());
  int start_node = n, goal_node = n + 1;
  g.nodes.push_back({sl, sp->proj.s, start.position()});
  g.nodes.push_back({gl, gp->proj.s, goal.position()});
  g.arcs.resize(n + 2);

  int sk = static_cast<int>(std::ceil(sp->proj.s / opt.station_spacing - 1e-9));
  sk = std::min(sk, g.count[sl] - 1);
  g.arcs[start_node].push_back({g.first[sl] + sk, g.nodes[g.first[sl] + sk].s - sp->proj.s, false});
  int gk = static_cast<int>(std::floor(gp->proj.s / opt.station_spacing + 1e-9));
  gk = std::min(gk, g.count[gl] - 1);
  g.arcs[g.first[gl] + gk].push_back({goal_node, gp->proj.s - g.nodes[g.first[gl] + gk].s, false});
  if (sl == gl && gp->proj.s >= sp->proj.s) {
    g.arcs[start_node].push_back({goal_node, gp->proj.s - sp->proj.s, false});
  }

  std::vector<double> dist(n + 2, INFINITY);
  std::vector<int> prev(n + 2, -1);
  std::vector<char> prev_lc(n + 2, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  auto h = [&](int v) { return distance(g.nodes[v].p, goal.position()); };
  dist[start_node] = 0.0;
  open.push({h(start_node), start_node});
  while (!open.empty()) {
    auto [f, v] = open.top();
    open.pop();
    if (v == goal_node) break;
    if (f > dist[v] + h(v) + 1e-12) continue;
    for (const auto& a : g.arcs[v]) {
      double nd = dist[v] + a.cost;
      if (nd < dist[a.to] - 1e-12) {
        dist[a.to] = nd;
        prev[a.to] = v;
        prev_lc[a.to] = a.lane_change;
        open.push({nd + h(a.to), a.to});
      }
    }
  }
  if (!std::isfinite(dist[goal_node])) fail(ErrorKind::kInfeasible, "plan_route: no path from start to goal");

  RoutePlan plan;
  plan.cost = dist[goal_node];
  std::vector<int> chain;
  for (int v = goal_node; v != -1; v = prev[v]) chain.push_back(v);
  std::reverse(chain.begin(), chain.end());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    int v = chain[i];
    if (prev_lc[v]) ++plan.lane_changes;
    const std::string& lid = map.lanes[g.nodes[v].lane].id;
    if (plan.lane_sequence.empty() || plan.lane_sequence.back() != lid) plan.lane_sequence.push_back(lid);
    Vec2 p = g.nodes[v].p;
    if (!plan.waypoints.empty()) {
      Vec2 q = plan.waypoints.back();
      double d = distance(p, q);
      if (d < 1e-9) continue;
      int pieces = static_cast<int>(std::ceil(d / opt.station_spacing - 1e-9));
      for (int k = 1; k < pieces; ++k) plan.waypoints.push_back(q + (p - q) * (double(k) / pieces));
    }
    plan.waypoints.push_back(p);
  }
  return plan;
}

std::vector<Vec2> plan_route(const RoadMap& map, const Pose& start, const Pose& goal,
                             const RoutePlanOptions& options) {
  return plan_route_detailed(map, start, goal, options).waypoints;
}

// ---- lane chains ---------------------------------------------------------

std::optional<LanePoint> advance_along(const RoadMap& map, const Lane& lane, double s, double offset) {
  const Lane* cur = &lane;
  double at = s + offset;
  for (int guard = 0; guard < 64; ++guard) {
    if (at >= 0.0 && at <= cur->length()) {
      Pose p = pose_at(cur->centerline, cur->s, at);
      LanePoint lp{cur, {}};
      lp.proj.s = at;
      lp.proj.point = p.position();
      return lp;
    }
    double here = pose_at(cur->centerline, cur->s, at < 0 ? 0.0 : cur->length()).heading;
    const Lane* next = nullptr;
    double best = INFINITY;
    if (at > cur->length()) {
      for (const auto& succ : cur->successors) {
        const Lane* l = map.lane(succ);
        double turn = std::abs(wrap_angle(pose_at(l->centerline, l->s, 0.0).heading - here));
        if (turn < best) best = turn, next = l;
      }
      if (!next) return std::nullopt;
      at -= cur->length();
    } else {
      for (const auto& l : map.lanes) {
        if (std::find(l.successors.begin(), l.successors.end(), cur->id) == l.successors.end()) continue;
        double turn = std::abs(wrap_angle(pose_at(l.centerline, l.s, l.length()).heading - here));
        if (turn < best) best = turn, next = &l;
      }
      if (!next) return std::nullopt;
      at += next->length();
    }
    cur = next;
  }
  return std::nullopt;
}

}  // namespace regen
