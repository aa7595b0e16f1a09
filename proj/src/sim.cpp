#include "regen/sim.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <random>

#include "regen/error.hpp"
#include "regen/util.hpp"

namespace regen {

VehicleParams vehicle_params(std::string_view asset_id) {
  if (asset_id == "ambulance") return {2.5, 6.0, 6.0, 2.2, 3.8, false};
  if (asset_id == "truck") return {2.0, 5.0, 8.0, 2.5, 5.0, true};
  if (asset_id == "bicycle") return {1.5, 3.0, 1.8, 0.6, 1.1, false};
  if (asset_id == "pedestrian") return {1.0, 2.0, 0.5, 0.5, 0.5, false};
  if (asset_id == "debris" || asset_id == "box") return {0.0, 0.0, 0.8, 0.8, 0.8, false};
  if (asset_id == "intersection") return {0.0, 0.0, 0.0, 0.0, 1.0, false};
  return {3.0, 6.0, 4.6, 1.9, 2.9, true};  // ego-vehicle, sedan, police car
}

namespace {
constexpr std::pair<Primitive, std::string_view> kPrimitives[] = {
    {Primitive::kStationary, "stationary"},
    {Primitive::kDrivingForward, "driving_forward"},
    {Primitive::kChangeLanes, "change_lanes"},
    {Primitive::kStopAbruptly, "stop_abruptly"},
    {Primitive::kDelayedStart, "delayed_start"},
};
}  // namespace

std::string_view to_string(Primitive p) {
  for (const auto& [k, n] : kPrimitives) {
    if (k == p) return n;
  }
  return "unknown";
}

std::optional<Primitive> parse_primitive(std::string_view text) {
  for (const auto& [k, n] : kPrimitives) {
    if (n == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kAccepted: return "accepted";
    case Verdict::kStalled: return "stalled";
    case Verdict::kCollided: return "collided";
  }
  return "unknown";
}

Actor make_actor(const RoadMap& map, const ActorSpec& spec) {
  Actor a;
  a.name = spec.name;
  a.asset_id = spec.asset_id;
  a.is_ego = spec.is_ego;
  a.limits = vehicle_params(spec.is_ego ? "ego-vehicle" : spec.asset_id);
  a.primitive = spec.primitive;
  a.properties = spec.properties;
  a.delay = spec.delay;

  if (spec.primitive == Primitive::kStationary) {
    auto lp = map.locate(spec.start);
    double heading = lp ? pose_at(lp->lane->centerline, lp->lane->s, lp->proj.s).heading : 0.0;
    a.pose = {spec.start.x, spec.start.y, heading};
  } else {
    auto lp = map.on_lane(spec.start);
    bool walker = spec.asset_id == "pedestrian";
    if (walker || !lp) {
      require(walker, "actor '" + spec.name + "': start is not on a drivable lane");
      // Pedestrians walk a straight line; they need not follow lanes.
      Vec2 d = spec.goal - spec.start;
      double len = norm(d);
      int pieces = std::max(1, static_cast<int>(std::ceil(len / 2.0)));
      for (int k = 0; k <= pieces; ++k) a.route.push_back(spec.start + d * (double(k) / pieces));
    } else {
      double heading = pose_at(lp->lane->centerline, lp->lane->s, lp->proj.s).heading;
      Pose goal{spec.goal.x, spec.goal.y, 0.0};
      a.route = plan_route(map, {spec.start.x, spec.start.y, heading}, goal);
    }
    a.route_s = arc_lengths(a.route);
    Pose p0 = pose_at(a.route, a.route_s, 0.0);
    a.pose = {spec.start.x, spec.start.y, p0.heading};
    a.cruise = spec.speed;
    a.stop_s = a.route_s.back();
    if (spec.stop_at) a.stop_s = std::min(a.stop_s, project_onto(a.route, a.route_s, *spec.stop_at).s);
    a.speed = spec.primitive == Primitive::kDelayedStart ? 0.0 : spec.speed;
  }
  if (a.limits.brake_light && !a.properties.count("brake light")) a.properties["brake light"] = "off";
  // A configured "off" brake light is a pin; anything else is derived.
  auto bl = a.properties.find("brake light");
  if (bl != a.properties.end() && bl->second == "off" && spec.properties.count("brake light")) {
    a.pinned.insert("brake light");
  }
  if (a.asset_id == "intersection" && a.properties.count("traffic light")) a.pinned.insert("traffic light");
  return a;
}

Actor* SimWorld::find(std::string_view name) {
  for (auto& a : actors) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const Actor* SimWorld::find(std::string_view name) const {
  for (const auto& a : actors) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

namespace {

void update_lights(SimWorld& w) {
  double t = w.time();
  for (const auto& tl : w.map->lights) w.lights[tl.id] = tl.state_at(t);
  for (auto& a : w.actors) {
    if (a.asset_id != "intersection") continue;
    const Intersection* in = w.map->intersection_at(a.pose.position());
    if (!in && !w.map->intersections.empty()) in = &w.map->intersections.front();
    if (!in) continue;
    if (a.pinned.count("traffic light")) {
      for (const auto& id : in->traffic_lights) w.lights[id] = a.properties["traffic light"];
    } else if (!in->traffic_lights.empty()) {
      a.properties["traffic light"] = w.lights[in->traffic_lights.front()];
    }
  }
}

}  // namespace

SimWorld make_world(std::shared_ptr<const RoadMap> map, std::vector<Actor> actors, SimParams params) {
  SimWorld w;
  w.map = std::move(map);
  w.params = params;
  w.actors = std::move(actors);
  for (std::size_t i = 0; i < w.actors.size(); ++i) {
    for (std::size_t j = i + 1; j < w.actors.size(); ++j) {
      require(w.actors[i].name != w.actors[j].name, "duplicate actor '" + w.actors[i].name + "'");
    }
  }
  update_lights(w);
  return w;
}

PidCommand pid_step(const Actor& a, const SimParams& p, double t) {
  PidCommand cmd;
  if (a.primitive == Primitive::kStationary || a.route.size() < 2) return cmd;

  // Longitudinal: speed profile that comes to rest at stop_s, plus feedforward.
  double b = a.primitive == Primitive::kStopAbruptly ? p.abrupt_fraction * a.limits.b_max
                                                      : p.comfort_decel;
  double rem = std::max(0.0, a.stop_s - a.progress);
  double profile = std::sqrt(2.0 * b * rem);
  double target = std::min(a.cruise, profile);
  double ff = profile < a.cruise ? -b : 0.0;
  if (a.primitive == Primitive::kDelayedStart && t < a.delay) {
    target = 0.0;
    ff = 0.0;
  }
  double err = target - a.speed;
  cmd.target_speed = target;
  cmd.integral = std::clamp(a.speed_integral + err * p.dt, -5.0, 5.0);
  if (target <= 1e-9 && a.speed <= 1e-9) {
    cmd.accel = 0.0;  // holding at rest
    cmd.integral = 0.0;
  } else {
    cmd.accel = p.kp_speed * err + p.ki_speed * cmd.integral + ff;
    cmd.accel = std::clamp(cmd.accel, -a.limits.b_max, a.limits.a_max);
  }

  // Lateral: heading error towards a lookahead point on the route.
  double ld = std::max(p.lookahead_min, a.speed);
  double along = a.progress + ld;
  Vec2 target_pt;
  if (along <= a.route_s.back()) {
    target_pt = pose_at(a.route, a.route_s, along).position();
  } else {
    Pose end = pose_at(a.route, a.route_s, a.route_s.back());
    target_pt = end.position() + unit_from_heading(end.heading) * (along - a.route_s.back());
  }
  Vec2 d = target_pt - a.pose.position();
  double e = wrap_angle(std::atan2(d.y, d.x) - a.pose.heading);
  cmd.heading_error = e;
  cmd.steer = p.kp_heading * e + p.kd_heading * (e - a.heading_error) / p.dt;
  cmd.steer = std::clamp(cmd.steer, -p.max_steer, p.max_steer);
  return cmd;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Separating-axis test for two oriented rectangles.
bool obb_overlap(const Actor& a, const Actor& b) {
  auto corners = [](const Actor& x) {
    Vec2 u = unit_from_heading(x.pose.heading);
    Vec2 v{-u.y, u.x};
    Vec2 c = x.pose.position();
    double hl = x.limits.length / 2, hw = x.limits.width / 2;
    return std::vector<Vec2>{c + u * hl + v * hw, c + u * hl - v * hw, c - u * hl - v * hw,
                             c - u * hl + v * hw};
  };
  auto ca = corners(a), cb = corners(b);
  for (const Actor* x : {&a, &b}) {
    Vec2 u = unit_from_heading(x->pose.heading);
    for (Vec2 axis : {u, Vec2{-u.y, u.x}}) {
      double amin = INFINITY, amax = -INFINITY, bmin = INFINITY, bmax = -INFINITY;
      for (Vec2 c : ca) amin = std::min(amin, dot(c, axis)), amax = std::max(amax, dot(c, axis));
      for (Vec2 c : cb) bmin = std::min(bmin, dot(c, axis)), bmax = std::max(bmax, dot(c, axis));
      if (amax < bmin || bmax < amin) return false;
    }
  }
  return true;
}

void advance_progress(Actor& a) {
  if (a.route.size() < 2) return;
  std::size_t first = a.route_segment > 2 ? a.route_segment - 2 : 0;
  std::size_t last = std::min(a.route.size() - 1, a.route_segment + 20);
  Projection pr = project_onto(a.route, a.route_s, a.pose.position(), first, last);
  a.route_segment = pr.segment;
  a.progress = std::max(a.progress, pr.s);
}

}  // namespace

void step(SimWorld& w, std::uint64_t seed) {
  const SimParams& p = w.params;
  double t = w.time();
  for (auto& a : w.actors) {
    if (a.primitive == Primitive::kStationary) {
      a.accel_cmd = 0.0;
      a.steer_cmd = 0.0;
      a.speed = 0.0;
    } else {
      PidCommand cmd = pid_step(a, p, t);
      a.accel_cmd = cmd.accel;
      a.steer_cmd = cmd.steer;
      a.speed_integral = cmd.integral;
      a.heading_error = cmd.heading_error;
      a.speed = std::max(0.0, a.speed + cmd.accel * p.dt);
      a.pose.x += a.speed * std::cos(a.pose.heading) * p.dt;
      a.pose.y += a.speed * std::sin(a.pose.heading) * p.dt;
      a.pose.heading = wrap_angle(a.pose.heading +
                                  a.speed / a.limits.wheelbase * std::tan(cmd.steer) * p.dt);
      advance_progress(a);
    }
    a.stopped_count = a.speed <= p.stopped_speed ? a.stopped_count + 1 : 0;
    bool steady = a.cruise > 0 && std::abs(a.speed - a.cruise) <= p.steady_tolerance * a.cruise;
    a.steady_count = steady ? a.steady_count + 1 : 0;
    if (a.properties.count("brake light") && !a.pinned.count("brake light")) {
      a.properties["brake light"] = -a.accel_cmd > p.braking_decel ? "on" : "off";
    }
  }
  ++w.tick;
  update_lights(w);

  for (std::size_t i = 0; i < w.actors.size(); ++i) {
    Actor& a = w.actors[i];
    if (!a.gnss.enabled) continue;
    a.gnss.has_reading = true;
    if (a.gnss.sigma == 0.0) {
      a.gnss.reading = a.pose.position();
      continue;
    }
    std::mt19937_64 rng(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(w.tick) ^ splitmix(i))));
    std::normal_distribution<double> noise(0.0, a.gnss.sigma);
    double nx = noise(rng);
    double ny = noise(rng);
    a.gnss.reading = {a.pose.x + nx, a.pose.y + ny};
  }

  for (std::size_t i = 0; i < w.actors.size(); ++i) {
    for (std::size_t j = i + 1; j < w.actors.size(); ++j) {
      const Actor& a = w.actors[i];
      const Actor& b = w.actors[j];
      bool touching = a.limits.length > 0 && b.limits.length > 0 && obb_overlap(a, b);
      auto key = std::make_pair(i, j);
      if (touching && !w.overlapping.count(key)) w.collisions.push_back({w.tick, a.name, b.name});
      if (touching) {
        w.overlapping.insert(key);
      } else {
        w.overlapping.erase(key);
      }
    }
  }

  Snapshot snap;
  snap.tick = w.tick;
  snap.lights = w.lights;
  for (const auto& a : w.actors) {
    ActorSnapshot s{a.name, a.pose, a.speed, a.accel_cmd, -a.accel_cmd > p.braking_decel,
                    a.properties, std::nullopt};
    if (a.gnss.has_reading) s.gnss = a.gnss.reading;
    snap.actors.push_back(std::move(s));
  }
  w.trace.push_back(std::move(snap));
}

void add_gnss_noise(SimWorld& world, std::string_view actor_name, double sigma) {
  Actor* a = world.find(actor_name);
  require(a != nullptr, "add_gnss_noise: unknown actor '" + std::string(actor_name) + "'");
  require(sigma >= 0.0, "add_gnss_noise: sigma must be non-negative");
  a->gnss.enabled = true;
  a->gnss.sigma = sigma;
}

namespace {

const Actor& agent(const SimWorld& w, const std::string& name) {
  const Actor* a = w.find(name);
  if (!a) fail(ErrorKind::kPrecondition, "predicate: unknown agent '" + name + "'");
  return *a;
}

// Position of a in b's heading frame: (longitudinal gap, lateral offset).
std::pair<double, double> relative(const Actor& a, const Actor& b) {
  Vec2 u = unit_from_heading(b.pose.heading);
  Vec2 rel = a.pose.position() - b.pose.position();
  return {dot(rel, u), cross(u, rel)};
}

}  // namespace

bool eval_predicate(const SimWorld& w, const PredicateCall& call) {
  const PredicateSpec* spec = find_predicate(call.name);
  if (!spec) fail(ErrorKind::kPrecondition, "predicate: unknown predicate '" + call.name + "'");
  if (spec->args.size() != call.args.size()) {
    fail(ErrorKind::kPrecondition, "predicate: wrong arity for '" + call.name + "'");
  }
  const SimParams& p = w.params;
  const Actor& a = agent(w, call.args[0]);
  const std::string& n = call.name;
  if (n == "behind_vehicle") {
    auto [gap, lat] = relative(a, agent(w, call.args[1]));
    return gap < 0 && -gap <= p.behind_max && std::abs(lat) <= p.behind_lateral_lanes * p.lane_width;
  }
  if (n == "right_in_front") {
    auto [gap, lat] = relative(a, agent(w, call.args[1]));
    return gap > 0 && gap <= p.front_max && std::abs(lat) <= p.front_lateral_lanes * p.lane_width;
  }
  if (n == "are_close_by") {
    return distance(a.pose.position(), agent(w, call.args[1]).pose.position()) <= p.close_by;
  }
  if (n == "is_currently_moving") return a.speed > p.moving_speed;
  if (n == "is_currently_stopped") return a.stopped_count >= p.stopped_ticks;
  if (n == "is_braking") return -a.accel_cmd > p.braking_decel;
  if (n == "is_ego_driving_steady") return a.steady_count >= p.steady_ticks;
  if (n == "in_lane") {
    const Lane* lane = w.map->lane(call.args[1]);
    if (!lane) fail(ErrorKind::kPrecondition, "predicate: unknown lane '" + call.args[1] + "'");
    return project_onto(lane->centerline, lane->s, a.pose.position()).distance <= lane->width / 2;
  }
  if (n == "at_intersection") return w.map->intersection_at(a.pose.position()) != nullptr;
  if (n == "property_is") {
    auto it = a.properties.find(call.args[1]);
    return it != a.properties.end() && it->second == call.args[2];
  }
  if (n == "gnss_error_exceeds") {
    double threshold = 0;
    const std::string& s = call.args[1];
    auto r = std::from_chars(s.data(), s.data() + s.size(), threshold);
    if (r.ec != std::errc()) fail(ErrorKind::kPrecondition, "predicate: bad threshold '" + s + "'");
    return a.gnss.has_reading && distance(a.gnss.reading, a.pose.position()) > threshold;
  }
  fail(ErrorKind::kPrecondition, "predicate: '" + n + "' has no evaluator");
}

bool eval_expression(const SimWorld& w, const PredicateExpr& expr) {
  for (const auto& clause : expr.clauses) {
    bool all = true;
    for (const auto& c : clause) {
      if (!eval_predicate(w, c)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

RunResult run(SimWorld world, const TaskFsm& fsm, const std::vector<AbstractState>& bindings,
              long max_ticks, std::uint64_t seed) {
  FsmMonitor monitor(fsm, bindings);
  for (const auto& b : bindings) {
    for (const auto& name : b.expr.agents()) agent(world, name);
  }
  RunResult out;
  for (long k = 0; k < max_ticks; ++k) {
    step(world, seed);
    std::vector<char> values;
    values.reserve(bindings.size());
    for (const auto& b : bindings) values.push_back(eval_expression(world, b.expr));
    out.state_values.push_back(values);
    if (monitor.feed(world.tick, values)) break;
  }
  out.stage_log = monitor.stage_log();
  out.first_unmet_stage = monitor.current_stage();
  out.collisions = world.collisions;
  out.trace = std::move(world.trace);
  if (monitor.done()) {
    out.verdict = Verdict::kAccepted;
  } else {
    out.verdict = out.collisions.empty() ? Verdict::kStalled : Verdict::kCollided;
  }
  return out;
}

std::string trace_csv(const std::vector<Snapshot>& trace, double dt) {
  std::string out = "tick,time,actor,x,y,heading,speed,accel,braking,properties,gnss_x,gnss_y\n";
  for (const auto& snap : trace) {
    for (const auto& a : snap.actors) {
      std::string props;
      for (const auto& [k, v] : a.properties) {
        if (!props.empty()) props += ";";
        props += k + "=" + v;
      }
      out += std::to_string(snap.tick) + "," + format_double(snap.tick * dt) + "," + a.name + "," +
             format_double(a.pose.x) + "," + format_double(a.pose.y) + "," +
             format_double(a.pose.heading) + "," + format_double(a.speed) + "," +
             format_double(a.accel) + "," + (a.braking ? "1" : "0") + ",\"" + props + "\"," +
             (a.gnss ? format_double(a.gnss->x) : "") + "," + (a.gnss ? format_double(a.gnss->y) : "") +
             "\n";
    }
  }
  return out;
}

}  // namespace regen
