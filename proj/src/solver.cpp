#include "regen/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <queue>
#include <set>
#include <tuple>

#include "regen/error.hpp"

namespace regen {

ScenarioContext load_context(const std::filesystem::path& maps_dir, const std::string& route_id) {
  auto routes = load_routes(maps_dir / "routes.json");
  auto it = routes.find(route_id);
  if (it == routes.end()) fail(ErrorKind::kPrecondition, "unknown route '" + route_id + "'");
  ScenarioContext ctx;
  ctx.route = it->second;
  ctx.map = std::make_shared<const RoadMap>(load_map(maps_dir / (ctx.route.map_id + ".json")));
  return ctx;
}

SimWorld build_world(const ScenarioConfig& config, const ScenarioContext& ctx,
                     const Assignments& assignments, const WorldOptions& options) {
  const RoadMap& map = *ctx.map;
  std::vector<Actor> actors;
  const RouteSpec& r = ctx.route;
  auto ego_primitive = parse_primitive(r.primitive);
  require(ego_primitive.has_value(), "route '" + r.id + "': unknown primitive '" + r.primitive + "'");
  ActorSpec ego;
  ego.name = kEgoName;
  ego.asset_id = kEgoName;
  ego.is_ego = true;
  ego.primitive = *ego_primitive;
  ego.start = r.start;
  ego.goal = r.goal;
  ego.speed = r.cruise_kmh / 3.6;
  ego.stop_at = r.stop_at;
  if (r.delay_s > 0) ego.delay = r.delay_s;
  if (const ConfigEntity* e = config.entity(kEgoName)) ego.properties = e->static_properties;
  actors.push_back(make_actor(map, ego));

  for (const auto& v : config.vehicles) {
    const ConfigEntity* e = config.entity(v.name);
    require(e != nullptr, "vehicle '" + v.name + "' has no entity");
    auto prim = parse_primitive(v.driving_policy);
    require(prim.has_value(), "vehicle '" + v.name + "': unknown driving policy '" + v.driving_policy + "'");
    ActorSpec spec;
    spec.name = v.name;
    spec.asset_id = e->entity_name;
    spec.primitive = *prim;
    spec.properties = e->static_properties;
    auto it = assignments.find(v.name);
    if (it != assignments.end()) {
      const Assignment& a = it->second;
      spec.start = {a.x0, a.y0};
      spec.goal = {a.xT, a.yT};
      spec.speed = a.speed;
    } else if (e->entity_name == "intersection" && !map.intersections.empty()) {
      Vec2 c;
      const auto& poly = map.intersections.front().polygon;
      for (Vec2 p : poly) c = c + p * (1.0 / poly.size());
      spec.start = spec.goal = c;
      spec.primitive = Primitive::kStationary;
    } else {
      fail(ErrorKind::kPrecondition, "vehicle '" + v.name + "': no assignment");
    }
    actors.push_back(make_actor(map, spec));
  }
  SimWorld world = make_world(ctx.map, std::move(actors), options.params);
  for (const auto& [name, sigma] : options.gnss_sigma) add_gnss_noise(world, name, sigma);
  return world;
}

RunResult verify_assignment(const ScenarioConfig& config, const ScenarioContext& ctx,
                            const Assignments& assignments, long max_ticks, std::uint64_t seed,
                            const WorldOptions& options) {
  return run(build_world(config, ctx, assignments, options), config.fsm, config.predicates, max_ticks, seed);
}

double along_road_offset(const RoadMap& map, const EgoAnchor& anchor, Vec2 p) {
  (void)map;
  const Lane& lane = *anchor.lane;
  Projection pr = project_onto(lane.centerline, lane.s, p);
  bool clamped = pr.s <= 1e-9 || pr.s >= lane.length() - 1e-9;
  if (clamped) {
    Pose at = pose_at(lane.centerline, lane.s, anchor.s);
    double d = distance(at.position(), p);
    return dot(p - at.position(), unit_from_heading(at.heading)) < 0 ? -d : d;
  }
  return pr.s - anchor.s;
}

bool min_spawn_gap_check(const std::vector<Vec2>& dynamic_spawns, const RoadMap& map,
                         const EgoAnchor& anchor, double gap_min) {
  for (Vec2 p : dynamic_spawns) {
    if (std::abs(along_road_offset(map, anchor, p)) < gap_min) return false;
  }
  return true;
}

std::vector<EntityCandidate> entity_candidates(const PlacementVar& var, const RoadMap& map,
                                               const EgoAnchor& anchor, const SearchOptions& opt) {
  std::vector<EntityCandidate> out;
  if (!var.dynamic()) {
    require(var.location.has_value(), "placement '" + var.name + "': no location region");
    for (const auto& c : region_candidates(map, anchor, *var.location, opt.grid_step)) {
      EntityCandidate ec;
      ec.assignment = {c.pose.x, c.pose.y, c.pose.x, c.pose.y, 0.0};
      ec.start_offset = ec.end_offset = c.offset;
      ec.score = std::abs(c.offset - var.location->center());
      out.push_back(ec);
    }
  } else {
    require(var.end.has_value(), "placement '" + var.name + "': no end region");
    require(opt.speed_step > 0, "speed_step must be positive");
    auto starts = region_candidates(map, anchor, *var.start, opt.grid_step);
    auto ends = region_candidates(map, anchor, *var.end, opt.grid_step);
    std::vector<double> speeds;  // km/h
    double step_kmh = opt.speed_step * 3.6;
    int n = static_cast<int>(std::floor((var.speed_hi_kmh - var.speed_lo_kmh) / step_kmh + 1e-9));
    for (int k = 0; k <= n; ++k) speeds.push_back(var.speed_lo_kmh + k * step_kmh);
    double speed_center = (var.speed_lo_kmh + var.speed_hi_kmh) / 2 / 3.6;
    for (const auto& s : starts) {
      for (const auto& e : ends) {
        if (e.offset <= s.offset) continue;
        for (double kmh : speeds) {
          EntityCandidate ec;
          ec.assignment = {s.pose.x, s.pose.y, e.pose.x, e.pose.y, kmh / 3.6};
          ec.start_offset = s.offset;
          ec.end_offset = e.offset;
          ec.score = std::abs(s.offset - var.start->center()) + std::abs(e.offset - var.end->center()) +
                     std::abs(kmh / 3.6 - speed_center);
          out.push_back(ec);
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const EntityCandidate& a, const EntityCandidate& b) {
    const Assignment& x = a.assignment;
    const Assignment& y = b.assignment;
    return std::tie(a.score, x.x0, x.y0, x.xT, x.yT, x.speed) <
           std::tie(b.score, y.x0, y.y0, y.xT, y.yT, y.speed);
  });
  return out;
}

namespace {

// Lazily yields index tuples in order of (total score, tuple).
class JointEnumerator {
 public:
  explicit JointEnumerator(const std::vector<std::vector<EntityCandidate>>& lists) : lists_(lists) {
    for (const auto& l : lists_) {
      if (l.empty()) return;
    }
    push(std::vector<std::size_t>(lists_.size(), 0));
  }

  bool next(std::vector<std::size_t>& out) {
    if (open_.empty()) return false;
    out = open_.top().second;
    open_.pop();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i] + 1 < lists_[i].size()) {
        auto t = out;
        ++t[i];
        push(t);
      }
    }
    return true;
  }

 private:
  void push(const std::vector<std::size_t>& t) {
    if (!seen_.insert(t).second) return;
    double total = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) total += lists_[i][t[i]].score;
    open_.push({total, t});
  }

  using Item = std::pair<double, std::vector<std::size_t>>;
  const std::vector<std::vector<EntityCandidate>>& lists_;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open_;
  std::set<std::vector<std::size_t>> seen_;
};

}  // namespace

std::vector<std::vector<std::size_t>> joint_order(const std::vector<std::vector<EntityCandidate>>& lists,
                                                  std::size_t limit) {
  JointEnumerator en(lists);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> t;
  while (out.size() < limit && en.next(t)) out.push_back(t);
  return out;
}

ConcreteScenario solve_placement(const ScenarioConfig& config, const ScenarioContext& ctx,
                                 const SearchOptions& search, const WorldOptions& options) {
  require(search.grid_step > 0, "grid_step must be positive");
  require(search.max_candidates >= 1, "max_candidates must be at least 1");
  const RoadMap& map = *ctx.map;
  EgoAnchor anchor = anchor_for(map, ctx.route.start);

  std::vector<const PlacementVar*> vars;
  std::vector<std::vector<EntityCandidate>> lists;
  for (const auto& pv : config.placement_vars) {
    auto cands = entity_candidates(pv, map, anchor, search);
    if (cands.empty()) {
      fail(ErrorKind::kInfeasible, "placement '" + pv.name + "': region has no on-map candidates");
    }
    vars.push_back(&pv);
    lists.push_back(std::move(cands));
  }

  ConcreteScenario out;
  out.config = config;
  auto assemble = [&](const std::vector<std::size_t>& t) {
    Assignments a;
    for (std::size_t i = 0; i < vars.size(); ++i) a[vars[i]->name] = lists[i][t[i]].assignment;
    return a;
  };
  auto statically_ok = [&](const std::vector<std::size_t>& t) {
    std::vector<Vec2> spawns;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i]->dynamic()) spawns.push_back({lists[i][t[i]].assignment.x0, lists[i][t[i]].assignment.y0});
    }
    return min_spawn_gap_check(spawns, map, anchor, search.gap_min);
  };

  JointEnumerator en(lists);
  bool have_best = false;
  std::size_t jobs = static_cast<std::size_t>(std::max(1, search.jobs));
  std::vector<std::size_t> t;
  bool exhausted = false;
  while (!exhausted && out.candidates_evaluated < search.max_candidates) {
    std::vector<Assignments> batch;
    while (batch.size() < jobs && out.candidates_evaluated + batch.size() < search.max_candidates) {
      if (!en.next(t)) {
        exhausted = true;
        break;
      }
      if (statically_ok(t)) batch.push_back(assemble(t));
    }
    if (batch.empty()) break;
    // An unroutable candidate (e.g. a lane change too short to plan) is
    // rejected like a failed rollout.
    auto rollout = [&](const Assignments& a) -> std::optional<RunResult> {
      try {
        return verify_assignment(config, ctx, a, search.max_ticks, search.seed, options);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasible) throw;
        return std::nullopt;
      }
    };
    std::vector<std::optional<RunResult>> results(batch.size());
    if (batch.size() == 1) {
      results[0] = rollout(batch[0]);
    } else {
      std::vector<std::future<std::optional<RunResult>>> futures;
      for (const auto& a : batch) {
        futures.push_back(std::async(std::launch::async, [&, a] { return rollout(a); }));
      }
      for (std::size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
    }
    // Results are consumed in candidate order, independent of completion order.
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ++out.candidates_evaluated;
      if (!results[i]) continue;
      RunResult& r = *results[i];
      if (r.verdict == Verdict::kAccepted) {
        out.feasible = true;
        out.assignments = batch[i];
        out.first_unmet_stage = r.first_unmet_stage;
        out.witness = std::move(r);
        return out;
      }
      if (!have_best || r.first_unmet_stage > out.first_unmet_stage) {
        have_best = true;
        out.assignments = batch[i];
        out.first_unmet_stage = r.first_unmet_stage;
        out.witness = std::move(r);
      }
    }
  }
  if (!have_best && lists.empty()) {
    // No placement variables: the ego alone decides the verdict.
    out.witness = verify_assignment(config, ctx, {}, search.max_ticks, search.seed, options);
    out.candidates_evaluated = 1;
    out.feasible = out.witness.verdict == Verdict::kAccepted;
    out.first_unmet_stage = out.witness.first_unmet_stage;
  }
  return out;
}

Json concrete_to_json(const ConcreteScenario& s) {
  Json j = Json::object();
  j["config"] = config_to_json(s.config);
  j["feasible"] = s.feasible;
  j["verdict"] = std::string(to_string(s.witness.verdict));
  j["first_unmet_stage"] = s.first_unmet_stage;
  j["stage_log"] = s.witness.stage_log;
  j["candidates_evaluated"] = s.candidates_evaluated;
  Json a = Json::object();
  for (const auto& [name, v] : s.assignments) {
    a[name] = Json{{"start", {{"x", v.x0}, {"y", v.y0}}},
                   {"end", {{"x", v.xT}, {"y", v.yT}}},
                   {"speed", v.speed},
                   {"speed_kmh", v.speed * 3.6}};
  }
  j["assignments"] = std::move(a);
  j["collisions"] = Json::array();
  for (const auto& c : s.witness.collisions) {
    j["collisions"].push_back(Json{{"tick", c.tick}, {"a", c.a}, {"b", c.b}});
  }
  return j;
}

}  // namespace regen
