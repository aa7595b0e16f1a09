#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "doctest.h"
#include "regen/error.hpp"
#include "regen/pipeline.hpp"
#include "regen/sim.hpp"

using namespace regen;

namespace {

std::shared_ptr<const RoadMap> straight() {
  return std::make_shared<const RoadMap>(load_map(data_dir() / "maps" / "straight_2lane.json"));
}

Actor driver(const RoadMap& map, const std::string& name, Vec2 start, Vec2 goal, double speed, bool ego = false) {
  ActorSpec s;
  s.name = name;
  s.asset_id = ego ? "ego-vehicle" : "sedan";
  s.primitive = Primitive::kDrivingForward;
  s.start = start;
  s.goal = goal;
  s.speed = speed;
  s.is_ego = ego;
  return make_actor(map, s);
}

Actor parked(const RoadMap& map, const std::string& name, Vec2 at) {
  ActorSpec s;
  s.name = name;
  s.asset_id = "sedan";
  s.start = at;
  return make_actor(map, s);
}

bool holds(const SimWorld& w, const std::string& expr, const std::string& self) {
  return eval_expression(w, parse_expression(expr, self));
}

}  // namespace

TEST_CASE("route along one lane follows the centerline") {
  auto map = straight();
  auto pts = plan_route(*map, {0, 0, 0}, {100, 0, 0});
  REQUIRE(pts.size() >= 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].y == doctest::Approx(0.0));
    if (i) CHECK(pts[i].x > pts[i - 1].x);
  }
}

TEST_CASE("route to the adjacent lane changes lanes once") {
  auto plan = plan_route_detailed(*straight(), {0, 0, 0}, {100, 4, 0});
  CHECK(plan.lane_changes == 1);
  CHECK(plan.lane_sequence == std::vector<std::string>{"L0", "L1"});
  auto s = arc_lengths(plan.waypoints);
  CHECK(std::is_sorted(s.begin(), s.end()));
}

TEST_CASE("goal off the map has no route") {
  try {
    plan_route(*straight(), {0, 0, 0}, {100, 50, 0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kPrecondition);
  }
}

TEST_CASE("controller is at rest on the centerline at cruise speed") {
  auto map = straight();
  Actor a = driver(*map, "a", {0, 0}, {200, 0}, 10.0);
  SimParams p;
  auto cmd = pid_step(a, p, 0.0);
  CHECK(std::abs(cmd.accel) < 1e-6);
  CHECK(std::abs(cmd.steer) < 1e-6);
}

TEST_CASE("controller accelerates from standstill") {
  auto map = straight();
  Actor a = driver(*map, "a", {0, 0}, {200, 0}, 10.0);
  a.speed = 0.0;
  CHECK(pid_step(a, SimParams{}, 0.0).accel > 0.0);
}

TEST_CASE("lateral offset steers back and decays") {
  auto map = straight();
  Actor a = driver(*map, "a", {0, 0}, {250, 0}, 10.0);
  a.pose.y = 1.0;
  CHECK(pid_step(a, SimParams{}, 0.0).steer < 0.0);
  SimWorld w = make_world(map, {a});
  std::vector<double> offsets;
  for (int k = 0; k < 200; ++k) {
    step(w, 1);
    offsets.push_back(std::abs(w.actors[0].pose.y));
  }
  CHECK(offsets.back() < 0.05);
  // past the first second the offset only shrinks
  for (std::size_t k = 21; k < offsets.size(); ++k) CHECK(offsets[k] <= offsets[k - 1] + 1e-9);
}

TEST_CASE("stationary actor does not move") {
  auto map = straight();
  SimWorld w = make_world(map, {parked(*map, "p", {20, 4})});
  Pose p0 = w.actors[0].pose;
  for (int k = 0; k < 50; ++k) step(w, 3);
  CHECK(w.actors[0].pose == p0);
}

TEST_CASE("steady driving advances half a meter per tick") {
  auto map = straight();
  SimWorld w = make_world(map, {driver(*map, "a", {0, 0}, {290, 0}, 10.0)});
  for (int k = 0; k < 100; ++k) step(w, 0);
  double x0 = w.actors[0].pose.x;
  step(w, 0);
  CHECK(std::abs(w.actors[0].pose.x - x0 - 0.5) < 1e-3);
}

TEST_CASE("stepping is deterministic for a seed") {
  auto map = straight();
  SimWorld a = make_world(map, {driver(*map, "e", {0, 0}, {100, 4}, 8.0, true), driver(*map, "b", {-20, 4}, {200, 4}, 12.0)});
  add_gnss_noise(a, "e", 2.0);
  SimWorld b = a;
  for (int k = 0; k < 80; ++k) {
    step(a, 99);
    step(b, 99);
  }
  CHECK(a.trace == b.trace);
  CHECK(a.collisions == b.collisions);
}

TEST_CASE("gnss noise on an unknown actor is an error") {
  auto map = straight();
  SimWorld w = make_world(map, {parked(*map, "p", {20, 4})});
  CHECK_THROWS_AS(add_gnss_noise(w, "nobody", 1.0), Error);
}

TEST_CASE("approaching ambulance binding holds 25 m behind") {
  auto map = straight();
  SimWorld w = make_world(map, {driver(*map, kEgoName, {0, 0}, {250, 0}, 8.0, true),
                                driver(*map, "ambulance1", {-25, 4}, {250, 4}, 11.0)});
  step(w, 0);
  CHECK(holds(w, "behind_vehicle(agent_name, 'ego-vehicle') and is_currently_moving(agent_name)", "ambulance1"));
  CHECK_FALSE(holds(w, "right_in_front(agent_name, 'ego-vehicle')", "ambulance1"));
}

TEST_CASE("actor just ahead is not behind") {
  auto map = straight();
  SimWorld w = make_world(map, {driver(*map, kEgoName, {0, 0}, {250, 0}, 8.0, true),
                                driver(*map, "s", {2 + 4.6, 0}, {250, 0}, 8.0)});
  step(w, 0);
  CHECK_FALSE(holds(w, "behind_vehicle(agent_name, 'ego-vehicle')", "s"));
  CHECK(holds(w, "right_in_front(agent_name, 'ego-vehicle')", "s"));
}

TEST_CASE("stopped needs a dwell") {
  auto map = straight();
  SimWorld w = make_world(map, {parked(*map, "p", {20, 0})});
  step(w, 0);
  CHECK_FALSE(holds(w, "is_currently_stopped(agent_name)", "p"));
  for (int k = 0; k < 10; ++k) step(w, 0);
  CHECK(holds(w, "is_currently_stopped(agent_name)", "p"));
}

TEST_CASE("close-by bound is closed at 20 m") {
  auto map = straight();
  SimWorld w = make_world(map, {parked(*map, "a", {0, 0}), parked(*map, "b", {20, 0})});
  step(w, 0);
  CHECK(holds(w, "are_close_by(agent_name, 'b')", "a"));
  w.actors[1].pose.x = 20.001;
  CHECK_FALSE(holds(w, "are_close_by(agent_name, 'b')", "a"));
}

TEST_CASE("unknown predicate or agent is an error") {
  auto map = straight();
  SimWorld w = make_world(map, {parked(*map, "a", {0, 0})});
  step(w, 0);
  CHECK_THROWS_AS(eval_predicate(w, {"is_flying", {"a"}}), Error);
  CHECK_THROWS_AS(eval_predicate(w, {"is_currently_moving", {"ghost"}}), Error);
  CHECK(!check_expression(parse_expression("is_flying(agent_name)", "a"), {"a"}).empty());
  CHECK(!check_expression(parse_expression("are_close_by(agent_name)", "a"), {"a"}).empty());
}

TEST_CASE("fsm monitor matches the dynamic-programming checker") {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution bit(0.35);
  std::uniform_int_distribution<int> n_bind(1, 4), n_stage(1, 5), len(0, 60);
  for (int trial = 0; trial < 300; ++trial) {
    int nb = n_bind(rng);
    std::vector<AbstractState> bindings;
    for (int i = 0; i < nb; ++i) {
      bindings.push_back({"a", "S" + std::to_string(i), parse_expression("is_braking(agent_name)", "a")});
    }
    TaskFsm fsm;
    std::uniform_int_distribution<int> pick(0, nb - 1);
    for (int k = n_stage(rng); k > 0; --k) {
      std::vector<StageRequirement> st{{"a", "S" + std::to_string(pick(rng))}};
      if (bit(rng)) st.push_back({"a", "S" + std::to_string(pick(rng))});
      fsm.stages.push_back(st);
    }
    std::vector<std::vector<char>> values(len(rng), std::vector<char>(nb));
    for (auto& row : values) {
      for (auto& v : row) v = bit(rng);
    }
    FsmMonitor m(fsm, bindings);
    for (std::size_t t = 0; t < values.size(); ++t) {
      if (m.feed(static_cast<long>(t), values[t])) break;
    }
    CHECK(m.stage_log() == oracle::stage_ticks(oracle::stage_indices(fsm, bindings), values));
    CHECK(m.done() == (m.stage_log().size() == fsm.stages.size()));
  }
}

TEST_CASE("fsm monitor needs declared bindings") {
  TaskFsm fsm;
  fsm.stages = {{{"a", "Missing"}}};
  CHECK_THROWS_AS(FsmMonitor(fsm, {}), Error);
  CHECK_THROWS_AS(FsmMonitor(TaskFsm{}, {}), Error);
}

TEST_CASE("single stage on ego motion is accepted at first motion") {
  auto map = straight();
  SimWorld w = make_world(map, {driver(*map, kEgoName, {0, 0}, {250, 0}, 8.0, true)});
  std::vector<AbstractState> b{{kEgoName, "Moving", parse_expression("is_currently_moving(agent_name)", kEgoName)},
                               {kEgoName, "Never", parse_expression("is_currently_stopped(agent_name)", kEgoName)}};
  TaskFsm one{{{{kEgoName, "Moving"}}}};
  auto r = run(w, one, b, 100, 0);
  CHECK(r.verdict == Verdict::kAccepted);
  CHECK(r.stage_log == std::vector<long>{1});
  TaskFsm two{{{{kEgoName, "Moving"}}, {{kEgoName, "Never"}}}};
  auto s = run(w, two, b, 100, 0);
  CHECK(s.verdict == Verdict::kStalled);
  CHECK(s.first_unmet_stage == 1);
  CHECK(s.state_values.size() == 100);
}

TEST_CASE("overlap is recorded as a collision") {
  auto map = straight();
  SimWorld w = make_world(map, {driver(*map, kEgoName, {0, 0}, {250, 0}, 10.0, true), parked(*map, "wall", {15, 0})});
  std::vector<AbstractState> b{
      {kEgoName, "Never",
       parse_expression("is_currently_moving(agent_name) and is_currently_stopped(agent_name)", kEgoName)}};
  auto r = run(w, TaskFsm{{{{kEgoName, "Never"}}}}, b, 200, 0);
  CHECK(r.verdict == Verdict::kCollided);
  REQUIRE(!r.collisions.empty());
  CHECK(r.collisions[0].a == kEgoName);
  CHECK(r.collisions[0].b == "wall");
}

TEST_CASE("trace csv has a header and one row per actor tick") {
  auto map = straight();
  SimWorld w = make_world(map, {parked(*map, "a", {0, 0}), parked(*map, "b", {20, 4})});
  for (int k = 0; k < 3; ++k) step(w, 0);
  auto csv = trace_csv(w.trace, w.params.dt);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6);
  CHECK(csv.rfind("tick,time,actor", 0) == 0);
}
