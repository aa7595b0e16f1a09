#include "doctest.h"
#include "regen/compiler.hpp"
#include "regen/error.hpp"
#include "regen/expansion.hpp"
#include "regen/pipeline.hpp"

using namespace regen;

namespace {

AssetDatabase driving() { return load_asset_db(data_dir() / "assets" / "driving.assetdb"); }
OracleHandle transcript() { return OracleHandle::scripted_file(data_dir() / "transcripts" / "abrupt_stop.transcript"); }
ScenarioConfig ambulance() { return load_config(data_dir() / "golden" / "ambulance.config.json"); }

ScenarioGraph scenario_with(const std::string& event_text) {
  for (auto& s : enumerate_scenarios(load_graph(data_dir() / "golden" / "abrupt_stop.graph.json"))) {
    for (const auto* e : s.events()) {
      if (e->text == event_text) return s;
    }
  }
  FAIL("no scenario for " << event_text);
  return {};
}

bool any_contains(const std::vector<std::string>& lines, const std::string& needle) {
  return std::any_of(lines.begin(), lines.end(), [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

std::string grounding_with(const std::string& expr) {
  return "<Answer>\nstates:\n- ambulance1 | Ambulance Flying | " + expr +
         "\nfsm:\n- [('ambulance1', 'Ambulance Flying')]\n</Answer>";
}

}  // namespace

TEST_CASE("ambulance scenario compiles to five stages") {
  auto cfg = compile(scenario_with("emergency vehicle approaching from behind"), driving(), transcript());
  using R = std::vector<StageRequirement>;
  CHECK(cfg.fsm.stages == std::vector<R>{R{{"ambulance1", "Ambulance Approaching"}, {kEgoName, "Ego Driving Steady"}},
                                         R{{"ambulance1", "Ambulance Close to Ego"}},
                                         R{{kEgoName, "Ego Braking"}},
                                         R{{kEgoName, "Ego Stopped Abruptly"}},
                                         R{{"ambulance1", "Ambulance Passing Ego"}}});
  CHECK(cfg.fsm.terminal_stage_index() == 4);
  int i = binding_index(cfg.predicates, {"ambulance1", "Ambulance Approaching"});
  REQUIRE(i >= 0);
  CHECK(cfg.predicates[i].expr ==
        parse_expression("behind_vehicle(agent_name, 'ego-vehicle') and is_currently_moving(agent_name)", "ambulance1"));
  const auto* amb = cfg.entity("ambulance1");
  REQUIRE(amb);
  CHECK(amb->static_properties.at("siren") == "on");
  CHECK(amb->behavioral_properties.at("starting location") == "behind the ego-vehicle on adjacent lane");
  CHECK(cfg.entities.front().name == kEgoName);
  CHECK(cfg.causal_graph.back() == "The ego-vehicle stopped abruptly");
}

TEST_CASE("every recorded scenario compiles and validates") {
  auto db = driving();
  for (const auto& s : enumerate_scenarios(load_graph(data_dir() / "golden" / "abrupt_stop.graph.json"))) {
    auto cfg = compile(s, db, transcript());
    auto report = validate_config(cfg, db);
    CHECK_MESSAGE(report.ok(), cfg.narrative);
    CHECK_MESSAGE(report.warnings.empty(), cfg.narrative);
  }
}

TEST_CASE("predicates outside the library are rejected by name") {
  auto sub = scenario_with("emergency vehicle approaching from behind");
  auto empty = OracleHandle::scripted({});
  CHECK_THROWS(compile(sub, driving(), empty));
  auto rec = empty.misses().at(0);
  rec.response = grounding_with("is_flying(agent_name)");
  try {
    compile(sub, driving(), OracleHandle::scripted({rec}));
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
    CHECK(std::string(e.what()).find("is_flying") != std::string::npos);
  }
  rec.response = grounding_with("is_currently_moving(agent_name)");
  CHECK(compile(sub, driving(), OracleHandle::scripted({rec})).fsm.stages.size() == 1);
}

TEST_CASE("golden config validates clean") {
  auto report = validate_config(ambulance(), driving());
  CHECK(report.violations.empty());
  CHECK(report.warnings.empty());
}

TEST_CASE("fsm referencing an undeclared agent is a violation") {
  auto cfg = ambulance();
  cfg.fsm.stages.push_back({{"truck1", "Truck Waiting"}});
  auto report = validate_config(cfg, driving());
  CHECK(!report.ok());
  CHECK(any_contains(report.violations, "truck1"));
}

TEST_CASE("behavior missing from the database is a violation") {
  auto cfg = ambulance();
  for (auto& e : cfg.entities) {
    if (e.name == "ambulance1") e.behavioral_properties["action"] = "teleport";
  }
  CHECK(any_contains(validate_config(cfg, driving()).violations, "teleport"));
}

TEST_CASE("illegal static property value is a violation") {
  auto cfg = ambulance();
  for (auto& e : cfg.entities) {
    if (e.name == "ambulance1") e.static_properties["siren"] = "blue";
  }
  CHECK(any_contains(validate_config(cfg, driving()).violations, "blue"));
}

TEST_CASE("moving and stopped exclude each other") {
  AbstractState moving{"a", "M", parse_expression("is_currently_moving(agent_name)", "a")};
  AbstractState stopped{"a", "S", parse_expression("is_currently_stopped(agent_name)", "a")};
  AbstractState braking{"a", "B", parse_expression("is_braking(agent_name)", "a")};
  CHECK(mutually_exclusive(moving, stopped));
  CHECK(!mutually_exclusive(moving, braking));
}

TEST_CASE("contradictory stage is reported as never holding") {
  auto report = validate_config(load_config(data_dir() / "fixtures" / "contradictory.config.json"), driving());
  CHECK(report.ok());
  CHECK(any_contains(report.warnings, "can never hold"));
}

TEST_CASE("over-constraint lint fires for the delivery truck only") {
  auto truck = validate_config(load_config(data_dir() / "fixtures" / "delivery_truck.config.json"), driving());
  CHECK(any_contains(truck.warnings, "over-constraint"));
  CHECK(!any_contains(validate_config(ambulance(), driving()).warnings, "over-constraint"));
}

TEST_CASE("config json round-trips") {
  auto cfg = ambulance();
  CHECK(parse_config(serialize_config(cfg), "again") == cfg);
  CHECK(config_from_json(config_to_json(cfg), "again") == cfg);
}

TEST_CASE("malformed config reports a parse error") {
  try {
    parse_config(R"({"narrative": 3})", "bad");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
  }
}

TEST_CASE("diamond graph grounds into two configs") {
  auto subs = enumerate_scenarios(load_graph(data_dir() / "fixtures" / "diamond.graph.json"));
  REQUIRE(subs.size() == 2);
  for (const auto& s : subs) {
    auto cfg = compile(s, driving(), transcript());
    CHECK(cfg.causal_graph.size() == 3);
    CHECK(validate_config(cfg, driving()).ok());
  }
}

TEST_CASE("asset behaviors map onto simulator primitives") {
  CHECK(primitive_for_behavior("constant speed") == "driving_forward");
  CHECK(primitive_for_behavior("change lanes") == "change_lanes");
  CHECK(primitive_for_behavior("stop abruptly") == "stop_abruptly");
  CHECK(primitive_for_behavior("stationary") == "stationary");
}
