#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regen/asset_db.hpp"
#include "regen/fsm.hpp"
#include "regen/oracle.hpp"
#include "regen/placement.hpp"
#include "regen/scenario_graph.hpp"
#include "regen/util.hpp"

namespace regen {

inline constexpr const char* kEgoName = "ego-vehicle";

struct ConfigEntity {
  std::string name;         // instance name, unique
  std::string type;         // "agent" or "object"
  std::string entity_name;  // asset id
  // "action" plus location keys.
  std::map<std::string, std::string> behavioral_properties;
  std::map<std::string, std::string> static_properties;
  friend bool operator==(const ConfigEntity&, const ConfigEntity&) = default;
};

struct ConfigVehicle {
  std::string name;
  std::string blueprint_id;
  std::string driving_policy;  // primitive name
  std::string type;            // "dynamic" or "static"
  friend bool operator==(const ConfigVehicle&, const ConfigVehicle&) = default;
};

struct PlacementVar {
  std::string name;
  std::optional<Region> start;     // dynamic actors
  std::optional<Region> end;
  std::optional<Region> location;  // static actors
  double speed_lo_kmh = 0.0;
  double speed_hi_kmh = 0.0;
  bool dynamic() const { return start.has_value(); }
  friend bool operator==(const PlacementVar&, const PlacementVar&) = default;
};

struct ScenarioConfig {
  std::string narrative;
  std::vector<std::string> causal_graph;  // cause first
  std::string route_id;
  std::vector<ConfigEntity> entities;  // ego first
  std::vector<ConfigVehicle> vehicles;
  TaskFsm fsm;
  std::vector<AbstractState> predicates;
  std::vector<PlacementVar> placement_vars;
  // Content hashes of the inputs; not part of the scenario itself.
  std::map<std::string, std::string> source;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  const ConfigEntity* entity(const std::string& name) const;
  const PlacementVar* placement(const std::string& name) const;
};

// Primitive name for a database behavior ("constant speed" -> driving_forward).
std::string primitive_for_behavior(const std::string& behavior);

// Default speed interval (km/h) for an asset.
std::pair<double, double> default_speed_range(const std::string& asset_id);

struct CompileOptions {
  std::string ego_action;  // description of what the ego does
};

// One grounding query; the answer is validated and rejected as a whole.
// Throws kValidation listing every offending predicate, agent or stage.
ScenarioConfig compile(const ScenarioGraph& subgraph, const AssetDatabase& db,
                       const OracleHandle& oracle, const CompileOptions& options = {});

// The variables of the grounding prompt, exposed for transcript authoring.
VarMap grounding_vars(const ScenarioGraph& subgraph, const AssetDatabase& db);

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;  // over-constraint lint
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_config(const ScenarioConfig& config, const AssetDatabase& db);

// Whether two states can never hold at the same tick, judged from the
// predicate calls alone.
bool mutually_exclusive(const AbstractState& a, const AbstractState& b);

Json config_to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json(const Json& doc, const std::string& origin);
std::string serialize_config(const ScenarioConfig& config);
ScenarioConfig parse_config(std::string_view text, const std::string& origin);
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace regen
