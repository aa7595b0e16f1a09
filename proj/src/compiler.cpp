#include "regen/compiler.hpp"

#include <algorithm>
#include <set>

#include "regen/error.hpp"
#include "regen/expansion.hpp"

namespace regen {

const ConfigEntity* ScenarioConfig::entity(const std::string& name) const {
  for (const auto& e : entities) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const PlacementVar* ScenarioConfig::placement(const std::string& name) const {
  for (const auto& p : placement_vars) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::string primitive_for_behavior(const std::string& behavior) {
  if (behavior == "constant speed" || behavior == "walking") return "driving_forward";
  if (behavior == "change lanes") return "change_lanes";
  if (behavior == "stop abruptly") return "stop_abruptly";
  if (behavior == "delayed start") return "delayed_start";
  return "stationary";
}

std::pair<double, double> default_speed_range(const std::string& asset_id) {
  if (asset_id == "pedestrian") return {3.0, 6.0};
  if (asset_id == "bicycle") return {10.0, 25.0};
  return {20.0, 60.0};
}

namespace {

std::vector<NodeId> chain_ids(const ScenarioGraph& g) {
  std::vector<NodeId> roots;
  for (const EventNode* e : g.events()) {
    if (g.causes_of(e->id).empty()) roots.push_back(e->id);
  }
  require(roots.size() == 1, "compile: subgraph is not a single cause chain");
  std::vector<NodeId> chain{roots.front()};
  while (chain.back() != g.behavior_node_id()) {
    auto effects = g.effects_of(chain.back());
    require(effects.size() == 1, "compile: subgraph is not a single cause chain");
    chain.push_back(effects.front());
  }
  return chain;
}

std::string arg_kind_name(ArgKind k) {
  switch (k) {
    case ArgKind::kAgent: return "entity";
    case ArgKind::kText: return "text";
    case ArgKind::kNumber: return "number";
  }
  return "?";
}

struct Skeleton {
  std::vector<std::string> chain;
  std::vector<ConfigEntity> entities;
  std::vector<ConfigVehicle> vehicles;
  std::vector<PlacementVar> placement;
  std::vector<std::string> problems;
};

Skeleton skeleton(const ScenarioGraph& g, const AssetDatabase& db, const std::string& ego_action) {
  Skeleton sk;
  for (NodeId id : chain_ids(g)) {
    const EventNode* e = g.event(id);
    require(!e->flags.count(EventFlag::kUnsimulatable),
            "compile: event '" + e->text + "' cannot be simulated");
    sk.chain.push_back(e->text);
  }
  ConfigEntity ego{kEgoName, "agent", kEgoName, {{"action", ego_action}}, {}};
  sk.entities.push_back(ego);
  const auto& vocab = default_vocabulary();
  for (const auto& n : g.nodes()) {
    const auto* en = std::get_if<EntityNode>(&n);
    if (!en) continue;
    const AssetNode* asset = db.find(en->asset_id);
    require(asset != nullptr, "compile: unknown asset '" + en->asset_id + "'");
    ConfigEntity ce;
    ce.name = en->instance_name;
    ce.type = asset->kind == AssetKind::kEntityAgent ? "agent" : "object";
    ce.entity_name = en->asset_id;
    for (NodeId pid : g.properties_of(en->id)) {
      const PropertyNode* p = g.property(pid);
      if (p->key == "behavior") {
        ce.behavioral_properties["action"] = p->value;
      } else if (is_location_key(p->key)) {
        ce.behavioral_properties[p->key] = p->value;
      } else {
        ce.static_properties[p->key] = p->value;
      }
    }
    if (!ce.behavioral_properties.count("action")) ce.behavioral_properties["action"] = "stationary";
    std::string primitive = primitive_for_behavior(ce.behavioral_properties["action"]);
    bool dynamic = primitive != "stationary";
    sk.vehicles.push_back({ce.name, asset->blueprint_id, primitive, dynamic ? "dynamic" : "static"});

    auto region = [&](const std::string& key) -> std::optional<Region> {
      auto it = ce.behavioral_properties.find(key);
      if (it == ce.behavioral_properties.end()) return std::nullopt;
      auto v = vocab.find(canonical_phrase(it->second));
      if (v == vocab.end()) {
        sk.problems.push_back("entity '" + ce.name + "': unknown location phrase '" + it->second + "'");
        return std::nullopt;
      }
      return v->second;
    };
    PlacementVar pv;
    pv.name = ce.name;
    if (dynamic) {
      pv.start = region("starting location");
      pv.end = region("ending location");
      if (!pv.start || !pv.end) {
        sk.problems.push_back("entity '" + ce.name + "': dynamic actor needs starting and ending locations");
      } else {
        auto [lo, hi] = default_speed_range(ce.entity_name);
        pv.speed_lo_kmh = lo;
        pv.speed_hi_kmh = hi;
        sk.placement.push_back(pv);
      }
    } else {
      pv.location = region("location");
      if (!pv.location) pv.location = region("starting location");
      if (pv.location) sk.placement.push_back(pv);
    }
    sk.entities.push_back(std::move(ce));
  }
  return sk;
}

std::string entity_lines(const std::vector<ConfigEntity>& entities) {
  std::string out;
  for (const auto& e : entities) {
    if (!out.empty()) out += "\n";
    out += "- " + e.name + " (" + e.entity_name + ")";
    std::vector<std::string> attrs;
    for (const auto& [k, v] : e.behavioral_properties) attrs.push_back(k + ": " + v);
    for (const auto& [k, v] : e.static_properties) attrs.push_back(k + ": " + v);
    if (!attrs.empty()) out += ": " + join(attrs, "; ");
  }
  return out;
}

std::string predicate_lines() {
  std::string out;
  for (const auto& p : predicate_library()) {
    if (!out.empty()) out += "\n";
    std::vector<std::string> args;
    for (ArgKind k : p.args) args.push_back(arg_kind_name(k));
    out += "- " + std::string(p.name) + "(" + join(args, ", ") + ")";
  }
  return out;
}

}  // namespace

VarMap grounding_vars(const ScenarioGraph& subgraph, const AssetDatabase& db) {
  Skeleton sk = skeleton(subgraph, db, subgraph.behavior().text);
  return {{"causal_graph", python_list(sk.chain)},
          {"entities", entity_lines(sk.entities)},
          {"predicates", predicate_lines()}};
}

ScenarioConfig compile(const ScenarioGraph& subgraph, const AssetDatabase& db,
                       const OracleHandle& oracle, const CompileOptions& options) {
  std::string ego_action = options.ego_action.empty() ? subgraph.behavior().text : options.ego_action;
  Skeleton sk = skeleton(subgraph, db, ego_action);
  std::vector<std::string> problems = sk.problems;

  OracleRequest req{TemplateId::kGrounding,
                    {{"causal_graph", python_list(sk.chain)},
                     {"entities", entity_lines(sk.entities)},
                     {"predicates", predicate_lines()}}};
  GroundingAnswer answer = parse_grounding(oracle.query(req).text);

  std::set<std::string> roster;
  for (const auto& e : sk.entities) roster.insert(e.name);

  ScenarioConfig cfg;
  cfg.narrative = join(sk.chain, " -> ");
  cfg.causal_graph = sk.chain;
  cfg.route_id = subgraph.route_id();
  cfg.entities = sk.entities;
  cfg.vehicles = sk.vehicles;
  cfg.placement_vars = sk.placement;

  for (const auto& st : answer.states) {
    std::string where = "state '" + st.name + "' of '" + st.agent + "'";
    if (!roster.count(st.agent)) problems.push_back(where + ": unknown agent '" + st.agent + "'");
    AbstractState as{st.agent, st.name, {}};
    try {
      as.expr = parse_expression(st.expression, st.agent);
    } catch (const Error& e) {
      problems.push_back(where + ": " + e.what());
      continue;
    }
    for (const auto& p : check_expression(as.expr, roster)) problems.push_back(where + ": " + p);
    if (binding_index(cfg.predicates, {as.agent, as.name}) >= 0) {
      problems.push_back(where + ": declared twice");
      continue;
    }
    cfg.predicates.push_back(std::move(as));
  }
  if (answer.stages.empty()) problems.push_back("fsm: no stages");
  for (std::size_t k = 0; k < answer.stages.size(); ++k) {
    if (answer.stages[k].empty()) problems.push_back("fsm stage " + std::to_string(k) + ": empty");
    for (const auto& req_pair : answer.stages[k]) {
      if (binding_index(cfg.predicates, req_pair) < 0) {
        problems.push_back("fsm stage " + std::to_string(k) + ": undeclared state ('" +
                           req_pair.first + "', '" + req_pair.second + "')");
      }
    }
  }
  cfg.fsm.stages = answer.stages;
  if (!problems.empty()) fail(ErrorKind::kValidation, "compile: " + join(problems, "; "));

  cfg.source["graph_sha256"] = sha256_hex(serialize_graph(subgraph));
  cfg.source["oracle_sha256"] = oracle.digest();
  return cfg;
}

// ---- validation -----------------------------------------------------------

namespace {

bool calls_conflict(const PredicateCall& a, const PredicateCall& b) {
  auto pair_is = [&](std::string_view x, std::string_view y) {
    return (a.name == x && b.name == y) || (a.name == y && b.name == x);
  };
  if (a.args.empty() || b.args.empty()) return false;
  bool same_subject = a.args[0] == b.args[0];
  if (!same_subject) return false;
  if (pair_is("is_currently_moving", "is_currently_stopped")) return true;
  if (pair_is("is_braking", "is_currently_stopped")) return true;
  if (pair_is("is_ego_driving_steady", "is_currently_stopped")) return true;
  if (pair_is("behind_vehicle", "right_in_front")) return a.args == b.args;
  return false;
}

bool clauses_conflict(const std::vector<PredicateCall>& a, const std::vector<PredicateCall>& b) {
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (calls_conflict(x, y)) return true;
    }
  }
  return false;
}

bool self_contradictory(const AbstractState& s) {
  for (const auto& clause : s.expr.clauses) {
    if (!clauses_conflict(clause, clause)) return false;
  }
  return !s.expr.clauses.empty();
}

}  // namespace

bool mutually_exclusive(const AbstractState& a, const AbstractState& b) {
  for (const auto& ca : a.expr.clauses) {
    for (const auto& cb : b.expr.clauses) {
      if (!clauses_conflict(ca, cb)) return false;
    }
  }
  return true;
}

ValidationReport validate_config(const ScenarioConfig& cfg, const AssetDatabase& db) {
  ValidationReport r;
  auto& v = r.violations;
  std::set<std::string> roster;
  for (const auto& e : cfg.entities) {
    if (!roster.insert(e.name).second) v.push_back("entity '" + e.name + "': duplicate name");
  }
  const auto& vocab = default_vocabulary();
  for (const auto& e : cfg.entities) {
    if (e.name == kEgoName) continue;
    const AssetNode* asset = db.find(e.entity_name);
    if (!asset || !asset->is_entity()) {
      v.push_back("entity '" + e.name + "': unknown asset '" + e.entity_name + "'");
      continue;
    }
    auto behaviors = db.behaviors_of(e.entity_name);
    auto action = e.behavioral_properties.find("action");
    if (action == e.behavioral_properties.end()) {
      v.push_back("entity '" + e.name + "': no action");
    } else if (!(behaviors.empty() && action->second == "stationary") &&
               std::find(behaviors.begin(), behaviors.end(), action->second) == behaviors.end()) {
      v.push_back("entity '" + e.name + "': behavior '" + action->second + "' not available for '" +
                  e.entity_name + "'");
    }
    for (const auto& [k, val] : e.behavioral_properties) {
      if (is_location_key(k) && !vocab.count(canonical_phrase(val))) {
        v.push_back("entity '" + e.name + "': location '" + val + "' is not in the placement vocabulary");
      }
    }
    auto props = db.properties_of(e.entity_name);
    for (const auto& [k, val] : e.static_properties) {
      if (std::find(props.begin(), props.end(), k) == props.end()) {
        v.push_back("entity '" + e.name + "': property '" + k + "' not available for '" +
                    e.entity_name + "'");
        continue;
      }
      auto states = property_states(db, k);
      if (!states.empty() && std::find(states.begin(), states.end(), val) == states.end()) {
        v.push_back("entity '" + e.name + "': '" + val + "' is not a state of '" + k + "'");
      }
    }
  }
  for (const auto& veh : cfg.vehicles) {
    if (!roster.count(veh.name)) v.push_back("vehicle '" + veh.name + "': not an entity");
    if (veh.type == "dynamic" && !cfg.placement(veh.name)) {
      v.push_back("vehicle '" + veh.name + "': no placement variables");
    }
  }
  for (const auto& pv : cfg.placement_vars) {
    if (!roster.count(pv.name)) v.push_back("placement '" + pv.name + "': not an entity");
    for (const auto* reg : {&pv.start, &pv.end, &pv.location}) {
      if (!*reg) continue;
      if (!vocab.count(canonical_phrase((*reg)->phrase))) {
        v.push_back("placement '" + pv.name + "': unknown phrase '" + (*reg)->phrase + "'");
      }
      if ((*reg)->lo > (*reg)->hi) v.push_back("placement '" + pv.name + "': empty offset range");
    }
    if (pv.dynamic() && (!pv.end || pv.speed_lo_kmh > pv.speed_hi_kmh || pv.speed_lo_kmh < 0)) {
      v.push_back("placement '" + pv.name + "': bad end region or speed range");
    }
  }
  for (const auto& st : cfg.predicates) {
    std::string where = "state '" + st.name + "' of '" + st.agent + "'";
    if (!roster.count(st.agent)) v.push_back(where + ": unknown agent");
    for (const auto& p : check_expression(st.expr, roster)) v.push_back(where + ": " + p);
  }
  if (cfg.fsm.stages.empty()) v.push_back("fsm: no stages");
  for (std::size_t k = 0; k < cfg.fsm.stages.size(); ++k) {
    for (const auto& [agent, state] : cfg.fsm.stages[k]) {
      if (!roster.count(agent)) {
        v.push_back("fsm stage " + std::to_string(k) + ": undeclared agent '" + agent + "'");
      } else if (binding_index(cfg.predicates, {agent, state}) < 0) {
        v.push_back("fsm stage " + std::to_string(k) + ": undeclared state '" + state + "' of '" +
                    agent + "'");
      }
    }
  }
  if (!r.ok()) return r;

  // Over-constraint lint.
  auto state = [&](const StageRequirement& req) -> const AbstractState& {
    return cfg.predicates[binding_index(cfg.predicates, req)];
  };
  const auto& stages = cfg.fsm.stages;
  std::set<std::string> dynamic{kEgoName};
  for (const auto& veh : cfg.vehicles) {
    if (veh.type == "dynamic") dynamic.insert(veh.name);
  }
  for (std::size_t k = 0; k < stages.size(); ++k) {
    for (std::size_t i = 0; i < stages[k].size(); ++i) {
      const AbstractState& a = state(stages[k][i]);
      if (self_contradictory(a)) {
        r.warnings.push_back("stage " + std::to_string(k) + ": state '" + a.name + "' of '" + a.agent +
                             "' can never hold");
      }
      for (std::size_t j = i + 1; j < stages[k].size(); ++j) {
        const AbstractState& b = state(stages[k][j]);
        if (mutually_exclusive(a, b)) {
          r.warnings.push_back("stage " + std::to_string(k) + ": '" + a.name + "' and '" + b.name +
                               "' cannot hold on the same tick");
        }
      }
    }
    if (k + 1 >= stages.size()) continue;
    for (const auto& prev : stages[k]) {
      for (const auto& next : stages[k + 1]) {
        if (prev.first != next.first || !mutually_exclusive(state(prev), state(next))) continue;
        std::vector<std::string> others;
        // Static actors hold their conditions indefinitely, so only moving
        // partners leave zero slack.
        for (const auto& o : stages[k + 1]) {
          if (o.first != next.first && dynamic.count(o.first)) {
            others.push_back("'" + o.second + "' of '" + o.first + "'");
          }
        }
        if (others.empty()) continue;
        r.warnings.push_back("over-constraint: stages " + std::to_string(k) + "->" +
                             std::to_string(k + 1) + ": '" + next.first + "' must reach '" +
                             next.second + "' (exclusive with '" + prev.second +
                             "') on the same tick as " + join(others, ", ") +
                             "; zero slack between the two conditions");
      }
    }
  }
  return r;
}

// ---- serialization --------------------------------------------------------

namespace {

Json region_json(const Region& r) {
  return Json{{"phrase", r.phrase}, {"lane", std::string(to_string(r.lane))}, {"offset", {r.lo, r.hi}}};
}

Region region_from(const Json& j, const std::string& where) {
  Region r;
  r.phrase = j.at("phrase").get<std::string>();
  auto lane = parse_lane_selector(j.at("lane").get<std::string>());
  if (!lane) fail(ErrorKind::kParse, where + ".lane: expected same or adjacent");
  r.lane = *lane;
  r.lo = j.at("offset").at(0).get<double>();
  r.hi = j.at("offset").at(1).get<double>();
  return r;
}

Json string_map(const std::map<std::string, std::string>& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

std::map<std::string, std::string> string_map_from(const Json& j) {
  std::map<std::string, std::string> m;
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) m[k] = v.get<std::string>();
  }
  return m;
}

}  // namespace

Json config_to_json(const ScenarioConfig& c) {
  Json j = Json::object();
  j["narrative"] = c.narrative;
  j["causal_graph"] = c.causal_graph;
  j["route_id"] = c.route_id;
  j["entities"] = Json::array();
  for (const auto& e : c.entities) {
    j["entities"].push_back(Json{{"name", e.name},
                                 {"type", e.type},
                                 {"entity_name", e.entity_name},
                                 {"behavioral_properties", string_map(e.behavioral_properties)},
                                 {"static_properties", string_map(e.static_properties)}});
  }
  j["vehicles"] = Json::array();
  for (const auto& v : c.vehicles) {
    j["vehicles"].push_back(Json{{"name", v.name},
                                 {"blueprint_id", v.blueprint_id},
                                 {"driving_policy", v.driving_policy},
                                 {"type", v.type}});
  }
  j["fsm"] = Json::array();
  for (const auto& stage : c.fsm.stages) {
    Json s = Json::array();
    for (const auto& [a, st] : stage) s.push_back(Json::array({a, st}));
    j["fsm"].push_back(std::move(s));
  }
  j["predicates"] = Json::array();
  for (const auto& p : c.predicates) {
    j["predicates"].push_back(Json{{"agent", p.agent}, {"state", p.name}, {"expression", to_string(p.expr)}});
  }
  j["placement_vars"] = Json::array();
  for (const auto& p : c.placement_vars) {
    Json pj = Json{{"name", p.name}};
    if (p.start) pj["start"] = region_json(*p.start);
    if (p.end) pj["end"] = region_json(*p.end);
    if (p.location) pj["location"] = region_json(*p.location);
    if (p.dynamic()) pj["speed_kmh"] = {p.speed_lo_kmh, p.speed_hi_kmh};
    j["placement_vars"].push_back(std::move(pj));
  }
  j["source"] = string_map(c.source);
  return j;
}

ScenarioConfig config_from_json(const Json& j, const std::string& origin) {
  ScenarioConfig c;
  try {
    c.narrative = j.at("narrative").get<std::string>();
    c.causal_graph = j.at("causal_graph").get<std::vector<std::string>>();
    c.route_id = j.at("route_id").get<std::string>();
    for (const auto& e : j.at("entities")) {
      c.entities.push_back({e.at("name").get<std::string>(), e.at("type").get<std::string>(),
                            e.at("entity_name").get<std::string>(),
                            string_map_from(e.value("behavioral_properties", Json::object())),
                            string_map_from(e.value("static_properties", Json::object()))});
    }
    for (const auto& v : j.at("vehicles")) {
      c.vehicles.push_back({v.at("name").get<std::string>(), v.value("blueprint_id", ""),
                            v.at("driving_policy").get<std::string>(), v.at("type").get<std::string>()});
    }
    for (const auto& s : j.at("fsm")) {
      std::vector<StageRequirement> stage;
      for (const auto& pair : s) stage.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      c.fsm.stages.push_back(std::move(stage));
    }
    for (std::size_t i = 0; i < j.at("predicates").size(); ++i) {
      const Json& p = j["predicates"][i];
      AbstractState st;
      st.agent = p.at("agent").get<std::string>();
      st.name = p.at("state").get<std::string>();
      st.expr = parse_expression(p.at("expression").get<std::string>(), st.agent);
      c.predicates.push_back(std::move(st));
    }
    for (std::size_t i = 0; i < j.at("placement_vars").size(); ++i) {
      const Json& p = j["placement_vars"][i];
      std::string where = origin + ": placement_vars[" + std::to_string(i) + "]";
      PlacementVar pv;
      pv.name = p.at("name").get<std::string>();
      if (p.contains("start")) pv.start = region_from(p["start"], where + ".start");
      if (p.contains("end")) pv.end = region_from(p["end"], where + ".end");
      if (p.contains("location")) pv.location = region_from(p["location"], where + ".location");
      if (p.contains("speed_kmh")) {
        pv.speed_lo_kmh = p["speed_kmh"].at(0).get<double>();
        pv.speed_hi_kmh = p["speed_kmh"].at(1).get<double>();
      }
      c.placement_vars.push_back(std::move(pv));
    }
    if (j.contains("source")) c.source = string_map_from(j["source"]);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, origin + ": malformed scenario config: " + e.what());
  }
  return c;
}

std::string serialize_config(const ScenarioConfig& config) { return dump_json(config_to_json(config)); }

ScenarioConfig parse_config(std::string_view text, const std::string& origin) {
  return config_from_json(parse_json(text, origin), origin);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

}  // namespace regen
