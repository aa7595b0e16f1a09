#include "regen/expansion.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "regen/error.hpp"
#include "regen/placement.hpp"
#include "regen/util.hpp"

namespace regen {

namespace {

constexpr const char* kEgo = "ego-vehicle";

std::string bullet_lines(const std::vector<Candidate>& cands, bool with_description) {
  std::string out;
  for (const auto& c : cands) {
    if (!out.empty()) out += "\n";
    out += "- " + c.text;
    if (with_description && !c.description.empty()) out += ": " + c.description;
  }
  return out;
}

// The event an entity supports (lowest id when several).
NodeId supported_event(const ScenarioGraph& g, NodeId entity) {
  for (const auto& e : g.edges()) {
    if (e.family == EdgeFamily::kSupport && e.from == entity) return e.to;
  }
  fail(ErrorKind::kPrecondition, "entity " + std::to_string(entity) + " supports no event");
}

std::vector<std::string> chosen_values(const std::string& response) {
  return values_for(parse_value_lists(response), "chosen");
}

}  // namespace

ScenarioGraph init_graph(const BehaviorSpec& behavior) {
  require(!trim(behavior.description).empty(), "behavior description is empty");
  require(!behavior.route_id.empty(), "behavior route id is empty");
  return ScenarioGraph::with_behavior(behavior.description, behavior.route_id);
}

std::vector<std::string> causal_chain(const ScenarioGraph& graph, NodeId event) {
  std::vector<std::string> chain;
  std::set<NodeId> seen;
  NodeId cur = event;
  while (true) {
    const EventNode* e = graph.event(cur);
    require(e != nullptr, "causal_chain: node " + std::to_string(cur) + " is not an event");
    chain.push_back(e->text);
    if (!seen.insert(cur).second) break;
    auto effects = graph.effects_of(cur);
    if (effects.empty()) break;
    cur = *std::min_element(effects.begin(), effects.end());
  }
  return chain;
}

NameDescList propose_event_nodes(const ScenarioGraph& graph, NodeId source,
                                 const std::optional<std::string>& prior,
                                 const OracleHandle& oracle) {
  const EventNode* e = graph.event(source);
  require(e != nullptr, "propose_event_nodes: node " + std::to_string(source) + " is not an event");
  OracleRequest req;
  req.template_id = prior ? TemplateId::kEventProposalPrior : TemplateId::kEventProposal;
  req.vars["causal_graph"] = python_list(causal_chain(graph, source));
  req.vars["effect"] = e->text;
  if (prior) req.vars["prior"] = *prior;
  NameDescList proposed = parse_name_desc_list(oracle.query(req).text);
  NameDescList out;
  std::set<std::string> seen;
  for (auto& nd : proposed) {
    if (seen.insert(to_lower(nd.name)).second) out.push_back(std::move(nd));
  }
  return out;
}

std::vector<NodeId> construct_edges(ScenarioGraph& graph, NodeId source,
                                    const std::vector<Candidate>& candidates, EdgeFamily family,
                                    const OracleHandle& oracle, const std::string& property_key,
                                    std::uint32_t max_new_nodes, bool* truncated) {
  require(!candidates.empty(), "construct_edges: no candidates");
  std::vector<NodeId> added;
  if (truncated) *truncated = false;
  auto full = [&]() {
    if (added.size() < max_new_nodes) return false;
    if (truncated) *truncated = true;
    return true;
  };
  OracleRequest req;

  if (family == EdgeFamily::kCause) {
    const EventNode* effect = graph.event(source);
    if (!effect) fail(ErrorKind::kPrecondition, "construct_edges: cause edges need an event source");
    req.template_id = TemplateId::kEventEdgeSelection;
    req.vars["causal_graph"] = python_list(causal_chain(graph, source));
    req.vars["effect"] = effect->text;
    req.vars["candidates"] = bullet_lines(candidates, true);
    std::set<std::string> chosen;
    for (const auto& c : chosen_values(oracle.query(req).text)) chosen.insert(to_lower(c));
    std::uint32_t depth = effect->depth + 1;
    for (const auto& c : candidates) {
      if (!chosen.count(to_lower(c.text)) || full()) continue;
      NodeId id = graph.add_event(c.text, c.description, depth);
      graph.add_edge(EdgeFamily::kCause, id, source);
      added.push_back(id);
    }
    return added;
  }

  if (family == EdgeFamily::kSupport) {
    const EventNode* event = graph.event(source);
    if (!event) fail(ErrorKind::kPrecondition, "construct_edges: support edges need an event source");
    req.template_id = TemplateId::kEntityEdgeSelection;
    req.vars["causal_graph"] = python_list(causal_chain(graph, source));
    req.vars["event"] = event->text;
    req.vars["candidates"] = bullet_lines(candidates, false);
    std::set<std::string> chosen;
    for (const auto& c : chosen_values(oracle.query(req).text)) chosen.insert(to_lower(c));
    for (const auto& c : candidates) {
      if (!chosen.count(to_lower(c.text)) || full()) continue;
      int count = 0;
      for (const auto& n : graph.nodes()) {
        if (const auto* en = std::get_if<EntityNode>(&n); en && en->asset_id == c.text) ++count;
      }
      NodeId id = graph.add_entity(c.text, c.text + std::to_string(count + 1));
      graph.add_edge(EdgeFamily::kSupport, id, source);
      added.push_back(id);
    }
    if (added.empty() && !(truncated && *truncated)) graph.flag_event(source, EventFlag::kUnsimulatable);
    return added;
  }

  const EntityNode* entity = graph.entity(source);
  if (!entity) fail(ErrorKind::kPrecondition, "construct_edges: attribute edges need an entity source");
  require(!property_key.empty(), "construct_edges: attribute edges need a property key");
  std::vector<std::string> values;
  for (const auto& c : candidates) values.push_back(c.text);
  req.template_id = TemplateId::kEdgeSelection;
  req.vars["causal_graph"] = python_list(causal_chain(graph, supported_event(graph, source)));
  req.vars["entities_name"] = python_list({kEgo, entity->instance_name});
  req.vars["node_name"] = property_key;
  req.vars["candidate_values"] = "- " + entity->instance_name + ": " + python_list(values);
  std::string instance = entity->instance_name;
  auto chosen = values_for(parse_value_lists(oracle.query(req).text), instance);
  // A property holds one value; the first accepted candidate wins.
  for (const auto& v : chosen) {
    auto it = std::find_if(candidates.begin(), candidates.end(),
                           [&](const Candidate& c) { return to_lower(c.text) == to_lower(v); });
    if (it == candidates.end() || full()) continue;
    NodeId id = graph.add_property(property_key, it->text);
    graph.add_edge(EdgeFamily::kAttr, id, source);
    added.push_back(id);
    break;
  }
  return added;
}

namespace {

class Expander {
 public:
  Expander(const AssetDatabase& db, const OracleHandle& oracle, const ExpansionOptions& opt)
      : db_(db), oracle_(oracle), opt_(opt) {}

  void events(ScenarioGraph& g) {
    std::set<NodeId> visited;
    while (true) {
      const EventNode* next = nullptr;
      for (const EventNode* e : g.events()) {
        if (visited.count(e->id) || e->depth >= opt_.budget.max_event_depth) continue;
        if (g.cause_in_degree(e->id) > 0 || !e->flags.empty()) continue;
        if (!next || std::tie(e->depth, e->id) < std::tie(next->depth, next->id)) next = e;
      }
      if (!next) return;
      NodeId source = next->id;
      visited.insert(source);
      if (room(g) == 0) return;

      std::vector<Candidate> cands;
      std::set<std::string> seen;
      for (const auto& nd : propose_event_nodes(g, source, opt_.prior, oracle_)) {
        if (seen.insert(to_lower(nd.name)).second) cands.push_back({nd.name, nd.description});
      }
      if (source == g.behavior_node_id()) {
        for (const auto& u : opt_.user_causes) {
          if (seen.insert(to_lower(u)).second) cands.push_back({u, ""});
        }
      }
      if (cands.empty()) {
        g.flag_event(source, EventFlag::kExhausted);
        continue;
      }
      std::uint32_t cap = std::min(opt_.budget.max_events_per_node, room(g));
      bool truncated = false;
      auto added = construct_edges(g, source, cands, EdgeFamily::kCause, oracle_, {}, cap, &truncated);
      if (truncated) {
        g.flag_event(source, EventFlag::kBudget);
      } else if (added.empty()) {
        g.flag_event(source, EventFlag::kExhausted);
      }
    }
  }

  void entities(ScenarioGraph& g) {
    std::vector<NodeId> ids;
    for (const EventNode* e : g.events()) {
      // The ego-vehicle realizes the behavior itself through its route.
      if (e->id != g.behavior_node_id()) ids.push_back(e->id);
    }
    std::vector<Candidate> cands;
    for (const auto& n : list_entities(db_)) cands.push_back({n.id, ""});
    for (NodeId ev : ids) {
      if (room(g) == 0) return;
      auto accepted = construct_edges(g, ev, cands, EdgeFamily::kSupport, oracle_, {}, room(g));
      for (NodeId ent : accepted) properties(g, ent);
    }
  }

 private:
  void properties(ScenarioGraph& g, NodeId ent) {
    std::string asset = g.entity(ent)->asset_id;
    for (const auto& key : db_.properties_of(asset)) attach(g, ent, key);
    auto behaviors = db_.behaviors_of(asset);
    if (behaviors.empty()) return;
    std::vector<Candidate> cands;
    for (const auto& b : behaviors) cands.push_back({b, ""});
    if (room(g) == 0) return;
    auto added = construct_edges(g, ent, cands, EdgeFamily::kAttr, oracle_, "behavior", room(g));
    if (added.empty()) return;
    std::string behavior = g.property(added.front())->value;
    for (const auto& key : db_.options_of(behavior, AssetKind::kProperty)) attach(g, ent, key);
  }

  void attach(ScenarioGraph& g, NodeId ent, const std::string& key) {
    if (room(g) == 0) return;
    std::vector<std::string> values = property_states(db_, key);
    if (values.empty()) values = propose_values(g, ent, key);
    if (values.empty()) return;
    std::vector<Candidate> cands;
    for (const auto& v : values) cands.push_back({v, ""});
    construct_edges(g, ent, cands, EdgeFamily::kAttr, oracle_, key, room(g));
  }

  std::vector<std::string> propose_values(const ScenarioGraph& g, NodeId ent, const std::string& key) {
    const EntityNode* en = g.entity(ent);
    OracleRequest req;
    req.template_id = TemplateId::kPropertyProposal;
    req.vars["causal_graph"] = python_list(causal_chain(g, supported_event(g, ent)));
    req.vars["entities_name"] = python_list({kEgo, en->instance_name});
    req.vars["node_name"] = key;
    auto proposed = values_for(parse_value_lists(oracle_.query(req).text), en->instance_name);
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& v : proposed) {
      std::string canon = canonical_phrase(v);
      // Locations must be realizable by the placement solver.
      if (is_location_key(key) && !default_vocabulary().count(canon)) continue;
      if (seen.insert(canon).second) out.push_back(is_location_key(key) ? canon : v);
    }
    return out;
  }

  std::uint32_t room(const ScenarioGraph& g) const {
    return g.size() >= opt_.budget.max_total_nodes
               ? 0
               : static_cast<std::uint32_t>(opt_.budget.max_total_nodes - g.size());
  }

  const AssetDatabase& db_;
  const OracleHandle& oracle_;
  const ExpansionOptions& opt_;
};

}  // namespace

ScenarioGraph expand(ScenarioGraph graph, const AssetDatabase& db, const OracleHandle& oracle,
                     const ExpansionOptions& options) {
  const ExpansionBudget& b = options.budget;
  require(b.max_event_depth >= 1 && b.max_events_per_node >= 1 && b.max_total_nodes >= 1,
          "expansion budget values must be at least 1");
  require(graph.find(graph.behavior_node_id()) != nullptr, "expand: graph has no behavior node");
  Expander ex(db, oracle, options);
  ex.events(graph);
  if (!options.events_only) ex.entities(graph);
  return graph;
}

std::vector<ScenarioGraph> enumerate_scenarios(const ScenarioGraph& graph) {
  std::vector<std::vector<NodeId>> paths;  // cause first
  std::vector<NodeId> stack;
  std::function<void(NodeId)> walk = [&](NodeId v) {
    stack.push_back(v);
    auto causes = graph.causes_of(v);
    if (causes.empty()) {
      paths.emplace_back(stack.rbegin(), stack.rend());
    } else {
      for (NodeId c : causes) walk(c);
    }
    stack.pop_back();
  };
  walk(graph.behavior_node_id());

  std::vector<std::pair<std::vector<std::string>, ScenarioGraph>> out;
  for (const auto& path : paths) {
    bool simulatable = std::none_of(path.begin(), path.end(), [&](NodeId id) {
      return graph.event(id)->flags.count(EventFlag::kUnsimulatable) > 0;
    });
    if (!simulatable) continue;
    std::set<NodeId> keep(path.begin(), path.end());
    std::vector<std::string> texts;
    for (NodeId ev : path) {
      texts.push_back(graph.event(ev)->text);
      for (NodeId ent : graph.supporters_of(ev)) {
        keep.insert(ent);
        for (NodeId prop : graph.properties_of(ent)) keep.insert(prop);
      }
    }
    out.emplace_back(std::move(texts), graph.restricted_to(keep));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ScenarioGraph> result;
  for (auto& [texts, g] : out) result.push_back(std::move(g));
  return result;
}

ScenarioGraph perturb_property(const ScenarioGraph& graph, const AssetDatabase& db,
                               NodeId property_node_id, const std::string& new_value) {
  const PropertyNode* p = graph.property(property_node_id);
  require(p != nullptr, "perturb_property: node " + std::to_string(property_node_id) +
                            " is not a property node");
  const AssetNode* key = db.find(p->key);
  if (key && key->kind == AssetKind::kProperty) {
    auto states = property_states(db, p->key);
    if (!states.empty() && std::find(states.begin(), states.end(), new_value) == states.end()) {
      fail(ErrorKind::kPrecondition, "perturb_property: '" + new_value + "' is not a state of '" +
                                         p->key + "'");
    }
  }
  ScenarioGraph out = graph;
  out.set_property_value(property_node_id, new_value);
  return out;
}

std::vector<NodeId> find_properties(const ScenarioGraph& graph, const std::string& key) {
  std::vector<NodeId> out;
  for (const auto& n : graph.nodes()) {
    if (const auto* p = std::get_if<PropertyNode>(&n); p && p->key == key) out.push_back(p->id);
  }
  return out;
}

}  // namespace regen
