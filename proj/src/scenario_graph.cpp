#include "regen/scenario_graph.hpp"

#include <algorithm>
#include <map>

#include "regen/error.hpp"
#include "regen/util.hpp"

namespace regen {
namespace {

constexpr std::pair<EventFlag, std::string_view> kFlagNames[] = {
    {EventFlag::kUnsimulatable, "unsimulatable"},
    {EventFlag::kExhausted, "exhausted"},
    {EventFlag::kBudget, "budget"},
};

constexpr std::pair<EdgeFamily, std::string_view> kFamilyNames[] = {
    {EdgeFamily::kCause, "cause"},
    {EdgeFamily::kSupport, "support"},
    {EdgeFamily::kAttr, "attr"},
};

template <typename T>
bool holds(const GraphNode* node) {
  return node != nullptr && std::holds_alternative<T>(*node);
}

}  // namespace

std::string_view to_string(EventFlag flag) {
  for (const auto& [f, name] : kFlagNames) {
    if (f == flag) return name;
  }
  return "unknown";
}

std::string_view to_string(EdgeFamily family) {
  for (const auto& [f, name] : kFamilyNames) {
    if (f == family) return name;
  }
  return "unknown";
}

NodeId node_id(const GraphNode& node) {
  return std::visit([](const auto& n) { return n.id; }, node);
}

const GraphNode* ScenarioGraph::find(NodeId id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const GraphNode& n, NodeId key) { return node_id(n) < key; });
  if (it == nodes_.end() || node_id(*it) != id) return nullptr;
  return &*it;
}

GraphNode* ScenarioGraph::find_mutable(NodeId id) {
  return const_cast<GraphNode*>(std::as_const(*this).find(id));
}

const EventNode* ScenarioGraph::event(NodeId id) const {
  const GraphNode* node = find(id);
  return holds<EventNode>(node) ? &std::get<EventNode>(*node) : nullptr;
}

const EntityNode* ScenarioGraph::entity(NodeId id) const {
  const GraphNode* node = find(id);
  return holds<EntityNode>(node) ? &std::get<EntityNode>(*node) : nullptr;
}

const PropertyNode* ScenarioGraph::property(NodeId id) const {
  const GraphNode* node = find(id);
  return holds<PropertyNode>(node) ? &std::get<PropertyNode>(*node) : nullptr;
}

const EventNode& ScenarioGraph::behavior() const {
  const EventNode* node = event(behavior_node_id_);
  if (node == nullptr) fail(ErrorKind::kValidation, "graph has no behavior node");
  return *node;
}

std::vector<const EventNode*> ScenarioGraph::events() const {
  std::vector<const EventNode*> out;
  for (const auto& n : nodes_) {
    if (const auto* e = std::get_if<EventNode>(&n)) out.push_back(e);
  }
  return out;
}

std::vector<NodeId> ScenarioGraph::causes_of(NodeId effect) const {
  std::vector<NodeId> out;
  for (const auto& e : edges_) {
    if (e.family == EdgeFamily::kCause && e.to == effect) out.push_back(e.from);
  }
  return out;
}

std::vector<NodeId> ScenarioGraph::effects_of(NodeId cause) const {
  std::vector<NodeId> out;
  for (const auto& e : edges_) {
    if (e.family == EdgeFamily::kCause && e.from == cause) out.push_back(e.to);
  }
  return out;
}

std::vector<NodeId> ScenarioGraph::supporters_of(NodeId event_id) const {
  std::vector<NodeId> out;
  for (const auto& e : edges_) {
    if (e.family == EdgeFamily::kSupport && e.to == event_id) out.push_back(e.from);
  }
  return out;
}

std::vector<NodeId> ScenarioGraph::properties_of(NodeId entity_id) const {
  std::vector<NodeId> out;
  for (const auto& e : edges_) {
    if (e.family == EdgeFamily::kAttr && e.to == entity_id) out.push_back(e.from);
  }
  return out;
}

NodeId ScenarioGraph::add_event(std::string text, std::string description,
                                std::uint32_t depth) {
  EventNode node{next_id_, std::move(text), std::move(description), depth, {}};
  nodes_.emplace_back(std::move(node));
  return next_id_++;
}

NodeId ScenarioGraph::add_entity(std::string asset_id, std::string instance_name) {
  nodes_.emplace_back(EntityNode{next_id_, std::move(asset_id), std::move(instance_name)});
  return next_id_++;
}

NodeId ScenarioGraph::add_property(std::string key, std::string value) {
  nodes_.emplace_back(PropertyNode{next_id_, std::move(key), std::move(value)});
  return next_id_++;
}

bool ScenarioGraph::reaches(NodeId from, NodeId to) const {
  std::vector<NodeId> stack{from};
  std::set<NodeId> seen;
  while (!stack.empty()) {
    NodeId current = stack.back();
    stack.pop_back();
    if (current == to) return true;
    if (!seen.insert(current).second) continue;
    for (NodeId next : effects_of(current)) stack.push_back(next);
  }
  return false;
}

void ScenarioGraph::add_edge(EdgeFamily family, NodeId from, NodeId to) {
  const GraphNode* source = find(from);
  const GraphNode* target = find(to);
  if (source == nullptr || target == nullptr) {
    fail(ErrorKind::kValidation, "edge references unknown node " +
                                     std::to_string(source == nullptr ? from : to));
  }
  bool typed = false;
  switch (family) {
    case EdgeFamily::kCause:
      typed = holds<EventNode>(source) && holds<EventNode>(target);
      break;
    case EdgeFamily::kSupport:
      typed = holds<EntityNode>(source) && holds<EventNode>(target);
      break;
    case EdgeFamily::kAttr:
      typed = holds<PropertyNode>(source) && holds<EntityNode>(target);
      break;
  }
  if (!typed) {
    fail(ErrorKind::kValidation, "type mismatch for " + std::string(to_string(family)) +
                                     " edge " + std::to_string(from) + "->" + std::to_string(to));
  }
  if (family == EdgeFamily::kCause && (from == to || reaches(to, from))) {
    fail(ErrorKind::kValidation, "cause edge " + std::to_string(from) + "->" +
                                     std::to_string(to) + " would create a cycle");
  }
  GraphEdge edge{family, from, to};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), edge);
  if (it != edges_.end() && *it == edge) return;
  edges_.insert(it, edge);
}

void ScenarioGraph::flag_event(NodeId id, EventFlag flag) {
  GraphNode* node = find_mutable(id);
  if (!holds<EventNode>(node)) fail(ErrorKind::kPrecondition, "not an event node");
  std::get<EventNode>(*node).flags.insert(flag);
}

void ScenarioGraph::set_property_value(NodeId id, std::string value) {
  GraphNode* node = find_mutable(id);
  if (!holds<PropertyNode>(node)) {
    fail(ErrorKind::kPrecondition, "node " + std::to_string(id) + " is not a property node");
  }
  std::get<PropertyNode>(*node).value = std::move(value);
}

ScenarioGraph ScenarioGraph::with_behavior(std::string text, std::string route_id) {
  ScenarioGraph graph;
  graph.route_id_ = std::move(route_id);
  graph.behavior_node_id_ = graph.add_event(std::move(text), "", 0);
  return graph;
}

ScenarioGraph ScenarioGraph::from_parts(std::vector<GraphNode> nodes,
                                        std::vector<GraphEdge> edges, NodeId behavior_id,
                                        std::string route_id, NodeId next_id) {
  ScenarioGraph graph;
  std::sort(nodes.begin(), nodes.end(),
            [](const GraphNode& a, const GraphNode& b) { return node_id(a) < node_id(b); });
  NodeId max_id = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0 && node_id(nodes[i]) == node_id(nodes[i - 1])) {
      fail(ErrorKind::kValidation, "duplicate node id " + std::to_string(node_id(nodes[i])));
    }
    max_id = std::max(max_id, node_id(nodes[i]));
  }
  graph.nodes_ = std::move(nodes);
  graph.behavior_node_id_ = behavior_id;
  graph.route_id_ = std::move(route_id);
  graph.next_id_ = std::max<NodeId>(next_id, graph.nodes_.empty() ? 0 : max_id + 1);
  for (const auto& e : edges) graph.add_edge(e.family, e.from, e.to);
  return graph;
}

ScenarioGraph ScenarioGraph::restricted_to(const std::set<NodeId>& keep) const {
  ScenarioGraph out;
  out.behavior_node_id_ = behavior_node_id_;
  out.next_id_ = next_id_;
  out.route_id_ = route_id_;
  for (const auto& n : nodes_) {
    if (keep.count(node_id(n))) out.nodes_.push_back(n);
  }
  for (const auto& e : edges_) {
    if (keep.count(e.from) && keep.count(e.to)) out.edges_.push_back(e);
  }
  return out;
}

std::vector<std::string> check_graph(const ScenarioGraph& graph, const AssetDatabase* db) {
  std::vector<std::string> problems;
  const EventNode* behavior = graph.event(graph.behavior_node_id());
  if (behavior == nullptr) {
    problems.push_back("behavior node is missing or not an event");
  } else if (!graph.effects_of(behavior->id).empty()) {
    problems.push_back("behavior node has outgoing cause edges");
  }

  // Cause subgraph must be acyclic: Kahn's algorithm over event nodes.
  std::map<NodeId, int> indegree;
  for (const auto* e : graph.events()) indegree[e->id] = 0;
  for (const auto& e : graph.edges()) {
    if (e.family == EdgeFamily::kCause) ++indegree[e.to];
  }
  std::vector<NodeId> ready;
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) ready.push_back(id);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    NodeId id = ready.back();
    ready.pop_back();
    ++visited;
    for (NodeId next : graph.effects_of(id)) {
      if (--indegree[next] == 0) ready.push_back(next);
    }
  }
  if (visited != indegree.size()) problems.push_back("cause edges contain a cycle");

  for (const auto& n : graph.nodes()) {
    if (const auto* entity = std::get_if<EntityNode>(&n)) {
      bool supported = false;
      for (const auto& e : graph.edges()) {
        if (e.family == EdgeFamily::kSupport && e.from == entity->id) supported = true;
      }
      if (!supported) {
        problems.push_back("entity '" + entity->instance_name + "' has no support edge");
      }
      if (db != nullptr && !db->contains(entity->asset_id)) {
        problems.push_back("entity '" + entity->instance_name + "' uses unknown asset '" +
                           entity->asset_id + "'");
      }
    } else if (const auto* prop = std::get_if<PropertyNode>(&n)) {
      int owners = 0;
      NodeId owner = 0;
      for (const auto& e : graph.edges()) {
        if (e.family == EdgeFamily::kAttr && e.from == prop->id) {
          ++owners;
          owner = e.to;
        }
      }
      if (owners != 1) {
        problems.push_back("property '" + prop->key + "' must have exactly one owner");
        continue;
      }
      if (db == nullptr) continue;
      const EntityNode* entity = graph.entity(owner);
      if (entity == nullptr) continue;
      if (prop->key == "behavior") {
        auto allowed = db->behaviors_of(entity->asset_id);
        if (std::find(allowed.begin(), allowed.end(), prop->value) == allowed.end()) {
          problems.push_back("behavior '" + prop->value + "' is not available for '" +
                             entity->asset_id + "'");
        }
        continue;
      }
      const AssetNode* asset = db->find(prop->key);
      if (asset != nullptr && asset->kind == AssetKind::kProperty) {
        auto states = property_states(*db, prop->key);
        if (!states.empty() &&
            std::find(states.begin(), states.end(), prop->value) == states.end()) {
          problems.push_back("property '" + prop->key + "' has illegal value '" +
                             prop->value + "'");
        }
      }
    }
  }
  return problems;
}

std::string serialize_graph(const ScenarioGraph& graph) {
  Json doc;
  doc["behavior_node_id"] = graph.behavior_node_id();
  doc["route_id"] = graph.route_id();
  doc["next_id"] = graph.next_id();
  Json nodes = Json::array();
  for (const auto& n : graph.nodes()) {
    Json item;
    if (const auto* e = std::get_if<EventNode>(&n)) {
      item["id"] = e->id;
      item["type"] = "event";
      item["text"] = e->text;
      item["description"] = e->description;
      item["depth"] = e->depth;
      Json flags = Json::array();
      for (EventFlag f : e->flags) flags.push_back(std::string(to_string(f)));
      item["flags"] = std::move(flags);
    } else if (const auto* en = std::get_if<EntityNode>(&n)) {
      item["id"] = en->id;
      item["type"] = "entity";
      item["asset_id"] = en->asset_id;
      item["instance_name"] = en->instance_name;
    } else {
      const auto& p = std::get<PropertyNode>(n);
      item["id"] = p.id;
      item["type"] = "property";
      item["key"] = p.key;
      item["value"] = p.value;
    }
    nodes.push_back(std::move(item));
  }
  Json edges = Json::array();
  for (const auto& e : graph.edges()) {
    Json item;
    item["type"] = std::string(to_string(e.family));
    item["from"] = e.from;
    item["to"] = e.to;
    edges.push_back(std::move(item));
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  return dump_json(doc);
}

ScenarioGraph parse_graph(std::string_view text, const std::string& origin) {
  const Json doc = parse_json(text, origin);
  auto get = [&](const Json& obj, const char* key, const std::string& where) -> const Json& {
    auto it = obj.find(key);
    if (it == obj.end()) fail(ErrorKind::kParse, where + "." + key + ": missing field");
    return *it;
  };
  try {
    std::vector<GraphNode> nodes;
    for (const auto& item : get(doc, "nodes", origin)) {
      const std::string type = get(item, "type", origin + ": node").get<std::string>();
      const NodeId id = get(item, "id", origin + ": node").get<NodeId>();
      if (type == "event") {
        EventNode e;
        e.id = id;
        e.text = get(item, "text", origin + ": node").get<std::string>();
        e.description = item.value("description", std::string());
        e.depth = item.value("depth", 0u);
        for (const auto& f : item.value("flags", Json::array())) {
          bool known = false;
          for (const auto& [flag, name] : kFlagNames) {
            if (name == f.get<std::string>()) {
              e.flags.insert(flag);
              known = true;
            }
          }
          if (!known) fail(ErrorKind::kParse, origin + ": unknown event flag " + f.dump());
        }
        nodes.emplace_back(std::move(e));
      } else if (type == "entity") {
        nodes.emplace_back(EntityNode{id, get(item, "asset_id", origin).get<std::string>(),
                                      get(item, "instance_name", origin).get<std::string>()});
      } else if (type == "property") {
        nodes.emplace_back(PropertyNode{id, get(item, "key", origin).get<std::string>(),
                                        get(item, "value", origin).get<std::string>()});
      } else {
        fail(ErrorKind::kParse, origin + ": unknown node type '" + type + "'");
      }
    }
    std::vector<GraphEdge> edges;
    for (const auto& item : get(doc, "edges", origin)) {
      const std::string type = get(item, "type", origin + ": edge").get<std::string>();
      GraphEdge edge;
      bool known = false;
      for (const auto& [family, name] : kFamilyNames) {
        if (name == type) {
          edge.family = family;
          known = true;
        }
      }
      if (!known) fail(ErrorKind::kParse, origin + ": unknown edge type '" + type + "'");
      edge.from = get(item, "from", origin + ": edge").get<NodeId>();
      edge.to = get(item, "to", origin + ": edge").get<NodeId>();
      edges.push_back(edge);
    }
    return ScenarioGraph::from_parts(std::move(nodes), std::move(edges),
                                     get(doc, "behavior_node_id", origin).get<NodeId>(),
                                     doc.value("route_id", std::string()),
                                     doc.value("next_id", 0u));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, origin + ": " + e.what());
  }
}

ScenarioGraph load_graph(const std::filesystem::path& path) {
  return parse_graph(read_file(path), path.string());
}

}  // namespace regen
