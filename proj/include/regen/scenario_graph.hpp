#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "regen/asset_db.hpp"

namespace regen {

using NodeId = std::uint32_t;

// Markers explaining why an event stopped growing.
enum class EventFlag {
  kUnsimulatable,  // no entity in the asset db supports it
  kExhausted,      // the oracle accepted no causes for it
  kBudget,         // expansion stopped on a node/graph budget
};

std::string_view to_string(EventFlag flag);

struct EventNode {
  NodeId id = 0;
  std::string text;
  std::string description;
  std::uint32_t depth = 0;
  std::set<EventFlag> flags;
  friend bool operator==(const EventNode&, const EventNode&) = default;
};

struct EntityNode {
  NodeId id = 0;
  std::string asset_id;
  std::string instance_name;
  friend bool operator==(const EntityNode&, const EntityNode&) = default;
};

struct PropertyNode {
  NodeId id = 0;
  std::string key;
  std::string value;
  friend bool operator==(const PropertyNode&, const PropertyNode&) = default;
};

using GraphNode = std::variant<EventNode, EntityNode, PropertyNode>;

NodeId node_id(const GraphNode& node);

enum class EdgeFamily {
  kCause,    // event -> event (cause -> effect)
  kSupport,  // entity -> event
  kAttr,     // property -> entity
};

std::string_view to_string(EdgeFamily family);

struct GraphEdge {
  EdgeFamily family = EdgeFamily::kCause;
  NodeId from = 0;
  NodeId to = 0;
  friend auto operator<=>(const GraphEdge&, const GraphEdge&) = default;
};

// Typed causal scenario graph. Nodes are kept sorted by id and edges sorted;
// ids are allocated monotonically so insertion order is reproducible.
class ScenarioGraph {
 public:
  ScenarioGraph() = default;

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  NodeId behavior_node_id() const { return behavior_node_id_; }
  const std::string& route_id() const { return route_id_; }
  NodeId next_id() const { return next_id_; }

  std::size_t size() const { return nodes_.size(); }

  const GraphNode* find(NodeId id) const;
  const EventNode* event(NodeId id) const;
  const EntityNode* entity(NodeId id) const;
  const PropertyNode* property(NodeId id) const;
  const EventNode& behavior() const;

  std::vector<const EventNode*> events() const;
  std::vector<NodeId> causes_of(NodeId effect) const;
  std::vector<NodeId> effects_of(NodeId cause) const;
  std::vector<NodeId> supporters_of(NodeId event) const;
  std::vector<NodeId> properties_of(NodeId entity) const;
  std::size_t cause_in_degree(NodeId event) const { return causes_of(event).size(); }

  // Mutation API used by expansion. Each call keeps the graph invariants that
  // can be checked locally (types, acyclicity of cause edges).
  NodeId add_event(std::string text, std::string description, std::uint32_t depth);
  NodeId add_entity(std::string asset_id, std::string instance_name);
  NodeId add_property(std::string key, std::string value);
  // Throws kValidation when the edge would close a cause cycle or the
  // endpoints do not match the family.
  void add_edge(EdgeFamily family, NodeId from, NodeId to);
  void flag_event(NodeId id, EventFlag flag);
  void set_property_value(NodeId id, std::string value);

  static ScenarioGraph with_behavior(std::string text, std::string route_id);
  // Rebuilds a graph from serialized parts, re-checking edge typing and
  // cause acyclicity.
  static ScenarioGraph from_parts(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges,
                                  NodeId behavior_id, std::string route_id, NodeId next_id);

  // Restriction to a node subset; edges whose endpoints survive are kept.
  ScenarioGraph restricted_to(const std::set<NodeId>& keep) const;

  friend bool operator==(const ScenarioGraph&, const ScenarioGraph&) = default;

 private:
  GraphNode* find_mutable(NodeId id);
  bool reaches(NodeId from, NodeId to) const;  // along cause edges

  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  NodeId behavior_node_id_ = 0;
  NodeId next_id_ = 0;
  std::string route_id_;
};

// Checks every structural invariant, optionally against the asset database.
// Returns human-readable violations; empty means valid.
std::vector<std::string> check_graph(const ScenarioGraph& graph,
                                     const AssetDatabase* db = nullptr);

std::string serialize_graph(const ScenarioGraph& graph);
ScenarioGraph parse_graph(std::string_view text, const std::string& origin);
ScenarioGraph load_graph(const std::filesystem::path& path);

}  // namespace regen
