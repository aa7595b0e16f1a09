#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regen/asset_db.hpp"
#include "regen/oracle.hpp"
#include "regen/scenario_graph.hpp"

namespace regen {

struct BehaviorSpec {
  std::string description;
  std::string route_id;
};

struct ExpansionBudget {
  std::uint32_t max_event_depth = 1;
  std::uint32_t max_events_per_node = 10;
  std::uint32_t max_total_nodes = 200;
};

struct ExpansionOptions {
  ExpansionBudget budget;
  std::optional<std::string> prior;
  // Extra causes for the behavior node, merged with the oracle's proposals.
  std::vector<std::string> user_causes;
  // Phase 1 only: causes without entities or properties.
  bool events_only = false;
};

// Throws kPrecondition on an empty description or route id.
ScenarioGraph init_graph(const BehaviorSpec& behavior);

// Event texts from `event` to the behavior node, cause first. When an event
// has several effects the lowest-id effect is followed.
std::vector<std::string> causal_chain(const ScenarioGraph& graph, NodeId event);

// Oracle-proposed causes for `source`, deduplicated case-insensitively; the
// graph is not modified.
NameDescList propose_event_nodes(const ScenarioGraph& graph, NodeId source,
                                 const std::optional<std::string>& prior,
                                 const OracleHandle& oracle);

// Candidates for construct_edges: events carry (text, description); entities
// an asset id; properties a key and a value.
struct Candidate {
  std::string text;
  std::string description;
};

// Classifies the whole candidate set with one oracle call and adds the accepted
// nodes. For kCause, source is the effect event; for kSupport, the event; for
// kAttr, the entity node and `property_key` names the property. Returns the
// ids of the added nodes in candidate order. `truncated` reports accepted
// candidates dropped because of max_new_nodes.
std::vector<NodeId> construct_edges(ScenarioGraph& graph, NodeId source,
                                    const std::vector<Candidate>& candidates, EdgeFamily family,
                                    const OracleHandle& oracle, const std::string& property_key = {},
                                    std::uint32_t max_new_nodes = UINT32_MAX,
                                    bool* truncated = nullptr);

ScenarioGraph expand(ScenarioGraph graph, const AssetDatabase& db, const OracleHandle& oracle,
                     const ExpansionOptions& options = {});

// One subgraph per root-to-behavior cause path, skipping paths through
// unsimulatable events, sorted by event text sequence.
std::vector<ScenarioGraph> enumerate_scenarios(const ScenarioGraph& graph);

// Copy of the graph with one property value replaced. State-backed keys only
// accept database states.
ScenarioGraph perturb_property(const ScenarioGraph& graph, const AssetDatabase& db,
                               NodeId property_node_id, const std::string& new_value);

// Property node ids of the graph with the given key, by id.
std::vector<NodeId> find_properties(const ScenarioGraph& graph, const std::string& key);

}  // namespace regen
