#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace regen {

enum class AssetKind {
  kEntityAgent,
  kEntityObject,
  kProperty,
  kBehavior,
  kState,
  kSensor,
};

std::string_view to_string(AssetKind kind);
std::optional<AssetKind> parse_asset_kind(std::string_view text);

struct AssetNode {
  std::string id;
  AssetKind kind = AssetKind::kEntityObject;
  std::string display_name;
  // Opaque simulator metadata (e.g. "vehicle.ford.ambulance").
  std::string blueprint_id;

  bool is_entity() const {
    return kind == AssetKind::kEntityAgent || kind == AssetKind::kEntityObject;
  }
  friend bool operator==(const AssetNode&, const AssetNode&) = default;
};

// An edge (from, to) reads "from is a property/behavior/state/sensor option
// of to": (siren -> ambulance), (on -> siren), (constant speed -> sedan).
struct AssetEdge {
  std::string from;
  std::string to;
  friend auto operator<=>(const AssetEdge&, const AssetEdge&) = default;
};

// Directed graph of everything the simulator can instantiate. Immutable once
// constructed; every constructor path validates the invariants.
class AssetDatabase {
 public:
  AssetDatabase() = default;

  // Throws kValidation naming the offending node when an invariant fails.
  static AssetDatabase build(std::vector<AssetNode> nodes,
                             std::vector<AssetEdge> edges);

  const std::vector<AssetNode>& nodes() const { return nodes_; }
  const std::vector<AssetEdge>& edges() const { return edges_; }

  const AssetNode* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  // Sources of edges pointing at `to` with the given kind, sorted by id.
  std::vector<std::string> options_of(std::string_view to, AssetKind kind) const;

  // Property nodes attached directly to an entity, sorted.
  std::vector<std::string> properties_of(std::string_view asset_id) const {
    return options_of(asset_id, AssetKind::kProperty);
  }
  std::vector<std::string> behaviors_of(std::string_view entity_id) const {
    return options_of(entity_id, AssetKind::kBehavior);
  }
  std::vector<std::string> sensors_of(std::string_view entity_id) const {
    return options_of(entity_id, AssetKind::kSensor);
  }

  friend bool operator==(const AssetDatabase&, const AssetDatabase&) = default;

 private:
  std::vector<AssetNode> nodes_;  // sorted by id
  std::vector<AssetEdge> edges_;  // sorted
  std::map<std::string, std::size_t, std::less<>> index_;
};

AssetDatabase parse_asset_db(std::string_view text, const std::string& origin);
AssetDatabase load_asset_db(const std::filesystem::path& path);
std::string serialize_asset_db(const AssetDatabase& db);

// Entity nodes (agents and objects) sorted by id.
std::vector<AssetNode> list_entities(const AssetDatabase& db);

// Sorted state options of a property. Empty when the property carries
// oracle-supplied values (e.g. locations). Throws kPrecondition for ids that
// are not property nodes.
std::vector<std::string> property_states(const AssetDatabase& db,
                                         std::string_view property_id);

}  // namespace regen
