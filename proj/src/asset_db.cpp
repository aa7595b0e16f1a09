#include "regen/asset_db.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "regen/error.hpp"
#include "regen/util.hpp"

namespace regen {
namespace {

constexpr std::pair<AssetKind, std::string_view> kKindNames[] = {
    {AssetKind::kEntityAgent, "entity-agent"},
    {AssetKind::kEntityObject, "entity-object"},
    {AssetKind::kProperty, "property"},
    {AssetKind::kBehavior, "behavior"},
    {AssetKind::kState, "state"},
    {AssetKind::kSensor, "sensor"},
};

[[noreturn]] void invalid(const std::string& node, const std::string& why) {
  fail(ErrorKind::kValidation, "asset db: node '" + node + "': " + why);
}

std::string field_string(const Json& object, const char* key,
                         const std::string& where, bool required) {
  auto it = object.find(key);
  if (it == object.end()) {
    if (required) fail(ErrorKind::kParse, where + "." + key + ": missing field");
    return {};
  }
  if (!it->is_string()) fail(ErrorKind::kParse, where + "." + key + ": expected string");
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(AssetKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<AssetKind> parse_asset_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

AssetDatabase AssetDatabase::build(std::vector<AssetNode> nodes,
                                   std::vector<AssetEdge> edges) {
  AssetDatabase db;
  std::sort(nodes.begin(), nodes.end(),
            [](const AssetNode& a, const AssetNode& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id.empty()) invalid("", "empty id");
    if (i > 0 && nodes[i].id == nodes[i - 1].id) invalid(nodes[i].id, "duplicate id");
    db.index_.emplace(nodes[i].id, i);
  }
  db.nodes_ = std::move(nodes);

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& e : edges) {
    if (!db.contains(e.from)) invalid(e.from, "edge endpoint does not exist");
    if (!db.contains(e.to)) invalid(e.to, "edge endpoint does not exist");
  }
  db.edges_ = std::move(edges);

  std::map<std::string, std::vector<const AssetNode*>> outgoing;
  std::map<std::string, int> indegree;
  for (const auto& e : db.edges_) {
    outgoing[e.from].push_back(db.find(e.to));
    ++indegree[e.to];
  }

  for (const auto& node : db.nodes_) {
    const auto& out = outgoing[node.id];
    auto targets_all = [&](auto pred) { return std::all_of(out.begin(), out.end(), pred); };
    switch (node.kind) {
      case AssetKind::kEntityAgent:
      case AssetKind::kEntityObject:
        if (!out.empty()) invalid(node.id, "entity nodes only have incoming edges");
        break;
      case AssetKind::kProperty:
        if (out.empty()) invalid(node.id, "property needs at least one outgoing edge");
        if (!targets_all([](const AssetNode* t) {
              return t->is_entity() || t->kind == AssetKind::kBehavior ||
                     t->kind == AssetKind::kSensor;
            })) {
          invalid(node.id, "property must attach to an entity, behavior or sensor");
        }
        break;
      case AssetKind::kState:
        if (indegree[node.id] != 0) invalid(node.id, "state nodes are leaves");
        if (out.empty()) invalid(node.id, "state must belong to a property");
        if (!targets_all([](const AssetNode* t) { return t->kind == AssetKind::kProperty; })) {
          invalid(node.id, "state must attach to property nodes only");
        }
        break;
      case AssetKind::kBehavior:
        if (out.empty()) invalid(node.id, "behavior is not attached to any entity");
        if (!targets_all([](const AssetNode* t) { return t->is_entity(); })) {
          invalid(node.id, "behavior attached to a non-entity node");
        }
        break;
      case AssetKind::kSensor:
        if (out.empty()) invalid(node.id, "sensor is not attached to any entity");
        if (!targets_all([](const AssetNode* t) { return t->is_entity(); })) {
          invalid(node.id, "sensor attached to a non-entity node");
        }
        break;
    }
  }

  // Cycle check (iterative DFS colouring).
  std::map<std::string, int> colour;
  for (const auto& root : db.nodes_) {
    if (colour[root.id] != 0) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{root.id, 0}};
    colour[root.id] = 1;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto& out = outgoing[id];
      if (next < out.size()) {
        const std::string& child = out[next++]->id;
        if (colour[child] == 1) invalid(child, "asset graph contains a cycle");
        if (colour[child] == 0) {
          colour[child] = 1;
          stack.emplace_back(child, 0);
        }
      } else {
        colour[id] = 2;
        stack.pop_back();
      }
    }
  }
  return db;
}

const AssetNode* AssetDatabase::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::vector<std::string> AssetDatabase::options_of(std::string_view to,
                                                   AssetKind kind) const {
  std::vector<std::string> out;
  for (const auto& e : edges_) {
    if (e.to != to) continue;
    const AssetNode* source = find(e.from);
    if (source != nullptr && source->kind == kind) out.push_back(e.from);
  }
  std::sort(out.begin(), out.end());
  return out;
}

AssetDatabase parse_asset_db(std::string_view text, const std::string& origin) {
  const Json doc = parse_json(text, origin);
  if (!doc.is_object()) fail(ErrorKind::kParse, origin + ": expected an object");
  std::vector<AssetNode> nodes;
  std::vector<AssetEdge> edges;
  const auto nodes_it = doc.find("nodes");
  const auto edges_it = doc.find("edges");
  if (nodes_it == doc.end() || !nodes_it->is_array()) {
    fail(ErrorKind::kParse, origin + ": nodes: expected an array");
  }
  if (edges_it == doc.end() || !edges_it->is_array()) {
    fail(ErrorKind::kParse, origin + ": edges: expected an array");
  }
  for (std::size_t i = 0; i < nodes_it->size(); ++i) {
    const Json& item = (*nodes_it)[i];
    const std::string where = origin + ": nodes[" + std::to_string(i) + "]";
    if (!item.is_object()) fail(ErrorKind::kParse, where + ": expected an object");
    AssetNode node;
    node.id = field_string(item, "id", where, true);
    const std::string kind = field_string(item, "kind", where, true);
    auto parsed = parse_asset_kind(kind);
    if (!parsed) fail(ErrorKind::kParse, where + ".kind: unknown kind '" + kind + "'");
    node.kind = *parsed;
    node.display_name = field_string(item, "display_name", where, false);
    if (node.display_name.empty()) node.display_name = node.id;
    node.blueprint_id = field_string(item, "blueprint_id", where, false);
    nodes.push_back(std::move(node));
  }
  for (std::size_t i = 0; i < edges_it->size(); ++i) {
    const Json& item = (*edges_it)[i];
    const std::string where = origin + ": edges[" + std::to_string(i) + "]";
    if (!item.is_object()) fail(ErrorKind::kParse, where + ": expected an object");
    edges.push_back({field_string(item, "from", where, true),
                     field_string(item, "to", where, true)});
  }
  return AssetDatabase::build(std::move(nodes), std::move(edges));
}

AssetDatabase load_asset_db(const std::filesystem::path& path) {
  return parse_asset_db(read_file(path), path.string());
}

std::string serialize_asset_db(const AssetDatabase& db) {
  Json doc;
  Json nodes = Json::array();
  for (const auto& n : db.nodes()) {
    Json item;
    item["id"] = n.id;
    item["kind"] = std::string(to_string(n.kind));
    item["display_name"] = n.display_name;
    if (!n.blueprint_id.empty()) item["blueprint_id"] = n.blueprint_id;
    nodes.push_back(std::move(item));
  }
  Json edges = Json::array();
  for (const auto& e : db.edges()) {
    Json item;
    item["from"] = e.from;
    item["to"] = e.to;
    edges.push_back(std::move(item));
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  return dump_json(doc);
}

std::vector<AssetNode> list_entities(const AssetDatabase& db) {
  std::vector<AssetNode> out;
  for (const auto& n : db.nodes()) {
    if (n.is_entity()) out.push_back(n);
  }
  return out;
}

std::vector<std::string> property_states(const AssetDatabase& db,
                                         std::string_view property_id) {
  const AssetNode* node = db.find(property_id);
  if (node == nullptr || node->kind != AssetKind::kProperty) {
    fail(ErrorKind::kPrecondition,
         "unknown property '" + std::string(property_id) + "'");
  }
  return db.options_of(property_id, AssetKind::kState);
}

}  // namespace regen
