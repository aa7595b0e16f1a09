#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regen/geometry.hpp"
#include "regen/road_map.hpp"

namespace regen {

enum class LaneSelector { kSame, kAdjacent };

std::string_view to_string(LaneSelector s);
std::optional<LaneSelector> parse_lane_selector(std::string_view text);

// A location phrase realized as a longitudinal interval (meters, relative to
// the ego spawn along its lane chain) on the ego lane or its neighbor.
struct Region {
  std::string phrase;
  LaneSelector lane = LaneSelector::kSame;
  double lo = 0.0;
  double hi = 0.0;
  double center() const { return (lo + hi) / 2; }
  friend bool operator==(const Region&, const Region&) = default;
};

using PlacementVocabulary = std::map<std::string, Region, std::less<>>;

const PlacementVocabulary& default_vocabulary();

// Keys whose values are placement phrases ("starting location", "location").
bool is_location_key(std::string_view key);

// Canonical form used for vocabulary matching: lowercase, single spaces,
// no trailing punctuation.
std::string canonical_phrase(std::string_view text);

// Where the ego spawns: the reference for every region.
struct EgoAnchor {
  const Lane* lane = nullptr;
  double s = 0.0;
};

EgoAnchor anchor_for(const RoadMap& map, Vec2 ego_start);

struct Candidate2D {
  double offset = 0.0;  // along the ego lane chain
  Pose pose;
  friend bool operator==(const Candidate2D&, const Candidate2D&) = default;
};

// Poses covering [lo, hi] at grid_step spacing starting from lo, in offset
// order, each on a lane. Offsets that leave the map, or that have no
// neighboring lane for kAdjacent, are skipped.
std::vector<Candidate2D> region_candidates(const RoadMap& map, const EgoAnchor& anchor,
                                           const Region& region, double grid_step);

// Throws kPrecondition for phrases missing from the vocabulary.
std::vector<Candidate2D> enumerate_candidates(const PlacementVocabulary& vocab,
                                              std::string_view phrase, const RoadMap& map,
                                              const EgoAnchor& anchor, double grid_step);

}  // namespace regen
