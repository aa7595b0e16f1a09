#include "regen/placement.hpp"

#include <cmath>

#include "regen/error.hpp"
#include "regen/util.hpp"

namespace regen {

std::string_view to_string(LaneSelector s) { return s == LaneSelector::kSame ? "same" : "adjacent"; }

std::optional<LaneSelector> parse_lane_selector(std::string_view text) {
  if (text == "same") return LaneSelector::kSame;
  if (text == "adjacent") return LaneSelector::kAdjacent;
  return std::nullopt;
}

const PlacementVocabulary& default_vocabulary() {
  static const PlacementVocabulary vocab = [] {
    PlacementVocabulary v;
    auto add = [&](std::string phrase, LaneSelector lane, double lo, double hi) {
      v.emplace(phrase, Region{phrase, lane, lo, hi});
    };
    add("behind the ego-vehicle on adjacent lane", LaneSelector::kAdjacent, -40.0, -10.0);
    add("behind the ego-vehicle on same lane", LaneSelector::kSame, -40.0, -10.0);
    add("in front of ego-vehicle on adjacent lane", LaneSelector::kAdjacent, 10.0, 80.0);
    add("in front of ego-vehicle on same lane", LaneSelector::kSame, 10.0, 80.0);
    return v;
  }();
  return vocab;
}

bool is_location_key(std::string_view key) { return ends_with(key, "location"); }

std::string canonical_phrase(std::string_view text) {
  std::string s = normalize_space(to_lower(text));
  while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';')) s.pop_back();
  return trim(s);
}

EgoAnchor anchor_for(const RoadMap& map, Vec2 ego_start) {
  auto lp = map.on_lane(ego_start);
  require(lp.has_value(), "ego start is not on a drivable lane");
  return {lp->lane, lp->proj.s};
}

std::vector<Candidate2D> region_candidates(const RoadMap& map, const EgoAnchor& anchor,
                                           const Region& region, double grid_step) {
  require(grid_step > 0, "grid_step must be positive");
  require(region.lo <= region.hi, "region '" + region.phrase + "': empty interval");
  std::vector<Candidate2D> out;
  int n = static_cast<int>(std::floor((region.hi - region.lo) / grid_step + 1e-9));
  for (int k = 0; k <= n; ++k) {
    double offset = region.lo + k * grid_step;
    auto lp = advance_along(map, *anchor.lane, anchor.s, offset);
    if (!lp) continue;
    const Lane* lane = lp->lane;
    Vec2 p = lp->proj.point;
    if (region.lane == LaneSelector::kAdjacent) {
      const std::string& nb = !lane->left.empty() ? lane->left : lane->right;
      if (nb.empty()) continue;
      lane = map.lane(nb);
      Projection pr = project_onto(lane->centerline, lane->s, p);
      if (pr.s <= 0.0 || pr.s >= lane->length()) continue;  // off the neighbor's extent
      p = pr.point;
      Pose at = pose_at(lane->centerline, lane->s, pr.s);
      out.push_back({offset, {p.x, p.y, at.heading}});
    } else {
      Pose at = pose_at(lane->centerline, lane->s, lp->proj.s);
      out.push_back({offset, {p.x, p.y, at.heading}});
    }
  }
  return out;
}

std::vector<Candidate2D> enumerate_candidates(const PlacementVocabulary& vocab,
                                              std::string_view phrase, const RoadMap& map,
                                              const EgoAnchor& anchor, double grid_step) {
  auto it = vocab.find(canonical_phrase(phrase));
  if (it == vocab.end()) {
    fail(ErrorKind::kPrecondition, "unknown location phrase '" + std::string(phrase) + "'");
  }
  return region_candidates(map, anchor, it->second, grid_step);
}

}  // namespace regen
