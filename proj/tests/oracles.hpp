// Independent reference implementations used to cross-check the library.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "regen/error.hpp"
#include "regen/fsm.hpp"
#include "regen/solver.hpp"

namespace oracle {

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string w;
  for (char c : text + " ") {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!w.empty()) {
      out.push_back(w);
      w.clear();
    }
  }
  return out;
}

// n-grams as space-joined strings
inline std::map<std::string, int> grams(const std::vector<std::string>& w, int n) {
  std::map<std::string, int> out;
  for (int i = 0; i + n <= static_cast<int>(w.size()); ++i) {
    std::string g;
    for (int k = 0; k < n; ++k) g += w[i + k] + " ";
    out[g]++;
  }
  return out;
}

// Textbook BLEU with the documented smoothing: epsilon 0.1 for zero matches,
// orders without hypothesis n-grams dropped, closest reference length.
inline double bleu(const std::vector<std::string>& hyp, const std::vector<std::vector<std::string>>& refs,
                   int max_n = 4) {
  if (hyp.empty()) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    auto h = grams(hyp, n);
    int total = 0;
    for (auto& [g, c] : h) total += c;
    if (total == 0) continue;
    int match = 0;
    for (auto& [g, c] : h) {
      int best = 0;
      for (const auto& r : refs) {
        auto rg = grams(r, n);
        auto it = rg.find(g);
        if (it != rg.end()) best = std::max(best, it->second);
      }
      match += std::min(c, best);
    }
    log_sum += std::log((match > 0 ? match : 0.1) / static_cast<double>(total));
    ++orders;
  }
  int c = static_cast<int>(hyp.size());
  int r = static_cast<int>(refs[0].size());
  for (const auto& ref : refs) {
    int len = static_cast<int>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) r = len;
  }
  double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / c);
  return bp * std::exp(log_sum / orders);
}

inline double self_bleu(const std::vector<std::string>& texts, int max_n = 4) {
  double sum = 0.0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::vector<std::vector<std::string>> refs;
    for (std::size_t j = 0; j < texts.size(); ++j) {
      if (j != i) refs.push_back(words(texts[j]));
    }
    sum += bleu(words(texts[i]), refs, max_n);
  }
  return sum / texts.size();
}

// Stage-sequence checker by dynamic programming over ticks: reach[k][t] says
// stages 0..k can be met at strictly increasing ticks ending with k at t.
// Returns the earliest tick of every stage reachable this way.
inline std::vector<long> stage_ticks(const std::vector<std::vector<int>>& stages,
                                     const std::vector<std::vector<char>>& values) {
  const std::size_t T = values.size();
  std::vector<long> out;
  std::vector<char> prev(T, 1);
  bool first = true;
  for (const auto& stage : stages) {
    std::vector<char> cur(T, 0);
    bool any_before = false;
    for (std::size_t t = 0; t < T; ++t) {
      bool holds = std::all_of(stage.begin(), stage.end(), [&](int b) { return values[t][b] != 0; });
      if (holds && (first || any_before)) cur[t] = 1;
      if (prev[t]) any_before = true;
    }
    first = false;
    auto it = std::find(cur.begin(), cur.end(), 1);
    if (it == cur.end()) break;
    out.push_back(static_cast<long>(it - cur.begin()));
    prev = cur;
  }
  return out;
}

inline std::vector<std::vector<int>> stage_indices(const regen::TaskFsm& fsm,
                                                   const std::vector<regen::AbstractState>& bindings) {
  std::vector<std::vector<int>> out;
  for (const auto& st : fsm.stages) {
    std::vector<int> idx;
    for (const auto& req : st) idx.push_back(regen::binding_index(bindings, req));
    out.push_back(idx);
  }
  return out;
}

struct BruteForce {
  bool feasible = false;
  std::size_t candidates = 0;
};

// Every joint candidate that passes the spawn-gap filter, rolled out in
// arbitrary order.
inline BruteForce exhaustive_placement(const regen::ScenarioConfig& cfg, const regen::ScenarioContext& ctx,
                                       const regen::SearchOptions& search) {
  using namespace regen;
  const RoadMap& map = *ctx.map;
  EgoAnchor anchor = anchor_for(map, ctx.route.start);
  std::vector<std::vector<EntityCandidate>> lists;
  for (const auto& pv : cfg.placement_vars) lists.push_back(entity_candidates(pv, map, anchor, search));
  BruteForce out;
  std::vector<std::size_t> idx(lists.size(), 0);
  if (std::any_of(lists.begin(), lists.end(), [](const auto& l) { return l.empty(); })) return out;
  while (true) {
    Assignments a;
    std::vector<Vec2> spawns;
    for (std::size_t i = 0; i < lists.size(); ++i) {
      const auto& as = lists[i][idx[i]].assignment;
      a[cfg.placement_vars[i].name] = as;
      if (cfg.placement_vars[i].dynamic()) spawns.push_back({as.x0, as.y0});
    }
    if (min_spawn_gap_check(spawns, map, anchor, search.gap_min)) {
      ++out.candidates;
      try {
        if (verify_assignment(cfg, ctx, a, search.max_ticks, search.seed).verdict == Verdict::kAccepted) {
          out.feasible = true;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasible) throw;
      }
    }
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == lists[k].size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return out;
}

}  // namespace oracle
