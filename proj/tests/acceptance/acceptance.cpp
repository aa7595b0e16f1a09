// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "../oracles.hpp"
#include "../random_instances.hpp"
#include "regen/error.hpp"
#include "regen/expansion.hpp"
#include "regen/metrics.hpp"
#include "regen/pipeline.hpp"

namespace fs = std::filesystem;
using namespace regen;

namespace {

const fs::path kRoot = data_dir();
const std::string kBehavior = "The ego-vehicle stopped abruptly";

OracleHandle scripted_oracle() { return OracleHandle::scripted_file(kRoot / "transcripts" / "abrupt_stop.transcript"); }
AssetDatabase driving_db() { return load_asset_db(kRoot / "assets" / "driving.assetdb"); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Collects the reasons a criterion failed; empty means PASS.
struct Check {
  std::vector<std::string> problems;
  void expect(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
};

const EventNode* event_named(const ScenarioGraph& g, const std::string& text) {
  for (const auto* e : g.events()) {
    if (e->text == text) return e;
  }
  return nullptr;
}

ScenarioGraph ambulance_subgraph() {
  for (auto& sg : enumerate_scenarios(load_graph(kRoot / "golden" / "abrupt_stop.graph.json"))) {
    if (event_named(sg, "emergency vehicle approaching from behind")) return sg;
  }
  fail(ErrorKind::kPrecondition, "golden graph has no ambulance path");
}

void transcript_replay(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto graph = expand(init_graph({kBehavior, "straight_stop_abruptly"}), driving_db(), scripted_oracle());
  double dt = seconds_since(t0);
  c.expect(serialize_graph(graph) == read_file(kRoot / "golden" / "abrupt_stop.graph.json"),
           "graph differs from golden file");
  c.expect(graph.causes_of(graph.behavior_node_id()).size() == 6, "expected 6 cause edges");
  c.expect(event_named(graph, "a jaywalker in another city") == nullptr, "implausible cause was kept");
  if (const auto* em = event_named(graph, "emergency vehicle approaching from behind")) {
    auto sup = graph.supporters_of(em->id);
    c.expect(sup.size() == 1 && graph.entity(sup[0])->asset_id == "ambulance", "emergency event not ambulance-only");
    if (sup.size() == 1) {
      std::map<std::string, std::string> props;
      for (auto p : graph.properties_of(sup[0])) props[graph.property(p)->key] = graph.property(p)->value;
      c.expect(props["siren"] == "on", "siren is not on");
      c.expect(props["starting location"] == "behind the ego-vehicle on adjacent lane", "wrong starting location");
    }
  } else {
    c.problems.push_back("emergency event missing");
  }
  const auto* tree = event_named(graph, "a tree fell in front");
  c.expect(tree && tree->flags.count(EventFlag::kUnsimulatable), "tree event not flagged unsimulatable");
  c.expect(dt < 5.0, "took " + std::to_string(dt) + " s");
}

void grounding_golden(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto cfg = compile(ambulance_subgraph(), driving_db(), scripted_oracle());
  double dt = seconds_since(t0);
  auto golden = load_config(kRoot / "golden" / "ambulance.config.json");
  auto strip = [](ScenarioConfig x) {
    x.source.clear();
    return serialize_config(x);
  };
  c.expect(strip(cfg) == strip(golden), "config differs from golden file");
  const std::vector<std::vector<StageRequirement>> expected_stages = {
      {{"ambulance1", "Ambulance Approaching"}, {"ego-vehicle", "Ego Driving Steady"}},
      {{"ambulance1", "Ambulance Close to Ego"}},
      {{"ego-vehicle", "Ego Braking"}},
      {{"ego-vehicle", "Ego Stopped Abruptly"}},
      {{"ambulance1", "Ambulance Passing Ego"}},
  };
  c.expect(cfg.fsm.stages == expected_stages, "stage structure differs");
  std::set<std::string> used;
  for (const auto& p : cfg.predicates) {
    for (const auto& n : p.expr.predicate_names()) used.insert(n);
  }
  const std::set<std::string> seven = {"behind_vehicle",   "right_in_front", "are_close_by",
                                       "is_currently_moving", "is_currently_stopped", "is_braking",
                                       "is_ego_driving_steady"};
  c.expect(used == seven, "bindings do not use exactly the seven expected predicates");
  c.expect(dt < 5.0, "took " + std::to_string(dt) + " s");
}

void end_to_end(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto cfg = load_config(kRoot / "golden" / "ambulance.config.json");
  auto ctx = load_context(kRoot / "maps", cfg.route_id);
  c.expect(ctx.route.map_id == "straight_2lane", "ambulance route is not on straight_2lane");
  auto solved = solve_placement(cfg, ctx, {});
  c.expect(solved.feasible && solved.witness.verdict == Verdict::kAccepted, "solver did not find an accepted rollout");
  const auto& log = solved.witness.stage_log;
  c.expect(log.size() == cfg.fsm.stages.size(), "stage_log incomplete");
  for (std::size_t i = 1; i < log.size(); ++i) c.expect(log[i] > log[i - 1], "stage_log not strictly increasing");
  Assignments fixed{{"ambulance1", {-25.0, 4.0, 80.0, 4.0, 40.0 / 3.6}}};
  auto r = verify_assignment(cfg, ctx, fixed, 600, 0);
  c.expect(r.verdict == Verdict::kAccepted, "fixed assignment verdict " + std::string(to_string(r.verdict)));
  double dt = seconds_since(t0);
  c.expect(dt < 30.0, "took " + std::to_string(dt) + " s");
}

void solver_equivalence(Check& c) {
  std::mt19937_64 rng(20240501);
  auto ctx = load_context(kRoot / "maps", "straight_stop_abruptly");
  EgoAnchor anchor = anchor_for(*ctx.map, ctx.route.start);
  SearchOptions search;
  search.max_ticks = 300;
  search.max_candidates = 100000;
  int done = 0, feasible = 0;
  while (done < 20) {
    auto cfg = gen::random_config(rng, ctx.route.id);
    std::size_t space = 1;
    for (const auto& pv : cfg.placement_vars) space *= entity_candidates(pv, *ctx.map, anchor, search).size();
    if (space == 0 || space > 500) continue;
    ++done;
    auto solved = solve_placement(cfg, ctx, search);
    auto brute = oracle::exhaustive_placement(cfg, ctx, search);
    if (solved.feasible != brute.feasible) {
      c.problems.push_back("instance " + std::to_string(done) + ": solver " + std::to_string(solved.feasible) +
                           " vs exhaustive " + std::to_string(brute.feasible));
    }
    if (solved.feasible) {
      ++feasible;
      auto r = verify_assignment(cfg, ctx, solved.assignments, search.max_ticks, search.seed);
      c.expect(r.verdict == Verdict::kAccepted, "witness of instance " + std::to_string(done) + " does not re-verify");
    }
  }
  std::cout << "  (" << feasible << "/20 feasible)\n";
}

void fsm_semantics(Check& c) {
  std::mt19937_64 rng(77);
  auto ctx_map = load_context(kRoot / "maps", "straight_drive_forward").map;
  auto routes = load_routes(kRoot / "maps" / "routes.json");
  const std::vector<std::string> route_ids = {"straight_drive_forward", "straight_stop_abruptly",
                                              "straight_change_lanes"};
  std::uniform_int_distribution<int> ticks(20, 200), route_pick(0, 2);
  int compared = 0;
  while (compared < 50) {
    ScenarioContext ctx{ctx_map, routes.at(route_ids[route_pick(rng)])};
    auto cfg = gen::random_config(rng, ctx.route.id);
    EgoAnchor anchor = anchor_for(*ctx.map, ctx.route.start);
    SearchOptions search;
    Assignments a;
    bool ok = true;
    for (const auto& pv : cfg.placement_vars) {
      auto cands = entity_candidates(pv, *ctx.map, anchor, search);
      if (cands.empty()) {
        ok = false;
        break;
      }
      a[pv.name] = cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng)].assignment;
    }
    if (!ok) continue;
    long max_ticks = ticks(rng);
    RunResult r;
    try {
      r = verify_assignment(cfg, ctx, a, max_ticks, rng());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kInfeasible) continue;
      throw;
    }
    ++compared;
    auto expected = oracle::stage_ticks(oracle::stage_indices(cfg.fsm, cfg.predicates), r.state_values);
    for (auto& t : expected) ++t;  // row k of state_values is tick k + 1
    Verdict v = expected.size() == cfg.fsm.stages.size() ? Verdict::kAccepted
                : r.collisions.empty()                    ? Verdict::kStalled
                                                          : Verdict::kCollided;
    if (v != r.verdict || expected != r.stage_log) {
      c.problems.push_back("trace " + std::to_string(compared) + ": run " + std::string(to_string(r.verdict)) +
                           " vs checker " + std::string(to_string(v)));
    }
    c.expect(static_cast<long>(r.state_values.size()) <= max_ticks, "trace longer than max_ticks");
  }
}

void self_bleu_oracle(Check& c) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab = {"the", "car", "stops", "a",     "red",  "light", "ambulance", "passes",
                                          "ego", "lane", "truck", "slows", "left", "turns", "cyclist"};
  std::uniform_int_distribution<int> n_texts(2, 10), len(0, 9);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  for (int k = 0; k < 10; ++k) {
    std::vector<std::string> texts(n_texts(rng));
    for (auto& t : texts) {
      int n = len(rng);
      for (int i = 0; i < n; ++i) t += (i ? " " : "") + vocab[word(rng)];
    }
    double got = self_bleu(texts);
    double want = oracle::self_bleu(texts);
    if (std::abs(got - want) > 1e-9) {
      c.problems.push_back("corpus " + std::to_string(k) + ": " + std::to_string(got) + " vs " + std::to_string(want));
    }
    auto shuffled = texts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    c.expect(self_bleu(shuffled) == got, "permutation changed the score of corpus " + std::to_string(k));
  }
  std::vector<std::string> same(5, "an ambulance approached from behind");
  c.expect(1.0 - self_bleu(same) == 0.0, "identical corpus diversity is not 0");
}

void sampling_protocol(Check& c) {
  auto corpus = load_corpus(kRoot / "corpora" / "driving_scenarios.txt");
  SampleOptions opt;
  opt.sample_size = 24;
  opt.repeats = 10;
  opt.seed = 2024;
  auto a = dump_json(report_to_json(sampled_diversity(corpus, Metric::kSelfBleu, opt)));
  auto b = dump_json(report_to_json(sampled_diversity(corpus, Metric::kSelfBleu, opt)));
  c.expect(a == b, "reports differ under the same seed");
  auto r = sampled_diversity(corpus, Metric::kSelfBleu, opt);
  c.expect(r.mean >= 0.0 && r.mean <= 1.0, "mean outside [0, 1]");
  for (double s : r.scores) c.expect(s >= 0.0 && s <= 1.0, "score outside [0, 1]");
  opt.sample_size = corpus.texts.size();
  c.expect(sampled_diversity(corpus, Metric::kSelfBleu, opt).std == 0.0, "full-corpus std is not 0");
}

void counterfactual(Check& c) {
  auto db = driving_db();
  auto oracle = scripted_oracle();
  auto graph = load_graph(kRoot / "fixtures" / "front_car.graph.json");
  auto ids = find_properties(graph, "brake light");
  c.expect(ids.size() == 1, "front car graph should carry one brake light");
  if (ids.empty()) return;
  auto perturbed = perturb_property(graph, db, ids[0], "off");
  int differing = 0;
  bool property_only = true;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    if (graph.nodes()[i] != perturbed.nodes()[i]) {
      ++differing;
      property_only = property_only && std::holds_alternative<PropertyNode>(graph.nodes()[i]);
    }
  }
  c.expect(graph.nodes().size() == perturbed.nodes().size() && graph.edges() == perturbed.edges(),
           "perturbation changed the graph shape");
  c.expect(differing == 1 && property_only, "perturbed graph differs in " + std::to_string(differing) + " nodes");

  auto cfg = compile(enumerate_scenarios(perturbed).at(0), db, oracle);
  auto solved = solve_placement(cfg, load_context(kRoot / "maps", cfg.route_id), {});
  int bi = binding_index(cfg.predicates, {"sedan1", "Front Car Braking"});
  c.expect(bi >= 0, "no braking binding for the front car");
  bool decoupled = false;
  const auto& trace = solved.witness.trace;
  for (std::size_t t = 0; bi >= 0 && t < trace.size() && t < solved.witness.state_values.size(); ++t) {
    for (const auto& a : trace[t].actors) {
      auto it = a.properties.find("brake light");
      if (a.name == "sedan1" && solved.witness.state_values[t][bi] && it != a.properties.end() && it->second == "off") {
        decoupled = true;
      }
    }
  }
  c.expect(decoupled, "no tick with is_braking true and brake light off");
}

void gnss(Check& c) {
  auto ctx = load_context(kRoot / "maps", "straight_drive_forward");
  ScenarioConfig empty;
  empty.route_id = ctx.route.id;
  auto run_ticks = [&](double sigma, long n, std::uint64_t seed, std::function<void(const SimWorld&)> each) {
    WorldOptions w;
    w.gnss_sigma[kEgoName] = sigma;
    SimWorld world = build_world(empty, ctx, {}, w);
    for (long t = 0; t < n; ++t) {
      step(world, seed);
      each(world);
    }
  };
  bool exact = true;
  run_ticks(0.0, 200, 5, [&](const SimWorld& w) {
    const auto& a = w.trace.back().actors.front();
    exact = exact && a.gnss && a.gnss->x == a.pose.x && a.gnss->y == a.pose.y;
  });
  c.expect(exact, "sigma=0 readings differ from truth");

  std::vector<double> ex, ey;
  bool fired = false;
  PredicateCall call{"gnss_error_exceeds", {kEgoName, "3"}};
  run_ticks(5.0, 1000, 42, [&](const SimWorld& w) {
    const auto& a = w.trace.back().actors.front();
    ex.push_back(a.gnss->x - a.pose.x);
    ey.push_back(a.gnss->y - a.pose.y);
    fired = fired || eval_predicate(w, call);
  });
  auto sd = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
  };
  double sx = sd(ex), sy = sd(ey);
  std::cout << "  (std x " << sx << ", y " << sy << ")\n";
  c.expect(sx >= 4.5 && sx <= 5.5 && sy >= 4.5 && sy <= 5.5, "per-axis std outside [4.5, 5.5]");
  c.expect(fired, "gnss_error_exceeds(ego, 3) never fired");
}

void determinism(Check& c) {
  auto base = fs::temp_directory_path() / "regen_acceptance";
  fs::remove_all(base);
  auto run = [&](const std::string& name, int jobs) {
    PipelineOptions po;
    po.behavior = {kBehavior, "straight_stop_abruptly"};
    po.assets = kRoot / "assets" / "driving.assetdb";
    po.oracle_spec = "scripted:" + (kRoot / "transcripts" / "abrupt_stop.transcript").string();
    po.maps_dir = kRoot / "maps";
    po.out_dir = base / name;
    po.jobs = jobs;
    return dump_json(run_pipeline(po).manifest);
  };
  auto m1 = run("a", 1);
  auto m2 = run("b", 1);
  auto m8 = run("c", 8);
  c.expect(m1 == m2, "manifests differ between identical runs");
  c.expect(m1 == m8, "manifests differ between --jobs 1 and --jobs 8");
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), base / "a");
    c.expect(fs::exists(base / "c" / rel) && read_file(e.path()) == read_file(base / "c" / rel),
             "artifact " + rel.string() + " differs between job counts");
  }
  fs::remove_all(base);
}

void over_constraint(Check& c) {
  auto cfg = load_config(kRoot / "fixtures" / "delivery_truck.config.json");
  auto report = validate_config(cfg, driving_db());
  c.expect(report.ok(), "fixture has violations");
  bool flagged = std::any_of(report.warnings.begin(), report.warnings.end(),
                             [](const std::string& w) { return w.rfind("over-constraint", 0) == 0; });
  c.expect(flagged, "over-constraint warning missing");
  auto solved = solve_placement(cfg, load_context(kRoot / "maps", cfg.route_id), {});
  c.expect(!solved.feasible && solved.witness.verdict == Verdict::kStalled,
           "verdict " + std::string(to_string(solved.witness.verdict)));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"1 transcript replay", transcript_replay},
      {"2 grounding golden file", grounding_golden},
      {"3 end-to-end feasibility", end_to_end},
      {"4 solver vs exhaustive search", solver_equivalence},
      {"5 fsm semantics vs checker", fsm_semantics},
      {"6 self-bleu vs reference", self_bleu_oracle},
      {"7 sampling protocol", sampling_protocol},
      {"8 counterfactual decoupling", counterfactual},
      {"9 gnss noise", gnss},
      {"10 pipeline determinism", determinism},
      {"11 over-constraint lint", over_constraint},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.problems.push_back(std::string("exception: ") + e.what());
    }
    std::ostringstream line;
    line << (c.problems.empty() ? "PASS" : "FAIL") << "  " << name << "  (" << seconds_since(t0) << " s)";
    std::cout << line.str() << "\n";
    for (const auto& p : c.problems) std::cout << "      " << p << "\n";
    if (!c.problems.empty()) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
