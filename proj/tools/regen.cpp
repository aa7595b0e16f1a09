// regen: command-line front end for expansion, grounding, solving and scoring.

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "regen/error.hpp"
#include "regen/metrics.hpp"
#include "regen/pipeline.hpp"

namespace {

using namespace regen;

enum Exit { kOk = 0, kOracleExit = 2, kValidationExit = 3, kInfeasibleExit = 4, kIoExit = 5 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kOracleTransport:
    case ErrorKind::kOracleParse:
    case ErrorKind::kTranscriptMiss: return kOracleExit;
    case ErrorKind::kInfeasible: return kInfeasibleExit;
    case ErrorKind::kIo: return kIoExit;
    default: return kValidationExit;
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

struct Globals {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string oracle;
  std::string assets;
  std::string maps;
  std::string record_misses;
};

struct ExpandFlags {
  std::string behavior;
  std::string route = "straight_stop_abruptly";
  std::uint32_t max_depth = 1;
  std::uint32_t max_events = 10;
  std::uint32_t max_nodes = 200;
  std::string prior;
  std::vector<std::string> user_causes;
  bool events_only = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--behavior", behavior, "Behavior description")->required();
    cmd->add_option("--route", route, "Ego route id from routes.json")->capture_default_str();
    cmd->add_option("--max-depth", max_depth, "Maximum cause depth")->capture_default_str();
    cmd->add_option("--max-events", max_events, "Causes accepted per event")->capture_default_str();
    cmd->add_option("--max-nodes", max_nodes, "Total node budget")->capture_default_str();
    cmd->add_option("--prior", prior, "Context for event proposal");
    cmd->add_option("--user-cause", user_causes, "Extra cause for the behavior (repeatable)");
    cmd->add_flag("--events-only", events_only, "Stop after event expansion");
  }

  ExpansionOptions options() const {
    ExpansionOptions o;
    o.budget = {max_depth, max_events, max_nodes};
    if (!prior.empty()) o.prior = prior;
    o.user_causes = user_causes;
    o.events_only = events_only;
    return o;
  }
};

struct SolveFlags {
  double grid_step = 5.0;
  double speed_step_kmh = 10.0;
  std::size_t max_candidates = 2000;
  double gap_min = 8.0;
  long max_ticks = 600;
  std::vector<std::string> counterfactuals;
  std::vector<std::string> gnss;

  void attach(CLI::App* cmd, bool search) {
    if (search) {
      cmd->add_option("--grid-step", grid_step, "Placement grid step (m)")->capture_default_str();
      cmd->add_option("--speed-step", speed_step_kmh, "Speed grid step (km/h)")->capture_default_str();
      cmd->add_option("--max-candidates", max_candidates, "Rollout budget")->capture_default_str();
      cmd->add_option("--gap-min", gap_min, "Minimum spawn gap to the ego (m)")->capture_default_str();
    }
    cmd->add_option("--max-ticks", max_ticks, "Ticks per rollout")->capture_default_str();
    cmd->add_option("--counterfactual", counterfactuals, "[entity.]key=value applied before solving");
    cmd->add_option("--gnss-noise", gnss, "actor=sigma_m GNSS noise (repeatable)");
  }

  SearchOptions search(const Globals& g) const {
    SearchOptions s;
    s.grid_step = grid_step;
    s.speed_step = speed_step_kmh / 3.6;
    s.max_candidates = max_candidates;
    s.gap_min = gap_min;
    s.max_ticks = max_ticks;
    s.seed = g.seed;
    s.jobs = g.jobs;
    return s;
  }

  WorldOptions world() const {
    WorldOptions w;
    for (const auto& item : gnss) {
      auto eq = item.find('=');
      require(eq != std::string::npos, "--gnss-noise '" + item + "': expected actor=sigma");
      try {
        w.gnss_sigma[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        fail(ErrorKind::kPrecondition, "--gnss-noise '" + item + "': bad sigma");
      }
    }
    return w;
  }

  ScenarioConfig apply(ScenarioConfig cfg) const {
    for (const auto& c : counterfactuals) cfg = apply_counterfactual(std::move(cfg), parse_counterfactual(c));
    return cfg;
  }
};

Json run_summary(const RunResult& r) {
  Json j;
  j["verdict"] = std::string(to_string(r.verdict));
  j["stage_log"] = r.stage_log;
  j["first_unmet_stage"] = r.first_unmet_stage;
  j["ticks"] = r.trace.size();
  j["collisions"] = Json::array();
  for (const auto& c : r.collisions) j["collisions"].push_back(Json{{"tick", c.tick}, {"a", c.a}, {"b", c.b}});
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  const auto root = data_dir();
  Globals g;
  g.oracle = "scripted:" + (root / "transcripts" / "abrupt_stop.transcript").string();
  g.assets = (root / "assets" / "driving.assetdb").string();
  g.maps = (root / "maps").string();

  CLI::App app{"Behavior-conditioned driving scenario generation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g.seed, "Seed for noise and sampling")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--oracle", g.oracle, "scripted:<transcript> or remote")->capture_default_str();
  app.add_option("--assets", g.assets, "Asset database")->capture_default_str();
  app.add_option("--map", g.maps, "Directory with routes.json and maps")->capture_default_str();
  app.add_option("--record-misses", g.record_misses,
                 "On a transcript miss, write the missed requests as a transcript skeleton");

  std::optional<OracleHandle> oracle_handle;
  auto oracle = [&]() -> OracleHandle& {
    if (!oracle_handle) oracle_handle = OracleHandle::from_spec(g.oracle);
    return *oracle_handle;
  };
  auto assets = [&] { return load_asset_db(g.assets); };

  // expand
  ExpandFlags ex;
  std::string expand_out;
  auto* expand_cmd = app.add_subcommand("expand", "Grow a causal scenario graph from a behavior");
  ex.attach(expand_cmd);
  expand_cmd->add_option("-o,--output", expand_out, "Graph file (default stdout)");
  expand_cmd->callback([&] {
    auto graph = expand(init_graph({ex.behavior, ex.route}), assets(), oracle(), ex.options());
    emit(expand_out, serialize_graph(graph));
    std::cerr << "oracle-digest " << oracle().digest() << "\n";
  });

  // ground
  std::string ground_graph, ground_out = ".";
  auto* ground_cmd = app.add_subcommand("ground", "Compile each scenario path of a graph into a config");
  ground_cmd->add_option("graph", ground_graph, "Graph file")->required();
  ground_cmd->add_option("-o,--output-dir", ground_out, "Directory for config_NN.json")->capture_default_str();
  ground_cmd->callback([&] {
    auto db = assets();
    auto subgraphs = enumerate_scenarios(load_graph(ground_graph));
    if (subgraphs.empty()) std::cerr << "warning: no simulatable scenario in " << ground_graph << "\n";
    std::filesystem::create_directories(ground_out);
    for (std::size_t i = 0; i < subgraphs.size(); ++i) {
      auto cfg = compile(subgraphs[i], db, oracle());
      for (const auto& w : validate_config(cfg, db).warnings) std::cerr << "warning: " << w << "\n";
      char name[32];
      std::snprintf(name, sizeof name, "config_%02zu.json", i);
      write_file(std::filesystem::path(ground_out) / name, serialize_config(cfg));
      std::cout << (std::filesystem::path(ground_out) / name).string() << "\n";
    }
  });

  // solve
  SolveFlags sv;
  std::string solve_config, solve_out, solve_trace;
  auto* solve_cmd = app.add_subcommand("solve", "Search actor placements that satisfy a config's FSM");
  solve_cmd->add_option("config", solve_config, "Config file")->required();
  solve_cmd->add_option("-o,--output", solve_out, "Concrete scenario file (default stdout)");
  solve_cmd->add_option("--trace", solve_trace, "Write the witness trace as CSV");
  sv.attach(solve_cmd, true);
  int solve_status = kOk;
  solve_cmd->callback([&] {
    auto db = assets();
    auto cfg = sv.apply(load_config(solve_config));
    auto report = validate_config(cfg, db);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    if (!report.ok()) fail(ErrorKind::kValidation, join(report.violations, "\n"));
    auto world = sv.world();
    auto result = solve_placement(cfg, load_context(g.maps, cfg.route_id), sv.search(g), world);
    emit(solve_out, dump_json(concrete_to_json(result)));
    if (!solve_trace.empty()) write_file(solve_trace, trace_csv(result.witness.trace, world.params.dt));
    std::cerr << "verdict " << to_string(result.witness.verdict) << " after " << result.candidates_evaluated
              << " rollouts\n";
    if (!result.feasible) solve_status = kInfeasibleExit;
  });

  // run
  SolveFlags rn;
  std::string run_input, run_out, run_trace;
  auto* run_cmd = app.add_subcommand("run", "Roll out a concrete scenario and check its FSM");
  run_cmd->add_option("concrete", run_input, "Concrete scenario file from solve")->required();
  run_cmd->add_option("-o,--output", run_out, "Verdict file (default stdout)");
  run_cmd->add_option("--trace", run_trace, "Write the trace as CSV");
  rn.attach(run_cmd, false);
  int run_status = kOk;
  run_cmd->callback([&] {
    auto doc = load_json(run_input);
    ScenarioConfig cfg;
    try {
      cfg = rn.apply(config_from_json(doc.at("config"), run_input));
    } catch (const Json::exception& e) {
      fail(ErrorKind::kParse, run_input + ": " + e.what());
    }
    auto world = rn.world();
    auto result = verify_assignment(cfg, load_context(g.maps, cfg.route_id), assignments_from_json(doc, run_input),
                                    rn.max_ticks, g.seed, world);
    emit(run_out, dump_json(run_summary(result)));
    if (!run_trace.empty()) write_file(run_trace, trace_csv(result.trace, world.params.dt));
    if (result.verdict != Verdict::kAccepted) run_status = kInfeasibleExit;
  });

  // eval
  std::string eval_corpus, eval_metric = "self-bleu", eval_out;
  SampleOptions sample;
  auto* eval_cmd = app.add_subcommand("eval", "Diversity of a corpus of scenario descriptions");
  eval_cmd->add_option("corpus", eval_corpus, "One description per line")->required();
  eval_cmd->add_option("--metric", eval_metric, "self-bleu or embedding")->capture_default_str();
  eval_cmd->add_option("--sample-size", sample.sample_size, "Texts per sample (default: whole corpus)");
  eval_cmd->add_option("--repeats", sample.repeats, "Number of samples")->capture_default_str();
  eval_cmd->add_option("--max-n", sample.max_n, "Largest BLEU n-gram order")->capture_default_str();
  eval_cmd->add_option("-o,--output", eval_out, "Report file (default stdout)");
  eval_cmd->callback([&] {
    auto corpus = load_corpus(eval_corpus);
    if (sample.sample_size == 0) sample.sample_size = corpus.texts.size();
    sample.seed = static_cast<std::int64_t>(g.seed);
    auto report = sampled_diversity(corpus, parse_metric(eval_metric), sample, EmbedderHandle::from_env());
    emit(eval_out, dump_json(report_to_json(report)));
  });

  // plot
  std::string plot_trace, plot_scenario, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "Render a trace as a top-down SVG");
  plot_cmd->add_option("trace", plot_trace, "Trace CSV")->required();
  plot_cmd->add_option("--scenario", plot_scenario, "Concrete scenario or verdict file with stage_log");
  plot_cmd->add_option("-o,--output", plot_out, "SVG file (default stdout)");
  plot_cmd->callback([&] {
    std::vector<long> stages;
    if (!plot_scenario.empty()) {
      auto doc = load_json(plot_scenario);
      if (doc.contains("stage_log")) stages = doc["stage_log"].get<std::vector<long>>();
    }
    emit(plot_out, render_svg(parse_trace_csv(read_file(plot_trace), plot_trace), stages));
  });

  // pipeline
  ExpandFlags pe;
  SolveFlags ps;
  std::string pipe_out;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage and write a manifest");
  pe.attach(pipe_cmd);
  ps.attach(pipe_cmd, true);
  pipe_cmd->add_option("-o,--output-dir", pipe_out, "Output directory")->required();
  pipe_cmd->callback([&] {
    PipelineOptions po;
    po.behavior = {pe.behavior, pe.route};
    po.assets = g.assets;
    po.oracle_spec = g.oracle;
    po.maps_dir = g.maps;
    po.out_dir = pipe_out;
    po.expansion = pe.options();
    po.search = ps.search(g);
    po.world = ps.world();
    for (const auto& c : ps.counterfactuals) po.counterfactuals.push_back(parse_counterfactual(c));
    po.jobs = g.jobs;
    auto result = run_pipeline(po);
    for (const auto& s : result.scenarios) {
      std::cout << s.index << "\t" << s.status << "\t" << s.verdict << "\t" << s.narrative << "\n";
      if (!s.message.empty()) std::cerr << "scenario " << s.index << ": " << s.message << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.kind() == ErrorKind::kTranscriptMiss && !g.record_misses.empty() && oracle_handle) {
      write_file(g.record_misses, serialize_transcript(oracle_handle->misses()));
      std::cerr << "missed requests written to " << g.record_misses << "\n";
    }
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoExit;
  }
  return solve_status != kOk ? solve_status : run_status;
}
