#include "regen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <thread>

#include "regen/error.hpp"

namespace regen {

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("REGEN_DATA_DIR"); env && *env) return env;
  return REGEN_DATA_DIR;
}

Counterfactual parse_counterfactual(const std::string& text) {
  auto eq = text.find('=');
  require(eq != std::string::npos && eq > 0 && eq + 1 < text.size(),
          "counterfactual '" + text + "': expected [entity.]key=value");
  Counterfactual cf;
  std::string lhs = text.substr(0, eq);
  cf.value = text.substr(eq + 1);
  if (auto dot = lhs.rfind('.'); dot != std::string::npos) {
    cf.entity = lhs.substr(0, dot);
    lhs = lhs.substr(dot + 1);
  }
  std::replace(lhs.begin(), lhs.end(), '_', ' ');
  cf.key = lhs;
  return cf;
}

ScenarioConfig apply_counterfactual(ScenarioConfig config, const Counterfactual& cf) {
  std::vector<ConfigEntity*> targets;
  for (auto& e : config.entities) {
    if (!cf.entity.empty() ? e.name == cf.entity : e.name != kEgoName && e.static_properties.count(cf.key)) {
      targets.push_back(&e);
    }
  }
  if (targets.empty() && cf.entity.empty()) {
    for (const auto& v : config.vehicles) {
      if (v.type != "dynamic") continue;
      for (auto& e : config.entities) {
        if (e.name == v.name) targets.push_back(&e);
      }
    }
  }
  require(!targets.empty(), "counterfactual " + (cf.entity.empty() ? "" : cf.entity + ".") + cf.key +
                                "=" + cf.value + ": no matching entity");
  for (auto* e : targets) e->static_properties[cf.key] = cf.value;
  return config;
}

Assignments assignments_from_json(const Json& doc, const std::string& origin) {
  Assignments out;
  try {
    for (const auto& [name, v] : doc.at("assignments").items()) {
      Assignment a;
      a.x0 = v.at("start").at("x").get<double>();
      a.y0 = v.at("start").at("y").get<double>();
      a.xT = v.at("end").at("x").get<double>();
      a.yT = v.at("end").at("y").get<double>();
      a.speed = v.at("speed").get<double>();
      out[name] = a;
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::kParse, origin + ": " + e.what());
  }
  return out;
}

namespace {

// Splits one CSV line; double quotes group a field.
std::vector<std::string> csv_fields(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  return out;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

}  // namespace

std::vector<TraceRow> parse_trace_csv(std::string_view text, const std::string& origin) {
  std::vector<TraceRow> rows;
  auto lines = split(text, '\n');
  std::size_t n = 0;
  for (const auto& line : lines) {
    ++n;
    if (n == 1 || trim(line).empty()) continue;
    auto f = csv_fields(line);
    if (f.size() < 9) fail(ErrorKind::kParse, origin + ":" + std::to_string(n) + ": expected 12 fields");
    try {
      rows.push_back({std::stol(f[0]), f[2], std::stod(f[3]), std::stod(f[4]), f[8] == "1"});
    } catch (const std::exception&) {
      fail(ErrorKind::kParse, origin + ":" + std::to_string(n) + ": bad number");
    }
  }
  return rows;
}

std::string render_svg(const std::vector<TraceRow>& rows, const std::vector<long>& stage_log) {
  require(!rows.empty(), "trace is empty");
  double x0 = rows[0].x, x1 = x0, y0 = rows[0].y, y1 = y0;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const TraceRow*>> paths;
  for (const auto& r : rows) {
    x0 = std::min(x0, r.x);
    x1 = std::max(x1, r.x);
    y0 = std::min(y0, r.y);
    y1 = std::max(y1, r.y);
    if (!paths.count(r.actor)) order.push_back(r.actor);
    paths[r.actor].push_back(&r);
  }
  const double scale = 4.0, margin = 20.0;
  double w = (x1 - x0) * scale + 2 * margin;
  double h = (y1 - y0) * scale + 2 * margin + 20.0 * order.size();
  // y axis flipped so north is up
  auto px = [&](double x) { return fmt2((x - x0) * scale + margin); };
  auto py = [&](double y) { return fmt2((y1 - y) * scale + margin); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(w) + "\" height=\"" +
                    fmt2(h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& pts = paths[order[i]];
    const char* color = kPalette[i % std::size(kPalette)];
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k) svg += " ";
      svg += px(pts[k]->x) + "," + py(pts[k]->y);
    }
    svg += "\"/>\n";
    svg += "<circle cx=\"" + px(pts.front()->x) + "\" cy=\"" + py(pts.front()->y) + "\" r=\"3\" fill=\"" +
           color + "\"/>\n";
    svg += "<text x=\"" + fmt2(margin) + "\" y=\"" + fmt2((y1 - y0) * scale + 2 * margin + 20.0 * i + 12) +
           "\" font-size=\"12\" fill=\"" + color + "\">" + order[i] + "</text>\n";
  }
  const auto& ego = paths.count(kEgoName) ? paths[kEgoName] : paths[order.front()];
  for (std::size_t s = 0; s < stage_log.size(); ++s) {
    auto it = std::find_if(ego.begin(), ego.end(), [&](const TraceRow* r) { return r->tick == stage_log[s]; });
    if (it == ego.end()) continue;
    svg += "<circle cx=\"" + px((*it)->x) + "\" cy=\"" + py((*it)->y) +
           "\" r=\"5\" fill=\"none\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + px((*it)->x) + "\" y=\"" + py((*it)->y + 2.5) + "\" font-size=\"10\">S" +
           std::to_string(s) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

namespace {

struct ArtifactLog {
  std::filesystem::path root;
  Json entries = Json::array();

  std::string add(const std::filesystem::path& rel, const std::string& contents,
                  const std::vector<std::string>& inputs) {
    write_file(root / rel, contents);
    Json e;
    e["path"] = rel.generic_string();
    e["sha256"] = sha256_hex(contents);
    e["inputs"] = inputs;
    entries.push_back(std::move(e));
    return rel.generic_string();
  }
};

NodeId chain_root(const ScenarioGraph& g) {
  for (const auto* e : g.events()) {
    if (g.cause_in_degree(e->id) == 0) return e->id;
  }
  return g.behavior_node_id();
}

std::string scenario_dir(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return std::string("scenarios/") + buf;
}

}  // namespace

PipelineResult run_pipeline(const PipelineOptions& opt) {
  require(!opt.out_dir.empty(), "output directory is empty");
  require(opt.jobs >= 1, "jobs must be at least 1");
  std::filesystem::create_directories(opt.out_dir);

  std::string assets_text = read_file(opt.assets);
  AssetDatabase db = parse_asset_db(assets_text, opt.assets.string());
  OracleHandle oracle = OracleHandle::from_spec(opt.oracle_spec);

  ArtifactLog log{opt.out_dir};
  ScenarioGraph graph = expand(init_graph(opt.behavior), db, oracle, opt.expansion);
  std::string graph_path = log.add("graph.json", serialize_graph(graph), {"assets", "oracle"});

  auto subgraphs = enumerate_scenarios(graph);
  PipelineResult result;
  std::vector<std::optional<ScenarioConfig>> configs(subgraphs.size());
  std::vector<std::string> config_paths(subgraphs.size());
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    ScenarioOutcome out;
    out.index = i;
    out.narrative = join(causal_chain(subgraphs[i], chain_root(subgraphs[i])), " -> ");
    try {
      ScenarioConfig cfg = compile(subgraphs[i], db, oracle);
      for (const auto& cf : opt.counterfactuals) cfg = apply_counterfactual(std::move(cfg), cf);
      auto report = validate_config(cfg, db);
      out.warnings = report.warnings;
      if (!report.ok()) {
        out.status = "invalid";
        out.message = join(report.violations, "; ");
      } else {
        configs[i] = cfg;
      }
      config_paths[i] = log.add(scenario_dir(i) + "/config.json", serialize_config(cfg), {graph_path, "oracle"});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kValidation && e.kind() != ErrorKind::kTranscriptMiss &&
          e.kind() != ErrorKind::kOracleParse) {
        throw;
      }
      out.status = e.kind() == ErrorKind::kValidation ? "invalid" : "ungrounded";
      out.message = e.what();
    }
    result.scenarios.push_back(std::move(out));
  }

  // Solving is the expensive part; each scenario is independent and writes
  // only its own directory, so results do not depend on the pool size.
  std::vector<std::optional<ConcreteScenario>> solved(subgraphs.size());
  std::vector<std::string> errors(subgraphs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < subgraphs.size(); i = next++) {
      if (!configs[i]) continue;
      try {
        ScenarioContext ctx = load_context(opt.maps_dir, configs[i]->route_id);
        SearchOptions search = opt.search;
        search.jobs = 1;
        solved[i] = solve_placement(*configs[i], ctx, search, opt.world);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  std::size_t n_threads = std::min<std::size_t>(opt.jobs, std::max<std::size_t>(1, subgraphs.size()));
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    auto& out = result.scenarios[i];
    if (!configs[i]) continue;
    if (!solved[i]) {
      out.status = "invalid";
      out.message = errors[i];
      continue;
    }
    const auto& s = *solved[i];
    out.status = s.feasible ? "solved" : "infeasible";
    out.verdict = std::string(to_string(s.witness.verdict));
    std::string dir = scenario_dir(i);
    auto concrete = log.add(dir + "/concrete.json", dump_json(concrete_to_json(s)), {config_paths[i], "maps"});
    std::string csv = trace_csv(s.witness.trace, opt.world.params.dt);
    auto trace = log.add(dir + "/trace.csv", csv, {concrete});
    if (!s.witness.trace.empty()) {
      log.add(dir + "/plot.svg", render_svg(parse_trace_csv(csv, trace), s.witness.stage_log), {trace, concrete});
    }
  }

  Json m;
  m["behavior"] = opt.behavior.description;
  m["route_id"] = opt.behavior.route_id;
  m["seed"] = opt.search.seed;
  Json inputs;
  inputs["assets"] = sha256_hex(assets_text);
  inputs["oracle"] = oracle.digest();
  std::string maps_bytes = read_file(opt.maps_dir / "routes.json");
  std::set<std::filesystem::path> map_files;
  for (const auto& e : std::filesystem::directory_iterator(opt.maps_dir)) map_files.insert(e.path());
  for (const auto& p : map_files) {
    if (p.extension() == ".json" && p.filename() != "routes.json") maps_bytes += read_file(p);
  }
  inputs["maps"] = sha256_hex(maps_bytes);
  m["inputs"] = inputs;
  m["artifacts"] = log.entries;
  Json sc = Json::array();
  for (const auto& o : result.scenarios) {
    Json j;
    j["index"] = o.index;
    j["narrative"] = o.narrative;
    j["status"] = o.status;
    j["verdict"] = o.verdict;
    j["message"] = o.message;
    j["warnings"] = o.warnings;
    sc.push_back(std::move(j));
  }
  m["scenarios"] = sc;
  write_file(opt.out_dir / "manifest.json", dump_json(m));
  result.manifest = std::move(m);
  return result;
}

}  // namespace regen
