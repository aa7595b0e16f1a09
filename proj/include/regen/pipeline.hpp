#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regen/compiler.hpp"
#include "regen/expansion.hpp"
#include "regen/solver.hpp"

namespace regen {

// Installed data root (assets/, maps/, transcripts/, ...).
std::filesystem::path data_dir();

// "[entity.]key=value"; underscores in the key become spaces, so
// brake_light=off addresses the "brake light" property.
struct Counterfactual {
  std::string entity;
  std::string key;
  std::string value;
};

Counterfactual parse_counterfactual(const std::string& text);

// Sets the property on the named entity, or on every non-ego entity that
// already carries the key, or failing that on every dynamic vehicle. Throws
// kPrecondition when nothing matches.
ScenarioConfig apply_counterfactual(ScenarioConfig config, const Counterfactual& cf);

Assignments assignments_from_json(const Json& doc, const std::string& origin);

struct TraceRow {
  long tick = 0;
  std::string actor;
  double x = 0.0;
  double y = 0.0;
  bool braking = false;
};

std::vector<TraceRow> parse_trace_csv(std::string_view text, const std::string& origin);

// Top-down SVG of every actor path with the ego position marked at each
// stage tick. Throws kPrecondition on an empty trace.
std::string render_svg(const std::vector<TraceRow>& rows, const std::vector<long>& stage_log);

struct PipelineOptions {
  BehaviorSpec behavior;
  std::filesystem::path assets;
  std::string oracle_spec;
  std::filesystem::path maps_dir;
  std::filesystem::path out_dir;
  ExpansionOptions expansion;
  SearchOptions search;
  WorldOptions world;
  std::vector<Counterfactual> counterfactuals;
  int jobs = 1;
};

struct ScenarioOutcome {
  std::size_t index = 0;
  std::string narrative;
  std::string status;  // "solved", "infeasible", "ungrounded", "invalid"
  std::string verdict;
  std::string message;
  std::vector<std::string> warnings;
};

struct PipelineResult {
  Json manifest;
  std::vector<ScenarioOutcome> scenarios;
};

// expand -> enumerate -> ground -> solve/run -> plot, one directory per
// scenario, plus manifest.json listing every artifact with its content hash
// and the artifacts it was derived from.
PipelineResult run_pipeline(const PipelineOptions& options);

}  // namespace regen
