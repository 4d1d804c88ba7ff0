#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "gedanken/experiments.hpp"

namespace gedanken {

// A fully resolved run description: experiment configuration plus output
// location.  Built from defaults, overlaid by an optional JSON config file
// (schema-checked, unknown keys rejected), overlaid by command-line flags.
struct RunManifest {
  ExperimentConfig config;
  std::string out_dir = "out";
};

// Parses and validates a config document.  Throws ConfigError on schema
// violations (missing schema_version, unknown keys, bad enum values).
RunManifest manifest_from_json(const nlohmann::json& doc);

RunManifest load_manifest(const std::string& path);

// The resolved configuration, echoed into every report so artifacts are
// self-describing.
nlohmann::json manifest_to_json(const RunManifest& manifest);

// Deterministic serialization of the physics results (configuration echo and
// wall-clock excluded, so identical physics gives identical bytes).
nlohmann::json results_to_json(const RunReport& report);

// Full report document: schema version, config echo, results.
nlohmann::json report_document(const RunManifest& manifest, const RunReport& report);
nlohmann::json report_document(const RunManifest& manifest, const DelayedChoiceReport& report);

void write_text_file(const std::string& path, const std::string& contents);
std::string clicks_csv(const std::vector<ClickRecord>& clicks);
std::string visibility_csv(const std::vector<VisibilityPoint>& points);

// Executes a full run described by flags (and an optional --config file),
// writing report.json, clicks.csv and visibility.csv under --out.
// Exit codes: 0 success, 1 configuration error, 2 numerical guard.
int run_cli(const std::vector<std::string>& args);

}  // namespace gedanken
