#pragma once

// INI-style configuration: `[section]` headers with `key = value` lines.
// Command-line overrides are applied on top of file values before the typed
// configs are built, and every key must be known.

#include "alforge/benchgen.hpp"
#include "alforge/driver.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace alforge::config {

/// Flat "section.key" -> value.
using Entries = std::map<std::string, std::string>;
using Section = std::pair<std::string, std::vector<std::pair<std::string, std::string>>>;

Entries read_file(const std::string& path);
Entries parse_text(const std::string& text);
/// Applies "section.key=value".
void apply_override(Entries& entries, const std::string& assignment);

struct RunConfig {
  std::string dataset;  // pool file; empty means generate from `benchmark`
  std::string test;     // empty means `<dataset stem>.test.ds`
  std::optional<benchgen::BenchmarkSpec> benchmark;
  std::string metrics_path = "metrics.csv";
  std::string summary_path = "summary.json";
  driver::ExperimentConfig experiment;
};

/// Reads the [benchmark] section. With `accept_manifest`, the informational
/// [counts] and [files] sections of a manifest are skipped.
benchgen::BenchmarkSpec benchmark_from(const Entries& entries, bool accept_manifest = false);
RunConfig run_config_from(const Entries& entries);

std::vector<Section> resolved(const RunConfig& cfg);
std::vector<Section> resolved(const benchgen::BenchmarkSpec& spec);
std::string to_text(const std::vector<Section>& sections);

std::vector<std::pair<std::string, std::string>> train_entries(const learner::TrainConfig& c);
/// Returns false for an unknown key.
bool set_train_field(learner::TrainConfig& c, const std::string& key, const std::string& value);

}  // namespace alforge::config
