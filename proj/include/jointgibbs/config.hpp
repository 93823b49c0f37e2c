#pragma once

// JSON run configuration and the on-disk run directory.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jointgibbs/dataset.hpp"
#include "jointgibbs/model_graph.hpp"
#include "jointgibbs/sampler.hpp"
#include "jointgibbs/samples.hpp"

namespace jointgibbs {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string data_path;
  std::string na = "NA";
  std::vector<AnalysisSpec> analyses;
  GraphOptions options;
  std::optional<std::string> global_refcat;  // applies to every factor without its own entry
  std::optional<Coding> global_coding;
  McmcSettings mcmc;
  std::string output_dir;
  nlohmann::json source;  // the configuration as given
};

/// Validates and converts a configuration object. Relative paths are
/// resolved against `base_dir`. Throws ConfigError on schema violations.
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Builds the model graph for a configuration (reads the data file).
ModelGraph build_graph(const RunConfig& cfg);
ModelGraph build_graph(const RunConfig& cfg, const Dataset& data);

/// `requested` capped by the JOINTGIBBS_THREADS environment variable.
std::size_t effective_threads(std::size_t requested);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Writes chain CSVs, meta.json, model_graph.txt, warnings.log, config.json
/// and manifest.json into `dir`.
void write_run(const std::string& dir, const RunConfig& cfg, const ModelGraph& g, const McmcSamples& s);

struct RunDirectory {
  RunConfig config;
  McmcSamples samples;
};
/// Loads a run written by write_run.
RunDirectory read_run(const std::string& dir);

/// Writes a dataset as CSV (NA for missing cells).
void write_dataset(const std::string& path, const Dataset& d);

}  // namespace jointgibbs
