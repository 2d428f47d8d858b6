#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stlab/fractal.hpp"
#include "stlab/model.hpp"

// Experiment configuration: a flat key=value text format plus command-line
// overrides, chosen so any language can parse it. parse(print(c)) == c.
// The manifest records the exact configuration, code version, calibration
// constants, timings and a digest per output file; re-running the same
// manifest inputs reproduces identical digests.

namespace stlab {

inline constexpr const char* stlab_version = "stlab 1.0.0";

struct ExperimentConfig {
  double gamma = 1.5;
  std::string generator = "slice";  // slice | gw | both
  double delta = 1.0 / 256;
  double a0 = 0.25;
  double horizon = 1.0;
  uint64_t replicates = 100;
  uint64_t sample_size = 1000;  // target vertices / Monte Carlo samples
  std::string level_set = "singleton:1.0";
  uint64_t seed = 42;
  uint64_t max_nodes = 16000000;
  uint64_t law_resolution = 2048;
  std::string law_cache;           // directory of cached law tables
  std::string out_dir = "out";
  double trim = 1.0;  // divide Monte Carlo sizes by this (desk profile knob)
  bool dump_tree = false;     // slice runs: emit per-replicate node CSVs
  bool export_paths = false;  // gw runs: emit height-path and edge CSVs

  ModelParams params() const { return ModelParams(gamma); }
  LevelSetSpec parse_level_set() const;

  std::string print() const;
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  // key=value override; throws std::invalid_argument naming an unknown key
  void set(const std::string& key, const std::string& value);
  void validate() const;  // domain checks, names the offending key
};

struct ManifestFile {
  std::string name;
  uint64_t digest = 0;
};

struct RunManifest {
  std::string config_echo;
  std::string version = stlab_version;
  double c_h = 0.0, c_ell = 0.0;  // calibration constants when gw is used
  bool has_calibration = false;
  std::vector<std::pair<std::string, double>> timings;  // stage -> seconds
  std::vector<ManifestFile> files;
  std::string status = "ok";  // ok | partial | error

  void add_file(const std::string& path);
  std::string to_json() const;
  void write(const std::string& path) const;
};

}  // namespace stlab
