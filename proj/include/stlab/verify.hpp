#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stlab/config.hpp"

// The verification suite: eleven numbered criteria covering closed-form
// identities, sampler fidelity, tail laws, CSBP exactness and bounds,
// branching statistics, cross-generator agreement, mass-measure tails,
// pointwise exponents, spectra/dimensions, and reproducibility. Each
// criterion reports one line per check (target, observed, tolerance, pass).
// A check may be marked `blocked` when it is known to be unattainable at
// desk scale; blocked checks still run and report honestly, but do not
// count against the overall status (the analysis lives in the project
// notes, not here).

namespace stlab {

struct CheckLine {
  std::string name;
  double target = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool blocked = false;
  std::string note;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;         // all non-blocked checks pass
  bool has_blocked = false;  // some checks are documented blockers
  double seconds = 0.0;
  std::vector<CheckLine> checks;
};

struct VerifyOptions {
  uint64_t seed = 42;
  double trim = 1.0;  // Monte Carlo sizes divided by this; SE tolerances
                      // widen automatically, fixed tolerances by sqrt(trim)
  std::string law_cache;
  std::string out_dir = "out";
};

CriterionResult run_criterion(int id, const VerifyOptions& opt);
std::vector<CriterionResult> run_all_criteria(const VerifyOptions& opt);

bool overall_pass(const std::vector<CriterionResult>& results);
std::string verify_report_json(const std::vector<CriterionResult>& results,
                               const VerifyOptions& opt);

// ---- reusable experiment drivers (CLI subcommand cores) -----------------

// `simulate`: replicate growth with artifact emission; returns the manifest.
RunManifest run_simulate(const ExperimentConfig& cfg);

// `tails`: sampler tail diagnostics; emits a CSV of (quantile, x, slope).
RunManifest run_tails(const ExperimentConfig& cfg);

// `csbp-verify`: emits one CSV per bound check plus a summary.
RunManifest run_csbp_verify(const ExperimentConfig& cfg);

// `exponents` / `spectrum` / `dims` / `xcheck`
RunManifest run_exponents(const ExperimentConfig& cfg);
RunManifest run_spectrum(const ExperimentConfig& cfg);
RunManifest run_dims(const ExperimentConfig& cfg);
RunManifest run_xcheck(const ExperimentConfig& cfg);

}  // namespace stlab
