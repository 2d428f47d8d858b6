#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "stlab/analytic.hpp"
#include "stlab/config.hpp"
#include "stlab/csvio.hpp"
#include "stlab/verify.hpp"

// Experiment orchestrator. Subcommands mirror the library drivers:
//   simulate     grow slice trees, emit summary/profile CSVs + manifest
//   kappa        evaluate the joint cumulant kappa_a(lambda, mu)
//   csbp-verify  Monte Carlo domination checks of the CSBP tail bounds
//   tails        sampler tail diagnostics
//   exponents    pointwise exponent estimates from a slice run
//   spectrum     coarse-grained local-time spectrum
//   dims         box-dimension estimates (level set, tree, T(F))
//   xcheck       cross-generator (Galton-Watson) comparison
//   verify       run the verification suite, emit a JSON report
//
// Precedence: defaults < --config file < --set key=value < explicit flags.
// Every run writes a manifest with digests of its outputs.

namespace {

struct Flags {
  std::string config_path;
  std::vector<std::string> overrides;
  // flag storage plus the CLI option handles to test presence
  stlab::ExperimentConfig values;
  std::vector<std::pair<CLI::Option*, std::string>> handles;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "key=value configuration file");
  cmd->add_option("--set", f.overrides, "override: key=value (repeatable)");
  auto opt = [&](const char* flag, auto& target, const char* key,
                 const char* help) {
    f.handles.push_back({cmd->add_option(flag, target, help), key});
  };
  opt("--gamma", f.values.gamma, "gamma", "branching index in (1,2]");
  opt("--delta", f.values.delta, "delta", "slice height");
  opt("--a0", f.values.a0, "a0", "base (root-conditioning) level");
  opt("--horizon", f.values.horizon, "horizon", "top level");
  opt("--replicates", f.values.replicates, "replicates", "replicate count");
  opt("--samples", f.values.sample_size, "sample_size", "samples / targets");
  opt("--level-set", f.values.level_set, "level_set",
      "singleton:a | interval:lo,hi | cantor:lo,hi");
  opt("--seed", f.values.seed, "seed", "master seed");
  opt("--max-nodes", f.values.max_nodes, "max_nodes", "node budget");
  opt("--law-cache", f.values.law_cache, "law_cache", "law cache directory");
  opt("--law-resolution", f.values.law_resolution, "law_resolution",
      "law table nodes");
  opt("--out", f.values.out_dir, "out_dir", "output directory");
  opt("--trim", f.values.trim, "trim", "divide Monte Carlo sizes by this");
  cmd->add_flag("--dump-tree", f.values.dump_tree,
                "emit per-replicate node CSVs (simulate)");
  cmd->add_flag("--export", f.values.export_paths,
                "emit height-path / edge CSVs (xcheck)");
}

stlab::ExperimentConfig resolve(const Flags& f) {
  stlab::ExperimentConfig cfg;
  if (!f.config_path.empty())
    cfg = stlab::ExperimentConfig::from_file(f.config_path);
  for (const auto& kv : f.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must be key=value: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.dump_tree = cfg.dump_tree || f.values.dump_tree;
  cfg.export_paths = cfg.export_paths || f.values.export_paths;
  // explicit flags win: re-serialize the flag struct and copy set keys
  auto printed = f.values.print();
  for (const auto& [handle, key] : f.handles) {
    if (handle->count() == 0) continue;
    std::istringstream is(printed);
    std::string line;
    while (std::getline(is, line)) {
      auto eq = line.find('=');
      if (line.substr(0, eq) == key) cfg.set(key, line.substr(eq + 1));
    }
  }
  return cfg;
}

int report_manifest(const stlab::RunManifest& m) {
  for (const auto& f : m.files) std::printf("wrote %s\n", f.name.c_str());
  std::printf("status: %s\n", m.status.c_str());
  return m.status == "ok" ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stable-tree simulation and verification laboratory"};
  app.require_subcommand(1);

  std::map<std::string, Flags> flags;
  std::map<std::string, CLI::App*> cmds;
  for (const char* name : {"simulate", "csbp-verify", "tails", "exponents",
                           "spectrum", "dims", "xcheck", "verify"}) {
    auto* cmd = app.add_subcommand(name, "");
    cmds[name] = cmd;
    add_common(cmd, flags[name]);
  }
  int criterion = 0;
  cmds["verify"]->add_option("--criterion", criterion,
                             "run a single criterion (1..11)");

  auto* kappa = app.add_subcommand("kappa", "evaluate kappa_a(lambda, mu)");
  double ka = 1.0, klambda = 0.0, kgamma = 1.5;
  std::string kmu = "0";
  kappa->add_option("--gamma", kgamma, "branching index")->required();
  kappa->add_option("--a", ka, "level")->required();
  kappa->add_option("--lambda", klambda, "mass dual variable")->required();
  kappa->add_option("--mu", kmu, "local-time dual (number or 'inf')")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (kappa->parsed()) {
      stlab::ModelParams p(kgamma);
      double mu = (kmu == "inf") ? stlab::mu_infinity : std::stod(kmu);
      auto sol = stlab::kappa_solve(ka, klambda, mu, p);
      std::printf("%.17g\n", sol.value);
      std::fprintf(stderr, "residual %.3e\n", sol.residual);
      return 0;
    }

    for (const auto& [name, cmd] : cmds) {
      if (!cmd->parsed()) continue;
      auto cfg = resolve(flags[name]);
      if (name == "simulate") return report_manifest(stlab::run_simulate(cfg));
      if (name == "csbp-verify")
        return report_manifest(stlab::run_csbp_verify(cfg));
      if (name == "tails") return report_manifest(stlab::run_tails(cfg));
      if (name == "exponents")
        return report_manifest(stlab::run_exponents(cfg));
      if (name == "spectrum") return report_manifest(stlab::run_spectrum(cfg));
      if (name == "dims") return report_manifest(stlab::run_dims(cfg));
      if (name == "xcheck") return report_manifest(stlab::run_xcheck(cfg));
      if (name == "verify") {
        stlab::VerifyOptions opt;
        opt.seed = cfg.seed;
        opt.trim = cfg.trim;
        opt.law_cache = cfg.law_cache;
        opt.out_dir = cfg.out_dir;
        std::vector<stlab::CriterionResult> results;
        if (criterion > 0)
          results.push_back(stlab::run_criterion(criterion, opt));
        else
          results = stlab::run_all_criteria(opt);
        for (const auto& r : results) {
          std::printf("%s criterion %d: %s (%.1fs)\n",
                      r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                      r.seconds);
          for (const auto& c : r.checks) {
            const char* tag = c.pass ? "  ok " : (c.blocked ? " BLKD" : " FAIL");
            std::printf("%s  %-55s target %-12.6g observed %-12.6g tol %.6g\n",
                        tag, c.name.c_str(), c.target, c.observed,
                        c.tolerance);
            if (!c.note.empty())
              std::printf("       note: %s\n", c.note.c_str());
          }
        }
        std::string report = stlab::verify_report_json(results, opt);
        std::string path = cfg.out_dir + "/verify_report.json";
        stlab::write_file_atomic(path, report);
        std::printf("report: %s\n", path.c_str());
        return stlab::overall_pass(results) ? 0 : 1;
      }
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 64;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
