#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pzo/harness.hpp"
#include "pzo/plot.hpp"
#include "pzo/selftest.hpp"

namespace {

// 0 success, 1 a run or check failed, 2 bad input.
constexpr int kFailed = 1;
constexpr int kBadInput = 2;

int cmd_run(const std::string& path, const pzo::harness::RunnerOptions& ro) {
  using namespace pzo::harness;
  const ExperimentConfig cfg = load_config(path);
  const ValidationReport rep = validate_config(cfg);
  if (!rep.ok(ro.force || cfg.force)) {
    std::cerr << rep.to_text() << "refusing to run (use --force to run anyway)\n";
    return kBadInput;
  }
  const ExperimentResult res = run_experiment(cfg, ro);
  std::cout << "wrote " << res.runs.size() << " runs to " << res.directory.string() << " ("
            << res.total_oracle_calls << " oracle calls)\n";
  if (!res.ok) {
    std::cerr << "one or more runs failed; see manifest.json\n";
    return kFailed;
  }
  return 0;
}

int cmd_validate(const std::string& path, bool force) {
  using namespace pzo::harness;
  const ValidationReport rep = validate_config(load_config(path));
  std::cout << rep.to_text();
  if (!rep.config_errors.empty()) return kBadInput;
  if (rep.has_violations()) {
    std::cout << (force ? "violations ignored (--force)\n" : "invalid\n");
    return force ? 0 : kFailed;
  }
  std::cout << "valid\n";
  return 0;
}

int cmd_plot(const std::string& dir) {
  const auto res = pzo::plot::plot_results(dir);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : res.files) std::cout << "wrote " << f.string() << '\n';
  return 0;
}

int cmd_selftest(long cases, pzo::Seed seed) {
  const auto rep = pzo::selftest::run_prox_selftest(cases, seed);
  for (const auto& f : rep.families) {
    std::cout << (f.failures == 0 ? "PASS " : "FAIL ") << f.name << ": " << f.cases << " cases, max error "
              << pzo::format_double(f.max_error) << '\n';
  }
  return rep.passed() ? 0 : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal zeroth-order primal-dual solver and benchmark harness"};
  app.set_version_flag("--version", std::string(pzo::harness::build_version()));
  app.require_subcommand(1);

  pzo::harness::RunnerOptions ro;
  std::string config, results_dir, diag;
  bool force = false;
  unsigned jobs = 0;
  pzo::Seed seed_offset = 0;

  auto* run = app.add_subcommand("run", "Run every (solver, seed) pair of a config");
  run->add_option("config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed-offset", seed_offset, "Added to every seed in the config");
  run->add_flag("--force", force, "Run even if solver parameters violate the convergence conditions");
  run->add_option("--jobs", jobs, "Worker threads (default: available cores)");
  run->add_option("--diagnostics", diag, "Override the config's diagnostics level")
      ->check(CLI::IsMember({"basic", "full"}));

  auto* validate = app.add_subcommand("validate", "Check a config and report parameter-condition violations");
  validate->add_option("config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  validate->add_flag("--force", force, "Exit 0 even if conditions are violated");

  auto* plot = app.add_subcommand("plot", "Write SVG charts from a results directory");
  plot->add_option("results-dir", results_dir, "Directory containing aggregate.csv")
      ->required()
      ->check(CLI::ExistingDirectory);

  long cases = 500;
  pzo::Seed st_seed = 20190101;
  auto* selftest = app.add_subcommand("prox-selftest", "Compare the closed-form prox against the brute-force oracle");
  selftest->add_option("--cases", cases, "Random cases for the main family")->check(CLI::PositiveNumber);
  selftest->add_option("--seed", st_seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ro.force = force;
      ro.jobs = jobs;
      ro.seed_offset = seed_offset;
      ro.log = &std::cerr;
      if (diag == "full") ro.diagnostics = pzo::DiagnosticsLevel::full;
      if (diag == "basic") ro.diagnostics = pzo::DiagnosticsLevel::basic;
      return cmd_run(config, ro);
    }
    if (*validate) return cmd_validate(config, force);
    if (*plot) return cmd_plot(results_dir);
    if (*selftest) return cmd_selftest(cases, st_seed);
  } catch (const pzo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadInput;
  } catch (const pzo::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return 0;
}
