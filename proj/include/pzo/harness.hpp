#pragma once

// Config-driven experiment runner. A config names one benchmark instance, a
// list of solvers and a list of seeds; every (solver, seed) pair becomes one
// run whose MetricRows are streamed to runs/<solver>_seed<seed>.csv. After all
// runs finish, aggregate.csv holds per-iteration median and quartiles across
// seeds and manifest.json records config, build, instance and call counts.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "pzo/baselines.hpp"
#include "pzo/diagnostics.hpp"
#include "pzo/errors.hpp"
#include "pzo/pca.hpp"
#include "pzo/pzo_pda.hpp"
#include "pzo/run_output.hpp"

#ifndef PZO_BUILD_VERSION
#define PZO_BUILD_VERSION "unknown"
#endif

namespace pzo::harness {

using nlohmann::json;

inline const char* build_version() { return PZO_BUILD_VERSION; }

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct InstanceSpec {
  std::string benchmark = "pca";
  int n_agents = 10;
  int n_edges = 27;
  Index d = 10;
  Index p = 100;
  double alpha = 1e-4;
  double noise_sd = 0.01;
  Seed seed = 2019;
  bool nonnegative = false;
};

enum class SolverKind { pzo_pda, rgf, zo_sgd };

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::pzo_pda: return "pzo_pda";
    case SolverKind::rgf: return "rgf";
    case SolverKind::zo_sgd: return "zo_sgd";
  }
  return "?";
}

inline const char* to_string(ScalingMode m) {
  switch (m) {
    case ScalingMode::closed_form: return "closed_form";
    case ScalingMode::explicit_gram: return "explicit_gram";
    case ScalingMode::identity_complement: return "identity_complement";
  }
  return "?";
}

inline const char* to_string(DiagnosticsLevel d) { return d == DiagnosticsLevel::full ? "full" : "basic"; }

// J may be a number or one of the schedules "R" (J = R) and "R^2" (J = R^2).
struct BatchSpec {
  enum class Kind { fixed, R, R_squared } kind = Kind::R;
  long value = 0;

  long resolve(long R) const {
    switch (kind) {
      case Kind::fixed: return value;
      case Kind::R: return R;
      case Kind::R_squared: return R * R;
    }
    return value;
  }
};

struct SolverSpec {
  std::string name;
  SolverKind kind = SolverKind::pzo_pda;
  std::optional<double> mu;  // default 1/sqrt(R)
  std::optional<BatchSpec> J;  // default R (rgf: 1)
  // PZO-PDA
  std::optional<double> rho, gamma, beta;  // unset: derived from L
  double alpha0 = 0.7;
  ScalingMode scaling = ScalingMode::closed_form;
  // baselines
  double penalty_rho = 0.0;
};

struct ExperimentConfig {
  InstanceSpec instance;
  std::vector<SolverSpec> solvers;
  std::vector<Seed> seeds;
  long R = 500;
  std::string output = "results";
  DiagnosticsLevel diagnostics = DiagnosticsLevel::basic;
  bool force = false;
  json source;  // the parsed document, echoed into the manifest
};

namespace detail {

inline std::optional<double> number_or_auto(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const json& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number or \"auto\"");
  return v.get<double>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig c;
  c.source = j;
  try {
    detail::reject_unknown(j, {"instance", "solvers", "seeds", "R", "output", "diagnostics", "force", "description"},
                           "config");
    if (j.contains("instance")) {
      const json& in = j.at("instance");
      detail::reject_unknown(
          in, {"benchmark", "n_agents", "n_edges", "d", "p", "alpha", "noise_sd", "seed", "nonnegative"}, "instance");
      c.instance.benchmark = in.value("benchmark", c.instance.benchmark);
      c.instance.n_agents = in.value("n_agents", c.instance.n_agents);
      c.instance.n_edges = in.value("n_edges", c.instance.n_edges);
      c.instance.d = in.value("d", c.instance.d);
      c.instance.p = in.value("p", c.instance.p);
      c.instance.alpha = in.value("alpha", c.instance.alpha);
      c.instance.noise_sd = in.value("noise_sd", c.instance.noise_sd);
      c.instance.seed = in.value("seed", c.instance.seed);
      c.instance.nonnegative = in.value("nonnegative", c.instance.nonnegative);
    }
    c.R = j.value("R", c.R);
    c.output = j.value("output", c.output);
    c.force = j.value("force", false);
    if (j.contains("diagnostics")) {
      const auto d = j.at("diagnostics").get<std::string>();
      if (d == "basic") c.diagnostics = DiagnosticsLevel::basic;
      else if (d == "full") c.diagnostics = DiagnosticsLevel::full;
      else throw ConfigError("diagnostics: expected \"basic\" or \"full\"");
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<Seed>>();
    if (!j.contains("solvers") || !j.at("solvers").is_array()) throw ConfigError("config: 'solvers' must be a list");
    std::size_t idx = 0;
    for (const json& s : j.at("solvers")) {
      const std::string where = "solvers[" + std::to_string(idx++) + "]";
      detail::reject_unknown(
          s, {"name", "type", "mu", "J", "rho", "gamma", "beta", "alpha0", "scaling", "penalty_rho"}, where);
      SolverSpec sp;
      const auto type = s.at("type").get<std::string>();
      if (type == "pzo_pda") sp.kind = SolverKind::pzo_pda;
      else if (type == "rgf") sp.kind = SolverKind::rgf;
      else if (type == "zo_sgd") sp.kind = SolverKind::zo_sgd;
      else throw ConfigError(where + ".type: unknown solver '" + type + "'");
      sp.name = s.value("name", type);
      sp.mu = detail::number_or_auto(s, "mu", where);
      if (s.contains("J")) {
        const json& jv = s.at("J");
        BatchSpec b;
        if (jv.is_number_integer()) {
          b.kind = BatchSpec::Kind::fixed;
          b.value = jv.get<long>();
        } else if (jv.is_string() && jv.get<std::string>() == "R") {
          b.kind = BatchSpec::Kind::R;
        } else if (jv.is_string() && jv.get<std::string>() == "R^2") {
          b.kind = BatchSpec::Kind::R_squared;
        } else {
          throw ConfigError(where + ".J: expected an integer, \"R\" or \"R^2\"");
        }
        sp.J = b;
      }
      sp.rho = detail::number_or_auto(s, "rho", where);
      sp.gamma = detail::number_or_auto(s, "gamma", where);
      sp.beta = detail::number_or_auto(s, "beta", where);
      sp.alpha0 = s.value("alpha0", sp.alpha0);
      if (s.contains("scaling")) {
        const auto m = s.at("scaling").get<std::string>();
        if (m == "closed_form") sp.scaling = ScalingMode::closed_form;
        else if (m == "identity_complement") sp.scaling = ScalingMode::identity_complement;
        else throw ConfigError(where + ".scaling: expected \"closed_form\" or \"identity_complement\"");
      }
      sp.penalty_rho = s.value("penalty_rho", 0.0);
      c.solvers.push_back(std::move(sp));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Resolution and validation
// ---------------------------------------------------------------------------

inline pca::PcaInstance build_instance(const InstanceSpec& s) {
  if (s.benchmark != "pca") throw ConfigError("instance.benchmark: unknown benchmark '" + s.benchmark + "'");
  return pca::generate_instance(s.n_agents, s.n_edges, s.d, s.p, s.alpha, s.noise_sd, s.seed, s.nonnegative);
}

struct ResolvedSolver {
  SolverSpec spec;
  SolverParams pzo;        // kind == pzo_pda
  BaselineParams baseline; // otherwise
  std::vector<Violation> violations;

  double mu() const { return spec.kind == SolverKind::pzo_pda ? pzo.mu : baseline.mu; }
  long J() const { return spec.kind == SolverKind::pzo_pda ? pzo.J : baseline.J; }

  json params_json() const {
    json j;
    j["type"] = to_string(spec.kind);
    j["mu"] = mu();
    j["J"] = J();
    if (spec.kind == SolverKind::pzo_pda) {
      j["rho"] = pzo.rho;
      j["gamma"] = pzo.gamma;
      j["beta"] = pzo.beta;
      j["scaling"] = to_string(pzo.scaling);
    } else {
      j["step_rule"] = spec.kind == SolverKind::rgf ? "0.01*sqrt(ln 2)/r" : "0.01/sqrt(r)";
      j["penalty_rho"] = spec.penalty_rho;
    }
    return j;
  }
};

inline ResolvedSolver resolve_solver(const SolverSpec& s, long R, double L) {
  ResolvedSolver out;
  out.spec = s;
  const double mu = s.mu ? *s.mu : 1.0 / std::sqrt(static_cast<double>(std::max(R, 1L)));
  if (s.kind == SolverKind::pzo_pda) {
    const ParamPreset preset = derive_params(L, s.alpha0, s.gamma);
    SolverParams& p = out.pzo;
    p.rho = s.rho.value_or(preset.rho);
    p.gamma = s.gamma ? *s.gamma : (s.rho ? s.alpha0 / p.rho : preset.gamma);
    p.beta = s.beta.value_or(s.rho ? std::min(p.rho, preset.beta) : preset.beta);
    p.mu = mu;
    p.J = s.J ? s.J->resolve(R) : R;
    p.R = R;
    p.scaling = s.scaling;
    out.violations = validate_params(p, L);
  } else {
    const long J = s.kind == SolverKind::rgf ? 1 : (s.J ? s.J->resolve(R) : R);
    out.baseline = s.kind == SolverKind::rgf ? make_rgf_params(R, mu) : make_zo_sgd_params(R, mu, J);
    try {
      out.baseline.check();
    } catch (const ParameterError& e) {
      out.violations.push_back({e.what(), 0.0, 0.0});
    }
  }
  return out;
}

struct SolverReport {
  std::string solver;
  json params;
  std::vector<Violation> violations;
};

struct ValidationReport {
  std::vector<std::string> config_errors;
  std::vector<SolverReport> solvers;
  double smoothness = 0.0;

  bool has_violations() const {
    return std::any_of(solvers.begin(), solvers.end(), [](const SolverReport& s) { return !s.violations.empty(); });
  }
  bool ok(bool force) const { return config_errors.empty() && (force || !has_violations()); }

  std::string to_text() const {
    std::ostringstream os;
    for (const auto& e : config_errors) os << "config error: " << e << '\n';
    if (!config_errors.empty()) return os.str();
    os << "instance smoothness L = " << format_double(smoothness) << '\n';
    for (const auto& s : solvers) {
      os << s.solver << ' ' << s.params.dump() << '\n';
      if (s.violations.empty()) os << "  ok\n";
      for (const auto& v : s.violations) os << "  violation: " << v.describe() << '\n';
    }
    return os.str();
  }
};

inline ValidationReport validate_config(const ExperimentConfig& c) {
  ValidationReport rep;
  if (c.solvers.empty()) rep.config_errors.push_back("at least one solver is required");
  if (c.seeds.empty()) rep.config_errors.push_back("seeds must be nonempty");
  if (c.R < 1) rep.config_errors.push_back("R must be >= 1");
  for (std::size_t i = 0; i < c.solvers.size(); ++i) {
    const auto& n = c.solvers[i].name;
    if (n.empty() || n.find_first_of("/\\ ,") != std::string::npos)
      rep.config_errors.push_back("solver name '" + n + "' must be nonempty without spaces, commas or slashes");
    for (std::size_t k = 0; k < i; ++k)
      if (c.solvers[k].name == n) rep.config_errors.push_back("duplicate solver name '" + n + "'");
  }
  if (!rep.config_errors.empty()) return rep;
  pca::PcaInstance inst;
  try {
    inst = build_instance(c.instance);
  } catch (const std::exception& e) {
    rep.config_errors.push_back(std::string("instance: ") + e.what());
    return rep;
  }
  rep.smoothness = inst.problem.oracle.smoothness;
  for (const auto& s : c.solvers) {
    try {
      const ResolvedSolver r = resolve_solver(s, c.R, rep.smoothness);
      rep.solvers.push_back({s.name, r.params_json(), r.violations});
    } catch (const std::exception& e) {
      rep.solvers.push_back({s.name, json::object(), {{e.what(), 0.0, 0.0}}});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

// Linear-interpolation quantile on sorted data (the usual "type 7" rule),
// written to reproduce numpy's default arithmetic.
inline double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) throw ContractViolation("quantile of empty sample");
  const double h = (static_cast<double>(s.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double t = h - static_cast<double>(lo);
  const double a = s[lo], b = s[hi];
  const double diff = b - a;
  return t >= 0.5 ? b - diff * (1.0 - t) : a + diff * t;
}

inline double median_sorted(const std::vector<double>& s) {
  if (s.empty()) throw ContractViolation("median of empty sample");
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : (s[n / 2 - 1] + s[n / 2]) / 2.0;
}

// Columns aggregated across seeds (wall time is excluded so the file is reproducible).
inline const std::vector<std::string>& aggregated_metrics() {
  static const std::vector<std::string> m = {"psi",       "psi_mu",    "constraint_violation", "Q",
                                             "Q_shifted", "primal_step", "dual_step",          "oracle_calls_cum",
                                             "residual"};
  return m;
}

inline std::optional<double> metric_value(const MetricRow& row, const std::string& name) {
  if (name == "psi") return row.psi;
  if (name == "psi_mu") return row.psi_mu;
  if (name == "constraint_violation") return row.constraint_violation;
  if (name == "Q") return row.Q;
  if (name == "Q_shifted") return row.Q_shifted;
  if (name == "primal_step") return row.primal_step;
  if (name == "dual_step") return row.dual_step;
  if (name == "oracle_calls_cum") return static_cast<double>(row.oracle_calls_cum);
  if (name == "wall_ms") return row.wall_ms;
  if (name == "residual") return row.residual;
  throw ContractViolation("unknown metric " + name);
}

struct SolverRuns {
  std::string solver;
  std::vector<const std::vector<MetricRow>*> runs;  // one per seed
};

inline void write_aggregate_csv(std::ostream& os, const std::vector<SolverRuns>& groups) {
  os << "solver,r";
  for (const auto& m : aggregated_metrics()) os << ',' << m << "_median," << m << "_q1," << m << "_q3";
  os << '\n';
  for (const auto& g : groups) {
    std::size_t len = 0;
    for (const auto* rows : g.runs) len = std::max(len, rows->size());
    for (std::size_t i = 0; i < len; ++i) {
      os << g.solver << ',' << (i + 1);
      for (const auto& m : aggregated_metrics()) {
        std::vector<double> vals;
        for (const auto* rows : g.runs)
          if (i < rows->size())
            if (auto v = metric_value((*rows)[i], m)) vals.push_back(*v);
        if (vals.empty()) {
          os << ",,,";
          continue;
        }
        std::sort(vals.begin(), vals.end());
        os << ',' << format_double(median_sorted(vals)) << ',' << format_double(quantile_sorted(vals, 0.25)) << ','
           << format_double(quantile_sorted(vals, 0.75));
      }
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

struct RunnerOptions {
  unsigned jobs = 0;  // 0: hardware concurrency
  Seed seed_offset = 0;
  bool force = false;
  std::optional<DiagnosticsLevel> diagnostics;
  std::optional<std::string> output;
  std::ostream* log = nullptr;
};

struct RunRecord {
  std::string solver;
  Seed seed = 0;
  std::string file;
  bool ok = false;
  std::string error;
  std::vector<MetricRow> rows;
  long long oracle_calls = 0;
  long sample_index = 0;
  std::vector<std::string> warnings;
};

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<RunRecord> runs;
  long long total_oracle_calls = 0;
  bool ok = true;
};

inline std::string run_file_name(const std::string& solver, Seed seed) {
  return solver + "_seed" + std::to_string(seed) + ".csv";
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunnerOptions& opts = {}) {
  const bool force = opts.force || cfg.force;
  const ValidationReport rep = validate_config(cfg);
  if (!rep.config_errors.empty()) throw ConfigError(rep.to_text());
  if (!rep.ok(force)) throw ParameterError("solver parameters violate the convergence conditions:\n" + rep.to_text());

  const DiagnosticsLevel diag = opts.diagnostics.value_or(cfg.diagnostics);
  const pca::PcaInstance inst = build_instance(cfg.instance);
  const double L = inst.problem.oracle.smoothness;
  std::vector<ResolvedSolver> solvers;
  std::vector<ProblemInstance> problems;
  for (const auto& s : cfg.solvers) {
    solvers.push_back(resolve_solver(s, cfg.R, L));
    problems.push_back(s.kind != SolverKind::pzo_pda && s.penalty_rho > 0.0
                           ? with_quadratic_penalty(inst.problem, s.penalty_rho)
                           : inst.problem);
  }

  ExperimentResult res;
  res.directory = opts.output.value_or(cfg.output);
  const auto runs_dir = res.directory / "runs";
  std::filesystem::create_directories(runs_dir);
  for (const auto& e : std::filesystem::directory_iterator(runs_dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") std::filesystem::remove(e.path());

  for (const auto& s : cfg.solvers)
    for (Seed seed : cfg.seeds) {
      RunRecord rec;
      rec.solver = s.name;
      rec.seed = seed + opts.seed_offset;
      rec.file = "runs/" + run_file_name(s.name, rec.seed);
      res.runs.push_back(std::move(rec));
    }

  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!opts.log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    *opts.log << msg << '\n' << std::flush;
  };

  const std::size_t n_seeds = cfg.seeds.size();
  auto execute = [&](std::size_t t) {
    RunRecord& rec = res.runs[t];
    const std::size_t si = t / n_seeds;
    const ResolvedSolver& solver = solvers[si];
    const ProblemInstance& prob = problems[si];
    Rng x0_rng = make_stream(rec.seed, Stream::initial_point);
    const Vector x0 = pca::uniform_initial_point(prob.dimension(), x0_rng);

    std::ofstream csv(res.directory / rec.file);
    csv << metric_csv_header() << '\n';
    auto on_row = [&](const MetricRow& row) { csv << to_csv_line(row) << '\n'; };
    try {
      RunOutput out;
      if (solver.spec.kind == SolverKind::pzo_pda) {
        RunOptions ro;
        ro.force = force;
        ro.diagnostics = diag;
        ro.on_row = on_row;
        ro.x0 = x0;
        out = run(prob, solver.pzo, rec.seed, ro);
      } else {
        BaselineOptions bo;
        bo.on_row = on_row;
        bo.x0 = x0;
        out = run_baseline(prob, solver.baseline, rec.seed, bo);
      }
      rec.ok = true;
      rec.rows = std::move(out.trajectory);
      rec.oracle_calls = out.oracle_calls;
      rec.sample_index = out.sample_index;
      rec.warnings = std::move(out.warnings);
      log(rec.solver + " seed " + std::to_string(rec.seed) + ": done, constraint violation " +
          format_double(rec.rows.empty() ? 0.0 : rec.rows.back().constraint_violation));
    } catch (const RunAborted& e) {
      rec.error = e.what();
      rec.rows = e.partial().trajectory;
      rec.oracle_calls = e.partial().oracle_calls;
      log(rec.solver + " seed " + std::to_string(rec.seed) + ": FAILED: " + rec.error);
    } catch (const std::exception& e) {
      rec.error = e.what();
      log(rec.solver + " seed " + std::to_string(rec.seed) + ": FAILED: " + rec.error);
    }
    csv.flush();
    if (!csv) {
      rec.ok = false;
      rec.error += (rec.error.empty() ? "" : "; ") + std::string("could not write ") + rec.file;
    }
  };

  unsigned jobs = opts.jobs ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, res.runs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < res.runs.size(); t = next++) execute(t);
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<SolverRuns> groups;
  for (std::size_t si = 0; si < cfg.solvers.size(); ++si) {
    SolverRuns g{cfg.solvers[si].name, {}};
    for (std::size_t k = 0; k < n_seeds; ++k) g.runs.push_back(&res.runs[si * n_seeds + k].rows);
    groups.push_back(std::move(g));
  }
  {
    std::ofstream agg(res.directory / "aggregate.csv");
    write_aggregate_csv(agg, groups);
  }

  json manifest;
  manifest["build"] = build_version();
  manifest["config"] = cfg.source;
  manifest["seed_offset"] = opts.seed_offset;
  manifest["forced"] = force;
  manifest["diagnostics"] = to_string(diag);
  manifest["instance"] = pca::to_json(inst);
  manifest["instance"]["smoothness"] = L;
  manifest["solvers"] = json::array();
  for (const auto& s : solvers) {
    json js;
    js["name"] = s.spec.name;
    js["params"] = s.params_json();
    js["violations"] = json::array();
    for (const auto& v : s.violations) js["violations"].push_back(v.describe());
    manifest["solvers"].push_back(js);
  }
  manifest["runs"] = json::array();
  for (const auto& r : res.runs) {
    res.total_oracle_calls += r.oracle_calls;
    res.ok = res.ok && r.ok;
    json jr;
    jr["solver"] = r.solver;
    jr["seed"] = r.seed;
    jr["file"] = r.file;
    jr["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) jr["error"] = r.error;
    jr["iterations"] = r.rows.size();
    jr["oracle_calls"] = r.oracle_calls;
    jr["sample_index"] = r.sample_index;
    if (!r.warnings.empty()) jr["warnings"] = r.warnings;
    manifest["runs"].push_back(jr);
  }
  manifest["total_oracle_calls"] = res.total_oracle_calls;
  manifest["status"] = res.ok ? "ok" : "failed";
  std::ofstream(res.directory / "manifest.json") << manifest.dump(2) << '\n';
  return res;
}

}  // namespace pzo::harness
