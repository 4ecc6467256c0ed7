#ifndef LAVRENTIEV_CLI_HPP
#define LAVRENTIEV_CLI_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lavrentiev/diagnostics.hpp"
#include "lavrentiev/experiments.hpp"
#include "lavrentiev/solver.hpp"

namespace lavrentiev::cli {

enum ExitCode : int {
  kOk = 0,
  kInvariantFailure = 2,
  kConvergenceFailure = 3,
  kUsage = 64,
};

enum class Command { table, diagnostics, solve, rates };
enum class Format { csv, text };

struct CliConfig {
  Command command = Command::table;
  std::string example = "example1";
  std::size_t n_intervals = 200;
  std::uint64_t seed = 0;
  double delta = 1e-2;
  std::optional<double> alpha_override;
  std::optional<std::string> output_path;
  Format format = Format::csv;
  bool parallel = false;
  std::size_t rate_points = 8;
  double alpha_max = 1e-1;
  double alpha_min = 1e-4;
  bool inject_sign_flip = false;
};

/// Environment variable naming a directory that relative --output paths resolve against.
inline constexpr const char* kOutputDirEnv = "LAVRENTIEV_OUTPUT_DIR";

inline constexpr const char* kHelpFooter =
    "Exit codes: 0 success, 2 invariant failure, 3 convergence failure, 64 usage error.\n"
    "Every solve uses the lower-bound set u >= kappa, step size mu = kappa/2 and\n"
    "requires 0 < mu < 2 tau and alpha <= 1/mu - 1/(2 tau), tau = kappa/(2 c0);\n"
    "with c0 = 1 this means alpha <= 1/kappa (2 for example1, 3 for example2).";

namespace detail {

inline std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) return std::filesystem::path(dir) / p;
  }
  return p;
}

/// Runs `body` against the configured output file, or `out` when none is set.
template <class Body>
int with_output(const CliConfig& cfg, std::ostream& out, std::ostream& err, Body body) {
  if (!cfg.output_path) return body(out);
  const auto path = resolve_output(*cfg.output_path);
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    err << "error: cannot open output file " << path.string() << '\n';
    return kUsage;
  }
  return body(static_cast<std::ostream&>(file));
}

inline ExampleSpec example_of(const CliConfig& cfg) {
  return build_example(*parse_example(cfg.example), Grid(cfg.n_intervals));
}

}  // namespace detail

inline int cmd_table(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const ExampleSpec spec = detail::example_of(cfg);
  const auto rows = run_table(spec, table_deltas(), cfg.seed, cfg.parallel);
  const int rc = detail::with_output(cfg, out, err, [&](std::ostream& os) {
    if (cfg.format == Format::text) {
      os << "Results for " << spec.name << " (N = " << cfg.n_intervals << ", seed = " << cfg.seed
         << ")\n";
      write_text(os, rows);
    } else {
      write_csv(os, rows);
    }
    return static_cast<int>(kOk);
  });
  if (rc != kOk) return rc;
  const auto violations = rate_boundedness_violations(rows);
  for (const auto& v : violations) err << "invariant violated: " << v << '\n';
  for (const auto& r : rows)
    if (!r.converged) return kConvergenceFailure;
  return violations.empty() ? kOk : kInvariantFailure;
}

inline int cmd_diagnostics(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const ExampleId id = *parse_example(cfg.example);
  const ExampleSpec spec = build_example(id, Grid(cfg.n_intervals));
  const OperatorConstants c = spec.op().constants();
  DiagnosticsOptions opt;
  opt.seed = cfg.seed;
  opt.n_intervals = cfg.n_intervals;
  opt.flip_sign = cfg.inject_sign_flip;
  const auto suites = run_diagnostics(id, opt);
  bool all = true;
  const int rc = detail::with_output(cfg, out, err, [&](std::ostream& os) {
    os << spec.name << ": kappa = " << sci4(c.kappa) << ", c0 = " << sci4(c.c0)
       << ", tau = " << sci4(c.tau) << ", L = " << sci4(c.lipschitz_L) << '\n';
    char buf[256];
    for (const auto& s : suites) {
      std::snprintf(buf, sizeof buf, "%s  %-24s value = %s  bound = %s  [%s]\n",
                    s.passed ? "PASS" : "FAIL", s.name.c_str(), sci4(s.value).c_str(),
                    sci4(s.threshold).c_str(), s.description.c_str());
      os << buf;
      all &= s.passed;
    }
    return static_cast<int>(kOk);
  });
  if (rc != kOk) return rc;
  for (const auto& s : suites)
    if (!s.passed) err << "suite " << s.name << " failed; counterexample: " << s.counterexample << '\n';
  return all ? kOk : kInvariantFailure;
}

inline int cmd_rates(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.rate_points < kMinRatePoints) {
    err << "error: rate fitting needs at least " << kMinRatePoints << " alpha points\n";
    return kUsage;
  }
  if (!(cfg.alpha_min > 0.0) || !(cfg.alpha_min < cfg.alpha_max)) {
    err << "error: need 0 < alpha-min < alpha-max\n";
    return kUsage;
  }
  const ExampleSpec spec = detail::example_of(cfg);
  const RateFit fit = fit_rates(spec, logspace_desc(cfg.alpha_max, cfg.alpha_min, cfg.rate_points));
  const bool slopes_ok = fit.error_slope >= 0.45 && fit.residual_slope >= 0.9;
  const int rc = detail::with_output(cfg, out, err, [&](std::ostream& os) {
    char buf[200];
    if (cfg.format == Format::csv) {
      os << "alpha,error_norm,residual_norm,iterations,converged\n";
      for (const auto& p : fit.points)
        os << sci4(p.alpha) << ',' << sci4(p.error_norm) << ',' << sci4(p.residual_norm) << ','
           << p.iterations << ',' << (p.converged ? 1 : 0) << '\n';
      os << "# error_slope=" << sci4(fit.error_slope)
         << " residual_slope=" << sci4(fit.residual_slope) << '\n';
    } else {
      std::snprintf(buf, sizeof buf, "%-12s %-14s %-16s %s\n", "alpha", "|u_a - u*|",
                    "|F u_a - f*|", "iterations");
      os << buf;
      for (const auto& p : fit.points) {
        std::snprintf(buf, sizeof buf, "%-12s %-14s %-16s %zu%s\n", sci4(p.alpha).c_str(),
                      sci4(p.error_norm).c_str(), sci4(p.residual_norm).c_str(), p.iterations,
                      p.converged ? "" : " (not converged)");
        os << buf;
      }
      os << "error slope    = " << sci4(fit.error_slope) << "  (required >= 0.45)\n";
      os << "residual slope = " << sci4(fit.residual_slope) << "  (required >= 0.9)\n";
    }
    return static_cast<int>(kOk);
  });
  if (rc != kOk) return rc;
  bool converged = true;
  for (const auto& p : fit.points) {
    if (!p.converged) {
      err << "alpha = " << sci4(p.alpha) << ": solve did not converge\n";
      converged = false;
    }
  }
  if (!converged) return kConvergenceFailure;
  if (!slopes_ok) {
    err << "invariant violated: fitted slopes below the required 0.45 / 0.9\n";
    return kInvariantFailure;
  }
  return kOk;
}

inline int cmd_solve(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!(cfg.delta >= 0.0)) {
    err << "error: delta must be nonnegative\n";
    return kUsage;
  }
  if (cfg.delta == 0.0 && !cfg.alpha_override) {
    err << "error: delta = 0 needs an explicit --alpha (the a priori rule needs delta > 0)\n";
    return kUsage;
  }
  const ExampleSpec spec = detail::example_of(cfg);
  const double alpha = cfg.alpha_override ? *cfg.alpha_override : apriori_alpha(cfg.delta);
  SolveResult r{GridFunction::zero(spec.u_star.grid())};
  try {
    r = solve_noisy(spec, cfg.delta, row_seed(cfg.seed, 0), alpha);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  const double error = distance(r.solution, spec.u_star);
  const int rc = detail::with_output(cfg, out, err, [&](std::ostream& os) {
    os << "t,u\n";
    const Grid& g = r.solution.grid();
    for (std::size_t k = 0; k < g.size(); ++k) os << sci4(g.node(k)) << ',' << sci4(r.solution[k]) << '\n';
    os << "# example=" << spec.name << " delta=" << sci4(cfg.delta) << " alpha=" << sci4(alpha)
       << " iterations=" << r.iterations << " error=" << sci4(error)
       << " residual=" << sci4(r.residual_norm) << " converged=" << (r.converged ? 1 : 0) << '\n';
    return static_cast<int>(kOk);
  });
  if (rc != kOk) return rc;
  if (!r.converged) {
    err << "solve did not converge after " << r.iterations << " iterations\n";
    return kConvergenceFailure;
  }
  return kOk;
}

inline int dispatch(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  switch (cfg.command) {
    case Command::table: return cmd_table(cfg, out, err);
    case Command::diagnostics: return cmd_diagnostics(cfg, out, err);
    case Command::solve: return cmd_solve(cfg, out, err);
    case Command::rates: return cmd_rates(cfg, out, err);
  }
  return kUsage;
}

/// Parses argv (argv[0] is the program name) and runs the selected command.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"Lavrentiev regularization of monotone variational inequalities", "lavrentiev"};
  app.footer(kHelpFooter);
  app.require_subcommand(1);

  std::string format = "csv";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--example", cfg.example, "Worked example")
        ->check(CLI::IsMember({"example1", "example2"}))
        ->capture_default_str();
    sub->add_option("--n-intervals,-N", cfg.n_intervals, "Grid intervals N (h = 1/N)")
        ->check(CLI::Range(std::size_t{4}, std::size_t{1} << 24))
        ->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Master noise/sampling seed")->capture_default_str();
    sub->add_option("--output,-o", cfg.output_path,
                    std::string("Write results here instead of stdout (relative paths resolve "
                                "against $") + kOutputDirEnv + " when set)");
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "text"}))
        ->capture_default_str();
  };

  auto* table = app.add_subcommand("table", "Noisy-data tables with alpha = delta^(2/3)");
  add_common(table);
  table->add_flag("--parallel", cfg.parallel, "Compute rows concurrently (output is identical)");

  auto* diag = app.add_subcommand("diagnostics", "Run every property suite, one PASS/FAIL line each");
  add_common(diag);
  diag->add_flag("--inject-sign-flip", cfg.inject_sign_flip,
                 "Test hook: replace F by -F so the operator suites must fail")
      ->group("");

  auto* solve = app.add_subcommand("solve", "One noisy solve; writes t,u CSV and a summary line");
  add_common(solve);
  solve->add_option("--delta", cfg.delta, "Noise level delta >= 0")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  solve->add_option("--alpha", cfg.alpha_override, "Regularization parameter (default delta^(2/3))")
      ->check(CLI::PositiveNumber);

  auto* rates = app.add_subcommand("rates", "Noise-free convergence rates in alpha");
  add_common(rates);
  rates->add_option("--points", cfg.rate_points, "Number of log-spaced alpha values (>= 4)")
      ->capture_default_str();
  rates->add_option("--alpha-max", cfg.alpha_max, "Largest alpha")->capture_default_str();
  rates->add_option("--alpha-min", cfg.alpha_min, "Smallest alpha")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  }

  if (table->parsed()) cfg.command = Command::table;
  else if (diag->parsed()) cfg.command = Command::diagnostics;
  else if (solve->parsed()) cfg.command = Command::solve;
  else cfg.command = Command::rates;
  cfg.format = format == "text" ? Format::text : Format::csv;

  try {
    return dispatch(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kConvergenceFailure;
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace lavrentiev::cli

#endif  // LAVRENTIEV_CLI_HPP
