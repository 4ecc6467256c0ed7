#ifndef LAVRENTIEV_EXPERIMENTS_HPP
#define LAVRENTIEV_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <future>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lavrentiev/constraints.hpp"
#include "lavrentiev/operators.hpp"
#include "lavrentiev/solver.hpp"
#include "lavrentiev/space.hpp"

namespace lavrentiev {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// alpha(delta) = delta^(2/3), which balances the O(alpha^(1/2)) approximation
/// error against the delta/alpha noise amplification.
inline double apriori_alpha(double delta) {
  if (!(delta > 0.0)) throw DomainError("apriori_alpha: delta must be positive");
  return std::cbrt(delta * delta);
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for table row `row`, independent of every other row.
inline std::uint64_t row_seed(std::uint64_t master, std::uint64_t row) {
  return splitmix64(master ^ splitmix64(row + 0x5851f42d4c957f2dULL));
}

struct NoiseModel {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

/// f_k + Delta_k with Delta_k i.i.d. uniform on [-delta, delta).
///
/// The uniform variate is built from the raw 64-bit engine output rather than
/// std::uniform_real_distribution, whose algorithm varies between standard
/// libraries; outputs are therefore identical on every platform.
inline GridFunction add_noise(const GridFunction& f, const NoiseModel& model) {
  if (!(model.delta >= 0.0)) throw DomainError("add_noise: delta must be nonnegative");
  if (model.delta == 0.0) return f;
  std::mt19937_64 eng(model.seed);
  std::vector<double> out(f.values().begin(), f.values().end());
  for (double& x : out) {
    const double unit = static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0, 1)
    x += model.delta * (2.0 * unit - 1.0);
  }
  return GridFunction(f.grid(), std::move(out));
}

// ---------------------------------------------------------------------------
// Worked examples
// ---------------------------------------------------------------------------

enum class ExampleId { example1, example2 };

inline std::optional<ExampleId> parse_example(std::string_view name) {
  if (name == "example1") return ExampleId::example1;
  if (name == "example2") return ExampleId::example2;
  return std::nullopt;
}

inline const char* to_string(ExampleId id) {
  return id == ExampleId::example1 ? "example1" : "example2";
}

struct ExampleSpec {
  std::string name;
  GridFunction u_star;
  /// Exact data from the closed form, not F(u_star).
  GridFunction f_star;
  double kappa = 0.0;
  double c0 = 1.0;
  /// Constant u_star(1).
  GridFunction ubar;
  /// Source element z with u_star - ubar = F'(u_star)^* z (continuous closed form).
  GridFunction z;
  double rho = 0.0;

  DecayOperator op() const { return DecayOperator(c0, kappa); }
  LowerBoundSet set() const { return LowerBoundSet(kappa); }
  /// Step size used for every experiment: kappa / 2.
  double mu() const { return kappa / 2.0; }
};

namespace detail {

struct ClosedForm {
  std::string name;
  double kappa;
  double (*u)(double);
  double (*du)(double);
  double (*U)(double);  // int_0^t u
};

// u*(t) = t/2 + 1/2
inline ClosedForm example1_form() {
  return {"example1", 0.5,
          [](double t) { return 0.5 * t + 0.5; },
          [](double) { return 0.5; },
          [](double t) { return 0.25 * t * t + 0.5 * t; }};
}

// u*(t) = sin(pi t)/4 + 1/3
inline ClosedForm example2_form() {
  using std::numbers::pi;
  return {"example2", 1.0 / 3.0,
          [](double t) { return 0.25 * std::sin(pi * t) + 1.0 / 3.0; },
          [](double t) { return 0.25 * pi * std::cos(pi * t); },
          [](double t) { return 0.25 / pi * (1.0 - std::cos(pi * t)) + t / 3.0; }};
}

}  // namespace detail

inline ExampleSpec build_example(ExampleId which, const Grid& grid, double c0 = 1.0) {
  const detail::ClosedForm cf =
      which == ExampleId::example1 ? detail::example1_form() : detail::example2_form();
  GridFunction u_star = GridFunction::sample(grid, cf.u);
  GridFunction f_star = GridFunction::sample(grid, [&](double t) { return -c0 * std::exp(-cf.U(t)); });
  GridFunction ubar = GridFunction::constant(grid, cf.u(1.0));
  // Differentiating u*(s) - ubar = -int_s^1 (F u*)(t) z(t) dt gives z = -u*' e^{U*} / c0.
  GridFunction z =
      GridFunction::sample(grid, [&](double t) { return -cf.du(t) * std::exp(cf.U(t)) / c0; });
  const double rho = norm(z);
  return {cf.name, std::move(u_star), std::move(f_star), cf.kappa, c0,
          std::move(ubar), std::move(z), rho};
}

struct SourceConditionCheck {
  double defect = 0.0;
  double rho = 0.0;
  double rho_L = 0.0;
};

/// |F'(u*)^* z - (u* - ubar)| for the closed-form z, plus rho = |z| and rho L.
inline SourceConditionCheck verify_source_condition(const ExampleSpec& spec) {
  const GridFunction lhs = decay_deriv_adjoint_apply(spec.u_star, spec.z, spec.c0);
  const double rho = norm(spec.z);
  return {distance(lhs, spec.u_star - spec.ubar), rho, rho * spec.op().constants().lipschitz_L};
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

/// 1e-2 * 2^-j, j = 0..8.
inline std::vector<double> table_deltas() {
  std::vector<double> d;
  for (int j = 0; j <= 8; ++j) d.push_back(1e-2 * std::ldexp(1.0, -j));
  return d;
}

struct ExperimentRow {
  double delta = 0.0;
  double rel_noise_pct = 0.0;
  double error_norm = 0.0;
  double ratio = 0.0;
  bool converged = false;
  double alpha = 0.0;
  std::size_t iterations = 0;
  std::size_t contraction_violations = 0;
  double max_increment_ratio = 0.0;
  double contraction_factor = 1.0;
};

/// One noisy solve with alpha = delta^(2/3) (or alpha_override), mu = kappa/2, c = 1.
inline SolveResult solve_noisy(const ExampleSpec& spec, double delta, std::uint64_t seed,
                               std::optional<double> alpha_override = std::nullopt) {
  if (!(delta >= 0.0)) throw DomainError("solve_noisy: delta must be nonnegative");
  SolverConfig cfg;
  cfg.alpha = alpha_override ? *alpha_override : apriori_alpha(delta);
  cfg.mu = spec.mu();
  cfg.offset_ubar = spec.ubar;
  cfg.stop_c = 1.0;
  cfg.delta = delta;
  const GridFunction f_delta = add_noise(spec.f_star, {delta, seed});
  return vi_solve(spec.op(), spec.set(), f_delta, cfg);
}

inline ExperimentRow run_row(const ExampleSpec& spec, double delta, std::uint64_t seed) {
  const SolveResult r = solve_noisy(spec, delta, seed);
  ExperimentRow row;
  row.delta = delta;
  row.rel_noise_pct = 100.0 * delta / norm(spec.f_star);
  row.error_norm = distance(r.solution, spec.u_star);
  row.ratio = row.error_norm / std::cbrt(delta);
  row.converged = r.converged;
  row.alpha = apriori_alpha(delta);
  row.iterations = r.iterations;
  row.contraction_violations = r.contraction_violations;
  row.max_increment_ratio = r.max_increment_ratio;
  row.contraction_factor = r.contraction_factor;
  return row;
}

/// Rows are seeded by (seed, row index) only, so serial and parallel runs agree bit for bit.
inline std::vector<ExperimentRow> run_table(const ExampleSpec& spec,
                                            const std::vector<double>& deltas,
                                            std::uint64_t seed, bool parallel = false) {
  if (deltas.empty()) throw std::invalid_argument("run_table: empty delta list");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0))
      throw std::invalid_argument("run_table: deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1]))
      throw std::invalid_argument("run_table: deltas must be strictly decreasing");
  }
  std::vector<ExperimentRow> rows(deltas.size());
  if (!parallel) {
    for (std::size_t i = 0; i < deltas.size(); ++i)
      rows[i] = run_row(spec, deltas[i], row_seed(seed, i));
    return rows;
  }
  std::vector<std::future<ExperimentRow>> jobs;
  for (std::size_t i = 0; i < deltas.size(); ++i)
    jobs.push_back(std::async(std::launch::async, [&spec, &deltas, seed, i] {
      return run_row(spec, deltas[i], row_seed(seed, i));
    }));
  for (std::size_t i = 0; i < jobs.size(); ++i) rows[i] = jobs[i].get();
  return rows;
}

/// Violations of the bounded-ratio behaviour expected from the delta^(1/3) rate.
inline std::vector<std::string> rate_boundedness_violations(const std::vector<ExperimentRow>& rows) {
  std::vector<std::string> out;
  if (rows.empty()) return out;
  char buf[160];
  for (const auto& r : rows) {
    if (!r.converged) {
      std::snprintf(buf, sizeof buf, "row delta=%.3e did not converge", r.delta);
      out.emplace_back(buf);
    }
  }
  auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.ratio < b.ratio;
  });
  if (hi->ratio > 8.0 * lo->ratio) {
    std::snprintf(buf, sizeof buf, "ratio spread max/min = %.3e exceeds 8", hi->ratio / lo->ratio);
    out.emplace_back(buf);
  }
  if (rows.back().ratio > 3.0 * rows.front().ratio) {
    std::snprintf(buf, sizeof buf, "last ratio %.3e exceeds 3x first ratio %.3e",
                  rows.back().ratio, rows.front().ratio);
    out.emplace_back(buf);
  }
  return out;
}

/// Scientific notation with 4 significant digits.
inline std::string sci4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<ExperimentRow>& rows) {
  os << "delta,rel_noise_pct,error_norm,ratio,converged\n";
  for (const auto& r : rows)
    os << sci4(r.delta) << ',' << sci4(r.rel_noise_pct) << ',' << sci4(r.error_norm) << ','
       << sci4(r.ratio) << ',' << (r.converged ? 1 : 0) << '\n';
}

/// Aligned four-column layout; non-converged rows are marked with '*'.
inline void write_text(std::ostream& os, const std::vector<ExperimentRow>& rows) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %-16s %-14s %-22s\n", "delta", "100*delta/|f|",
                "|u - u*|", "|u - u*| / delta^(1/3)");
  os << buf;
  os << std::string(67, '-') << '\n';
  bool any_flag = false;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %-16s %-14s %s%s\n", sci4(r.delta).c_str(),
                  sci4(r.rel_noise_pct).c_str(), sci4(r.error_norm).c_str(),
                  sci4(r.ratio).c_str(), r.converged ? "" : " *");
    os << buf;
    any_flag |= !r.converged;
  }
  if (any_flag) os << "* iteration limit reached before the stopping rule was met\n";
}

// ---------------------------------------------------------------------------
// Rate fitting
// ---------------------------------------------------------------------------

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("loglog_slope: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("loglog_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// n log-spaced values from hi down to lo.
inline std::vector<double> logspace_desc(double hi, double lo, std::size_t n) {
  if (n == 1) return {hi};
  std::vector<double> out(n);
  const double a = std::log10(hi), b = std::log10(lo);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

struct RateFit {
  std::vector<ProfilePoint> points;
  double error_slope = 0.0;
  double residual_slope = 0.0;
};

inline constexpr std::size_t kMinRatePoints = 4;

inline RateFit fit_rates(const ExampleSpec& spec, const std::vector<double>& alphas) {
  if (alphas.size() < kMinRatePoints)
    throw std::invalid_argument("fit_rates: need at least 4 alpha values");
  RateFit fit;
  fit.points = vi_residual_profile(spec.op(), spec.set(), spec.f_star, spec.u_star, alphas,
                                   spec.ubar, spec.mu());
  std::vector<double> a, e, res;
  for (const auto& p : fit.points) {
    a.push_back(p.alpha);
    e.push_back(p.error_norm);
    res.push_back(p.residual_norm);
  }
  fit.error_slope = loglog_slope(a, e);
  fit.residual_slope = loglog_slope(a, res);
  return fit;
}

// ---------------------------------------------------------------------------
// Error decomposition
// ---------------------------------------------------------------------------

struct ErrorDecomposition {
  double noisy_error = 0.0;  // |u_alpha^delta - u*|
  double exact_error = 0.0;  // |u_alpha - u*|
  double noise_term = 0.0;   // delta / alpha
  double slack = 0.0;
};

/// Both terms of |u_alpha^delta - u*| <= |u_alpha - u*| + delta/alpha, solved to abs_tol.
inline ErrorDecomposition error_decomposition(const ExampleSpec& spec, double delta, double alpha,
                                              std::uint64_t seed, double abs_tol = 1e-10) {
  SolverConfig cfg;
  cfg.alpha = alpha;
  cfg.mu = spec.mu();
  cfg.offset_ubar = spec.ubar;
  cfg.delta = delta;
  cfg.abs_tol = abs_tol;
  const GridFunction f_delta = add_noise(spec.f_star, {delta, seed});
  const StabilityGap g = stability_gap(spec.op(), spec.set(), spec.f_star, f_delta, cfg);
  return {distance(g.noisy.solution, spec.u_star), distance(g.exact.solution, spec.u_star),
          delta / alpha, 4.0 * abs_tol};
}

}  // namespace lavrentiev

#endif  // LAVRENTIEV_EXPERIMENTS_HPP
