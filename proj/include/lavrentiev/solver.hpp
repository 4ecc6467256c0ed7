#ifndef LAVRENTIEV_SOLVER_HPP
#define LAVRENTIEV_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lavrentiev/constraints.hpp"
#include "lavrentiev/operators.hpp"
#include "lavrentiev/space.hpp"

namespace lavrentiev {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Norm in which the stopping rule measures |u^{k+1} - u^k|.
enum class IncrementNorm {
  /// Plain Euclidean norm of the nodal vector in R^{N+1}. Node 0 is pinned to
  /// ubar after the first step, so this is sqrt(1/h) times the L2 increment.
  euclidean,
  /// The discrete L2 norm used everywhere else (euclidean * sqrt(h)).
  l2,
};

/// Parameters of the projected fixed-point iteration
///   u <- P_M(u - mu (F u + alpha (u - ubar) - f_delta)).
///
/// The iteration map is a (1 - mu alpha)-contraction as long as
/// 0 < mu < 2 tau and alpha <= 1/mu - 1/(2 tau), tau being the cocoercivity
/// constant of F on M. Both are checked by validate().
struct SolverConfig {
  double alpha = 1e-2;
  double mu = 0.25;
  /// ubar; unset means the zero function.
  std::optional<GridFunction> offset_ubar;
  /// Stop once |u^{k+1} - u^k| <= stop_c * delta, measured in increment_norm.
  double stop_c = 1.0;
  IncrementNorm increment_norm = IncrementNorm::euclidean;
  double delta = 0.0;
  /// Used instead of stop_c * delta when delta == 0. Unset: 1e-10 (1 + |f|).
  std::optional<double> abs_tol;
  std::size_t max_iters = 1'000'000;
  /// Starting point (projected onto M); unset means P_M(ubar).
  std::optional<GridFunction> initial_guess;
  /// Number of consecutive increment growths that counts as divergence.
  std::size_t divergence_window = 10;

  void validate(const OperatorConstants& c) const {
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (!(mu > 0.0)) throw ConfigError("step size mu must be positive");
    if (!(stop_c > 0.0)) throw ConfigError("stopping constant c must be positive");
    if (!(delta >= 0.0)) throw ConfigError("noise level delta must be nonnegative");
    if (abs_tol && !(*abs_tol > 0.0)) throw ConfigError("abs_tol must be positive");
    if (max_iters == 0) throw ConfigError("max_iters must be positive");
    const double two_tau = 2.0 * c.tau;
    if (!(mu < two_tau)) {
      std::ostringstream os;
      os << "step size must satisfy 0 < mu < 2 tau (mu = " << mu << ", 2 tau = " << two_tau
         << ")";
      throw ConfigError(os.str());
    }
    const double alpha_max = 1.0 / mu - 1.0 / two_tau;
    if (alpha > alpha_max * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "regularization parameter must satisfy alpha <= 1/mu - 1/(2 tau) (alpha = " << alpha
         << ", bound = " << alpha_max << ")";
      throw ConfigError(os.str());
    }
  }

  double stopping_tolerance(const GridFunction& f) const {
    if (delta > 0.0) return stop_c * delta;
    return abs_tol ? *abs_tol : 1e-10 * (1.0 + norm(f));
  }

  GridFunction ubar_on(const Grid& grid) const {
    if (!offset_ubar) return GridFunction::zero(grid);
    if (!(offset_ubar->grid() == grid)) throw DimensionError("offset_ubar: grid mismatch");
    return *offset_ubar;
  }
};

struct SolveResult {
  GridFunction solution;
  std::size_t iterations = 0;
  /// In the configured increment norm.
  double final_increment = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  bool diverged = false;
  double tolerance = 0.0;
  /// 1 - mu alpha
  double contraction_factor = 1.0;
  /// max over k >= 2 of |u^{k+1} - u^k| / |u^k - u^{k-1}|
  double max_increment_ratio = 0.0;
  std::size_t contraction_violations = 0;
};

namespace detail {

inline double contraction_slack(double previous_increment) {
  return 1e-12 * std::max(1.0, previous_increment);
}

}  // namespace detail

/// Solves the regularized variational inequality
///   find u in M : <F u + alpha (u - ubar) - f_delta, v - u> >= 0 for all v in M
/// by projected fixed-point iteration started at P_M(ubar) (or P_M(initial_guess)).
///
/// Throws NumericError when an iterate turns non-finite. Hitting max_iters or
/// detecting sustained increment growth yields converged == false.
template <MonotoneOperator Op, ConvexSet Set>
SolveResult vi_solve(const Op& op, const Set& set, const GridFunction& f_delta,
                     const SolverConfig& cfg) {
  cfg.validate(op.constants());
  const Grid grid = f_delta.grid();
  const GridFunction ubar = cfg.ubar_on(grid);
  const double tol = cfg.stopping_tolerance(f_delta);
  const double q = 1.0 - cfg.mu * cfg.alpha;
  const double scale =
      cfg.increment_norm == IncrementNorm::euclidean ? 1.0 / std::sqrt(grid.step()) : 1.0;

  if (cfg.initial_guess && !(cfg.initial_guess->grid() == grid))
    throw DimensionError("initial_guess: grid mismatch");
  SolveResult r{set.project(cfg.initial_guess ? *cfg.initial_guess : ubar)};
  r.tolerance = tol;
  r.contraction_factor = q;

  GridFunction u = r.solution;
  std::vector<double> next(grid.size());
  double prev_increment = -1.0;
  std::size_t growth = 0;

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    const GridFunction Fu = op.apply(u);
    for (std::size_t k = 0; k < next.size(); ++k)
      next[k] = u[k] - cfg.mu * (Fu[k] + cfg.alpha * (u[k] - ubar[k]) - f_delta[k]);
    next[0] = ubar[0];
    for (std::size_t k = 0; k < next.size(); ++k) {
      if (!std::isfinite(next[k])) {
        std::ostringstream os;
        os << "vi_solve: non-finite iterate at iteration " << it << ", node " << k;
        throw NumericError(os.str());
      }
    }
    GridFunction v = set.project(GridFunction(grid, next));
    const double inc = distance(v, u) * scale;
    u = std::move(v);
    r.iterations = it;
    r.final_increment = inc;

    if (prev_increment >= 0.0 && it >= 3) {
      const double ratio = prev_increment > 0.0 ? inc / prev_increment : (inc > 0.0 ? 1e300 : 0.0);
      r.max_increment_ratio = std::max(r.max_increment_ratio, ratio);
      if (inc > q * prev_increment + detail::contraction_slack(prev_increment))
        ++r.contraction_violations;
    }
    if (prev_increment >= 0.0 && inc > prev_increment) {
      if (++growth >= cfg.divergence_window) {
        r.diverged = true;
        break;
      }
    } else {
      growth = 0;
    }
    prev_increment = inc;

    if (inc <= tol) {
      r.converged = true;
      break;
    }
  }

  r.solution = u;
  r.residual_norm = distance(op.apply(u), f_delta);
  return r;
}

struct StabilityGap {
  double gap = 0.0;
  double bound = 0.0;
  double abs_tol = 0.0;
  bool converged = false;
  SolveResult exact;
  SolveResult noisy;
};

/// |u_alpha^delta - u_alpha| against delta / alpha. Both solves ignore the
/// delta-driven stopping rule and iterate down to abs_tol.
template <MonotoneOperator Op, ConvexSet Set>
StabilityGap stability_gap(const Op& op, const Set& set, const GridFunction& f_star,
                           const GridFunction& f_delta, const SolverConfig& cfg) {
  const double data_err = distance(f_star, f_delta);
  if (data_err > cfg.delta * (1.0 + 1e-12) + 1e-15) {
    std::ostringstream os;
    os << "stability_gap: |f_star - f_delta| = " << data_err << " exceeds delta = " << cfg.delta;
    throw std::invalid_argument(os.str());
  }
  SolverConfig tight = cfg;
  tight.delta = 0.0;
  tight.abs_tol = cfg.abs_tol ? *cfg.abs_tol : 1e-10 * (1.0 + norm(f_star));

  StabilityGap out{0.0, cfg.delta / cfg.alpha, *tight.abs_tol, false,
                   vi_solve(op, set, f_star, tight), vi_solve(op, set, f_delta, tight)};
  out.gap = distance(out.exact.solution, out.noisy.solution);
  out.converged = out.exact.converged && out.noisy.converged;
  return out;
}

struct ProfilePoint {
  double alpha = 0.0;
  double error_norm = 0.0;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t contraction_violations = 0;
};

/// Noise-free solves over a decreasing list of alphas, reporting
/// |u_alpha - u*| and |F u_alpha - f*| for rate fitting.
template <MonotoneOperator Op, ConvexSet Set>
std::vector<ProfilePoint> vi_residual_profile(const Op& op, const Set& set,
                                              const GridFunction& f_star,
                                              const GridFunction& u_star,
                                              const std::vector<double>& alphas,
                                              const GridFunction& ubar, double mu) {
  if (alphas.empty()) throw std::invalid_argument("vi_residual_profile: no alphas");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw std::invalid_argument("vi_residual_profile: alpha <= 0");
    if (i > 0 && !(alphas[i] < alphas[i - 1]))
      throw std::invalid_argument("vi_residual_profile: alphas must be strictly decreasing");
  }
  SolverConfig cfg;
  cfg.mu = mu;
  cfg.offset_ubar = ubar;
  cfg.delta = 0.0;
  cfg.abs_tol = alphas.back() * 1e-3 * norm(u_star);

  std::vector<ProfilePoint> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) {
    cfg.alpha = alpha;
    const SolveResult r = vi_solve(op, set, f_star, cfg);
    out.push_back({alpha, distance(r.solution, u_star), r.residual_norm, r.iterations,
                   r.converged, r.contraction_violations});
  }
  return out;
}

}  // namespace lavrentiev

#endif  // LAVRENTIEV_SOLVER_HPP
