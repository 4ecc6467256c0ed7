#ifndef LAVRENTIEV_DIAGNOSTICS_HPP
#define LAVRENTIEV_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lavrentiev/constraints.hpp"
#include "lavrentiev/experiments.hpp"
#include "lavrentiev/operators.hpp"
#include "lavrentiev/solver.hpp"
#include "lavrentiev/space.hpp"

namespace lavrentiev {

/// Outcome of one property suite. `value` is the extremal measured quantity,
/// `threshold` the bound it was compared against.
struct SuiteResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string description;
  /// First offending sample, serialized; empty when the suite passed.
  std::string counterexample;
};

inline std::string serialize(const GridFunction& u) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t k = 0; k < u.size(); ++k) os << (k ? "," : "") << u[k];
  os << ']';
  return os.str();
}

/// Random elements of L2 and of D_kappa = { u >= kappa }.
class Sampler {
public:
  Sampler(Grid grid, std::uint64_t seed) : grid_(grid), eng_(seed) {}

  const Grid& grid() const noexcept { return grid_; }
  std::mt19937_64& engine() noexcept { return eng_; }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }

  GridFunction normal(double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<double> v(grid_.size());
    for (double& x : v) x = nd(eng_);
    return GridFunction(grid_, std::move(v));
  }

  /// kappa + |N(0,1)| per node, optionally followed by one three-point averaging pass.
  GridFunction member(double kappa, bool smooth) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> v(grid_.size());
    for (double& x : v) x = kappa + std::abs(nd(eng_));
    if (smooth) {
      std::vector<double> s = v;
      for (std::size_t k = 1; k + 1 < v.size(); ++k) s[k] = (v[k - 1] + v[k] + v[k + 1]) / 3.0;
      v = std::move(s);
    }
    return GridFunction(grid_, std::move(v));
  }

  /// Alternates rough and smoothed members.
  GridFunction member(double kappa) { return member(kappa, (flip_ = !flip_)); }

private:
  Grid grid_;
  std::mt19937_64 eng_;
  bool flip_ = false;
};

inline constexpr double kPropertySlack = 1e-10;
inline constexpr double kAdjointTolerance = 1e-12;

/// <F u - F v, u - v> >= tau |F u - F v|^2 - slack on random pairs in D_kappa.
/// With tau = 0 this is plain monotonicity.
template <MonotoneOperator Op>
SuiteResult check_cocoercivity(const Op& op, double kappa, double tau, Sampler& s,
                               std::size_t pairs = 1000, double slack = kPropertySlack) {
  SuiteResult res{tau > 0.0 ? "cocoercivity" : "monotonicity", true,
                  std::numeric_limits<double>::infinity(), -slack,
                  tau > 0.0 ? "min <Fu-Fv,u-v> - tau |Fu-Fv|^2" : "min <Fu-Fv,u-v>", {}};
  for (std::size_t i = 0; i < pairs; ++i) {
    const GridFunction u = s.member(kappa), v = s.member(kappa);
    const GridFunction dF = op.apply(u) - op.apply(v);
    const double m = inner_product(dF, u - v) - tau * inner_product(dF, dF);
    res.value = std::min(res.value, m);
    if (m < -slack) {
      res.passed = false;
      res.counterexample = "u=" + serialize(u) + " v=" + serialize(v);
      break;
    }
  }
  return res;
}

/// <F'(u) h, h> >= tau |F'(u) h|^2 - slack for u in D_kappa, arbitrary h.
template <MonotoneOperator Op>
SuiteResult check_derivative_cocoercivity(const Op& op, double kappa, double tau, Sampler& s,
                                          std::size_t samples = 1000,
                                          double slack = kPropertySlack) {
  SuiteResult res{"derivative cocoercivity", true, std::numeric_limits<double>::infinity(), -slack,
                  "min <F'(u)h,h> - tau |F'(u)h|^2", {}};
  for (std::size_t i = 0; i < samples; ++i) {
    const GridFunction u = s.member(kappa), h = s.normal();
    const GridFunction d = op.deriv_apply(u, h);
    const double m = inner_product(d, h) - tau * inner_product(d, d);
    res.value = std::min(res.value, m);
    if (m < -slack) {
      res.passed = false;
      res.counterexample = "u=" + serialize(u) + " h=" + serialize(h);
      break;
    }
  }
  return res;
}

/// |(F'(u) - F'(v)) h| <= L |u - v| |h| (1 + 10 h_grid) for u, v in D_kappa.
template <MonotoneOperator Op>
SuiteResult check_lipschitz(const Op& op, double kappa, Sampler& s, std::size_t samples = 1000) {
  const double L = op.constants().lipschitz_L;
  const double bound = 1.0 + 10.0 * s.grid().step();
  SuiteResult res{"lipschitz", true, 0.0, bound, "max |(F'(u)-F'(v))h| / (L |u-v| |h|)", {}};
  for (std::size_t i = 0; i < samples; ++i) {
    const GridFunction u = s.member(kappa), v = s.member(kappa), h = s.normal();
    const double lhs = norm(op.deriv_apply(u, h) - op.deriv_apply(v, h));
    const double denom = L * distance(u, v) * norm(h);
    if (denom == 0.0) continue;
    const double r = lhs / denom;
    res.value = std::max(res.value, r);
    if (r > bound) {
      res.passed = false;
      res.counterexample = "u=" + serialize(u) + " v=" + serialize(v) + " h=" + serialize(h);
      break;
    }
  }
  return res;
}

/// |<F'(u) h, w> - <h, F'(u)^* w>| <= 1e-12 |h| |w|.
template <MonotoneOperator Op>
SuiteResult check_adjoint(const Op& op, double kappa, Sampler& s, std::size_t triples = 100) {
  SuiteResult res{"adjoint identity", true, 0.0, kAdjointTolerance,
                  "max |<F'h,w> - <h,F'*w>| / (|h| |w|)", {}};
  for (std::size_t i = 0; i < triples; ++i) {
    const GridFunction u = s.member(kappa), h = s.normal(), w = s.normal();
    const double lhs = inner_product(op.deriv_apply(u, h), w);
    const double rhs = inner_product(h, op.deriv_adjoint_apply(u, w));
    const double r = std::abs(lhs - rhs) / (norm(h) * norm(w));
    res.value = std::max(res.value, r);
    if (r > kAdjointTolerance) {
      res.passed = false;
      res.counterexample = "u=" + serialize(u) + " h=" + serialize(h) + " w=" + serialize(w);
      break;
    }
  }
  return res;
}

/// Idempotence (exact), nonexpansiveness and the obtuse-angle characterization
/// <u - Pu, w - Pu> <= 1e-10 for members w.
inline SuiteResult check_projection(const LowerBoundSet& set, Sampler& s, std::size_t pairs = 1000) {
  SuiteResult res{"projection", true, -std::numeric_limits<double>::infinity(), kPropertySlack,
                  "max of |Pu-Pv| - |u-v| and <u-Pu,w-Pu>; idempotence exact", {}};
  for (std::size_t i = 0; i < pairs; ++i) {
    const double kappa = set.kappa();
    const GridFunction u = map(s.normal(), [kappa](double x) { return kappa + x; });
    const GridFunction v = s.normal(2.0);
    const GridFunction pu = set.project(u), pv = set.project(v);
    const GridFunction w = s.member(set.kappa());
    const bool idempotent = set.project(pu) == pu && set.contains(pu);
    const double expand = distance(pu, pv) - distance(u, v);
    const double angle = inner_product(u - pu, w - pu);
    res.value = std::max({res.value, expand, angle});
    if (!idempotent || expand > 1e-12 || angle > kPropertySlack) {
      res.passed = false;
      res.counterexample = "u=" + serialize(u) + " v=" + serialize(v) + " w=" + serialize(w);
      break;
    }
  }
  return res;
}

struct DiagonalInstance {
  DiagonalOperator op;
  GridFunction f;
  double kappa;
  double alpha;
};

inline DiagonalInstance random_diagonal_instance(Sampler& s) {
  std::vector<double> a(s.grid().size());
  for (double& x : a) x = s.uniform(0.0, 1.0) < 0.1 ? 0.0 : s.uniform(0.0, 2.0);
  const double alpha = std::pow(10.0, s.uniform(-3.0, 0.0));
  return {DiagonalOperator(GridFunction(s.grid(), std::move(a))), s.normal(2.0),
          s.uniform(-1.0, 1.0), alpha};
}

/// max(kappa, f_k / (a_k + alpha)) at nodes 1..N; node 0 keeps ubar's value (zero).
inline GridFunction diagonal_closed_form(const DiagonalInstance& inst) {
  const GridFunction& a = inst.op.diag();
  std::vector<double> u(a.size(), 0.0);
  for (std::size_t k = 1; k < u.size(); ++k)
    u[k] = std::max(inst.kappa, inst.f[k] / (a[k] + inst.alpha));
  return GridFunction(a.grid(), std::move(u));
}

/// Solver configuration that pins the fixed-point error below ~1e-9 in L2.
inline SolverConfig diagonal_oracle_config(const DiagonalInstance& inst) {
  SolverConfig cfg;
  cfg.alpha = inst.alpha;
  cfg.mu = 1.0 / (inst.alpha + inst.op.constants().c0);
  cfg.increment_norm = IncrementNorm::l2;
  // |u^k - u_alpha| <= increment / (mu alpha)
  cfg.abs_tol = 1e-9 * cfg.mu * cfg.alpha;
  return cfg;
}

inline SuiteResult check_diagonal_oracle(Sampler& s, std::size_t instances = 50) {
  SuiteResult res{"diagonal oracle", true, 0.0, 1e-8, "max |u_solver - u_closed_form|", {}};
  for (std::size_t i = 0; i < instances; ++i) {
    const DiagonalInstance inst = random_diagonal_instance(s);
    const SolveResult r =
        vi_solve(inst.op, LowerBoundSet(inst.kappa), inst.f, diagonal_oracle_config(inst));
    const double err = distance(r.solution, diagonal_closed_form(inst));
    res.value = std::max(res.value, err);
    if (!r.converged || err > 1e-8) {
      res.passed = false;
      res.counterexample = "a=" + serialize(inst.op.diag()) + " f=" + serialize(inst.f) +
                           " kappa=" + std::to_string(inst.kappa) +
                           " alpha=" + std::to_string(inst.alpha);
      break;
    }
  }
  return res;
}

struct StabilityCell {
  double delta;
  double alpha;
  StabilityGap result;
};

inline std::vector<StabilityCell> stability_grid(const ExampleSpec& spec, std::uint64_t seed,
                                                 const std::vector<double>& deltas = {1e-2, 1e-3, 1e-4},
                                                 const std::vector<double>& alphas = {1e-1, 1e-2, 5e-3}) {
  std::vector<StabilityCell> cells;
  std::size_t idx = 0;
  for (double d : deltas) {
    const GridFunction f_delta = add_noise(spec.f_star, {d, row_seed(seed, idx++)});
    for (double a : alphas) {
      SolverConfig cfg;
      cfg.alpha = a;
      cfg.mu = spec.mu();
      cfg.offset_ubar = spec.ubar;
      cfg.delta = d;
      cells.push_back({d, a, stability_gap(spec.op(), spec.set(), spec.f_star, f_delta, cfg)});
    }
  }
  return cells;
}

inline SuiteResult check_stability(const ExampleSpec& spec, std::uint64_t seed) {
  SuiteResult res{"stability gap", true, 0.0, 1.0, "max |u_a^d - u_a| / (d/a + 4 abs_tol)", {}};
  for (const auto& c : stability_grid(spec, seed)) {
    const double r = c.result.gap / (c.result.bound + 4.0 * c.result.abs_tol);
    res.value = std::max(res.value, r);
    if (!c.result.converged || r > 1.0) {
      res.passed = false;
      res.counterexample = "delta=" + sci4(c.delta) + " alpha=" + sci4(c.alpha);
    }
  }
  return res;
}

inline SuiteResult check_source_condition(const ExampleSpec& spec) {
  const SourceConditionCheck sc = verify_source_condition(spec);
  const double h = spec.u_star.grid().step();
  SuiteResult res{"source condition", sc.defect <= 5.0 * h && sc.rho_L < 2.0, sc.defect, 5.0 * h,
                  "defect |F'(u*)^* z - (u* - ubar)| (rho L = " + sci4(sc.rho_L) + ")", {}};
  if (!res.passed) res.counterexample = "rho_L=" + sci4(sc.rho_L);
  return res;
}

inline SuiteResult check_contraction(const ExampleSpec& spec, std::uint64_t seed) {
  SuiteResult res{"contraction", true, 0.0, 0.0,
                  "max over table rows of (max increment ratio) - (1 - mu alpha)", {}};
  res.value = -std::numeric_limits<double>::infinity();
  for (const auto& row : run_table(spec, table_deltas(), seed)) {
    res.value = std::max(res.value, row.max_increment_ratio - row.contraction_factor);
    if (row.contraction_violations > 0) {
      res.passed = false;
      res.counterexample = "delta=" + sci4(row.delta);
    }
  }
  return res;
}

struct DiagnosticsOptions {
  std::uint64_t seed = 0;
  std::size_t n_intervals = 200;
  /// Replace F by -F in the operator suites (negative control).
  bool flip_sign = false;
};

template <MonotoneOperator Op>
std::vector<SuiteResult> operator_suites(const Op& op, double kappa, Sampler& s) {
  const double tau = op.constants().tau;
  return {check_cocoercivity(op, 0.0, 0.0, s), check_cocoercivity(op, kappa, tau, s),
          check_derivative_cocoercivity(op, kappa, tau, s), check_lipschitz(op, kappa, s),
          check_adjoint(op, kappa, s)};
}

/// All property suites for one worked example.
inline std::vector<SuiteResult> run_diagnostics(ExampleId which, const DiagnosticsOptions& opt) {
  const Grid grid(opt.n_intervals);
  const ExampleSpec spec = build_example(which, grid);
  Sampler s(grid, opt.seed);
  std::vector<SuiteResult> out =
      opt.flip_sign ? operator_suites(NegatedOperator<DecayOperator>(spec.op()), spec.kappa, s)
                    : operator_suites(spec.op(), spec.kappa, s);
  out.push_back(check_projection(spec.set(), s));
  out.push_back(check_diagonal_oracle(s));
  out.push_back(check_stability(spec, opt.seed));
  out.push_back(check_source_condition(spec));
  out.push_back(check_contraction(spec, opt.seed));
  return out;
}

}  // namespace lavrentiev

#endif  // LAVRENTIEV_DIAGNOSTICS_HPP
