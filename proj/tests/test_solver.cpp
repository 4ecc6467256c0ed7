#include <cmath>
#include <future>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lavrentiev/diagnostics.hpp"
#include "lavrentiev/experiments.hpp"
#include "lavrentiev/solver.hpp"
#include "test_util.hpp"

namespace lavrentiev {
namespace {

// F u = s u with a declared (possibly false) cocoercivity constant.
struct ScaledIdentity {
  double s;
  double declared_tau;
  GridFunction apply(const GridFunction& u) const { return s * u; }
  GridFunction deriv_apply(const GridFunction&, const GridFunction& h) const { return s * h; }
  GridFunction deriv_adjoint_apply(const GridFunction&, const GridFunction& w) const {
    return s * w;
  }
  OperatorConstants constants() const { return {1.0, 0.0, declared_tau, 0.0}; }
};

SolverConfig example_config(const ExampleSpec& spec, double alpha, double delta) {
  SolverConfig cfg;
  cfg.alpha = alpha;
  cfg.mu = spec.mu();
  cfg.offset_ubar = spec.ubar;
  cfg.delta = delta;
  return cfg;
}

TEST(SolverConfig, EnforcesStepAndParameterBounds) {
  const OperatorConstants c = DecayOperator(1.0, 0.5).constants();  // tau = 1/4
  SolverConfig cfg;
  cfg.mu = 0.25;
  cfg.alpha = 2.0;  // = 1/mu - 1/(2 tau)
  EXPECT_NO_THROW(cfg.validate(c));
  cfg.alpha = 2.01;
  EXPECT_THROW(cfg.validate(c), ConfigError);
  cfg.alpha = 1e-2;
  cfg.mu = 0.5;  // = 2 tau
  EXPECT_THROW(cfg.validate(c), ConfigError);
  cfg.mu = 0.25;
  cfg.alpha = 0.0;
  EXPECT_THROW(cfg.validate(c), ConfigError);
  cfg.alpha = 1e-2;
  cfg.delta = -1.0;
  EXPECT_THROW(cfg.validate(c), ConfigError);
  // kappa = 0 gives tau = 0: no admissible step size
  cfg.delta = 0.0;
  EXPECT_THROW(cfg.validate(DecayOperator(1.0, 0.0).constants()), ConfigError);
}

TEST(ViSolve, DiagonalMatchesComponentwiseClosedForm) {
  Sampler s(Grid(40), 99);
  for (int i = 0; i < 30; ++i) {
    const DiagonalInstance inst = random_diagonal_instance(s);
    const SolveResult r =
        vi_solve(inst.op, LowerBoundSet(inst.kappa), inst.f, diagonal_oracle_config(inst));
    ASSERT_TRUE(r.converged);
    EXPECT_LE(distance(r.solution, diagonal_closed_form(inst)), 1e-8);
    EXPECT_TRUE(LowerBoundSet(inst.kappa).contains(r.solution));
  }
}

TEST(ViSolve, UnconstrainedLinearScalarEquation) {
  const Grid g(50);
  const double alpha = 0.3;
  SolverConfig cfg;
  cfg.alpha = alpha;
  cfg.mu = 0.5;
  cfg.abs_tol = 1e-13;
  const auto r = vi_solve(DiagonalOperator(GridFunction::constant(g, 1.0)), WholeSpace{},
                          GridFunction::constant(g, 1.0), cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.solution[0], 0.0);  // pinned to ubar
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(r.solution[k], 1.0 / (1.0 + alpha), 1e-10);
}

TEST(ViSolve, DecayExampleFirstTableRow) {
  const auto spec = build_example(ExampleId::example1, Grid(200));
  const double delta = 1e-2;
  const auto r = solve_noisy(spec, delta, row_seed(0, 0));
  ASSERT_TRUE(r.converged);
  const double err = distance(r.solution, spec.u_star);
  EXPECT_GE(err, 9.87e-2 / 3.0);
  EXPECT_LE(err, 9.87e-2 * 3.0);
  EXPECT_EQ(r.contraction_violations, 0u);
  EXPECT_LE(r.final_increment, r.tolerance);
  EXPECT_DOUBLE_EQ(r.tolerance, delta);
}

TEST(ViSolve, IncrementNormsDifferBySqrtH) {
  const auto spec = build_example(ExampleId::example2, Grid(100));
  auto cfg = example_config(spec, 1e-2, 0.0);
  cfg.max_iters = 7;
  cfg.increment_norm = IncrementNorm::euclidean;
  const auto a = vi_solve(spec.op(), spec.set(), spec.f_star, cfg);
  cfg.increment_norm = IncrementNorm::l2;
  const auto b = vi_solve(spec.op(), spec.set(), spec.f_star, cfg);
  EXPECT_EQ(a.solution, b.solution);
  EXPECT_NEAR(a.final_increment * std::sqrt(0.01), b.final_increment, 1e-15);
}

TEST(ViSolve, IterationLimitIsFlaggedNotConverged) {
  const auto spec = build_example(ExampleId::example1, Grid(100));
  auto cfg = example_config(spec, 1e-3, 0.0);
  cfg.max_iters = 5;
  const auto r = vi_solve(spec.op(), spec.set(), spec.f_star, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 5u);
  EXPECT_GT(r.final_increment, r.tolerance);
}

TEST(ViSolve, SustainedGrowthIsFlaggedAsDivergence) {
  const Grid g(20);
  SolverConfig cfg;
  cfg.alpha = 0.1;
  cfg.mu = 0.5;
  const auto r = vi_solve(ScaledIdentity{-3.0, 10.0}, WholeSpace{}, GridFunction::constant(g, 1.0), cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(r.diverged);
  EXPECT_GT(r.contraction_violations, 0u);
}

TEST(ViSolve, NonFiniteIterateThrowsWithIteration) {
  const Grid g(20);
  SolverConfig cfg;
  cfg.alpha = 0.1;
  cfg.mu = 0.5;
  try {
    vi_solve(ScaledIdentity{-1e300, 10.0}, WholeSpace{}, GridFunction::constant(g, 1.0), cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
}

TEST(ViSolve, GridMismatch) {
  const auto spec = build_example(ExampleId::example1, Grid(100));
  auto cfg = example_config(spec, 1e-2, 0.0);
  EXPECT_THROW(vi_solve(spec.op(), spec.set(), GridFunction::zero(Grid(50)), cfg), DimensionError);
}

TEST(ViSolve, FeasibleOptimalUniqueAndContractive) {
  for (auto id : {ExampleId::example1, ExampleId::example2}) {
    const auto spec = build_example(id, Grid(200));
    const double delta = 1e-3, alpha = apriori_alpha(delta);
    const auto f_delta = add_noise(spec.f_star, {delta, 42});
    auto cfg = example_config(spec, alpha, 0.0);
    cfg.abs_tol = 1e-10;
    const auto r = vi_solve(spec.op(), spec.set(), f_delta, cfg);
    ASSERT_TRUE(r.converged);
    EXPECT_TRUE(spec.set().contains(r.solution));
    EXPECT_EQ(r.contraction_violations, 0u);
    EXPECT_LE(r.max_increment_ratio, r.contraction_factor);

    // <F u + alpha (u - ubar) - f, w - u> >= -tol_vi for members w
    const auto& u = r.solution;
    const auto g = spec.op().apply(u) + alpha * (u - spec.ubar) - f_delta;
    const double tol_vi =
        (cfg.stop_c * cfg.delta + *cfg.abs_tol) *
        (norm(spec.op().apply(u)) + alpha * norm(u) + norm(f_delta)) * 2.0;
    Sampler s(Grid(200), 5);
    for (int i = 0; i < 100; ++i) {
      const auto w = s.member(spec.kappa);
      EXPECT_GE(inner_product(g, w - u), -tol_vi);
    }

    // a different feasible start must land on the same solution
    auto cfg2 = cfg;
    cfg2.initial_guess = s.member(spec.kappa);
    const auto r2 = vi_solve(spec.op(), spec.set(), f_delta, cfg2);
    ASSERT_TRUE(r2.converged);
    EXPECT_LE(distance(r.solution, r2.solution), 2.0 * *cfg.abs_tol / (cfg.mu * alpha));
  }
}

TEST(ViSolve, ConcurrentSolvesMatchSequential) {
  const auto spec = build_example(ExampleId::example2, Grid(200));
  std::vector<double> deltas = table_deltas();
  std::vector<SolveResult> seq;
  for (std::size_t i = 0; i < deltas.size(); ++i) seq.push_back(solve_noisy(spec, deltas[i], i));
  std::vector<std::future<SolveResult>> par;
  for (std::size_t i = 0; i < deltas.size(); ++i)
    par.push_back(std::async(std::launch::async, [&, i] { return solve_noisy(spec, deltas[i], i); }));
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto r = par[i].get();
    EXPECT_EQ(r.solution, seq[i].solution);
    EXPECT_EQ(r.iterations, seq[i].iterations);
  }
}

TEST(StabilityGap, NoNoiseGivesZeroGap) {
  const auto spec = build_example(ExampleId::example1, Grid(200));
  auto cfg = example_config(spec, 1e-2, 0.0);
  const auto sg = stability_gap(spec.op(), spec.set(), spec.f_star, spec.f_star, cfg);
  EXPECT_LE(sg.gap, 2.0 * sg.abs_tol);
  EXPECT_EQ(sg.bound, 0.0);
}

TEST(StabilityGap, DiagonalClosedForm) {
  const Grid g(60);
  std::mt19937_64 eng(8);
  std::uniform_real_distribution<double> ua(0.0, 2.0);
  std::vector<double> a(g.size());
  for (double& x : a) x = ua(eng);
  const DiagonalOperator op(GridFunction(g, a));
  const auto f = test::random_function(g, eng);
  const double delta = 1e-2, alpha = 0.05;
  const auto f_delta = add_noise(f, {delta, 3});
  SolverConfig cfg;
  cfg.alpha = alpha;
  cfg.mu = 1.0 / (alpha + op.constants().c0);
  cfg.delta = delta;
  cfg.increment_norm = IncrementNorm::l2;
  cfg.abs_tol = 1e-10 * cfg.mu * alpha;
  const auto sg = stability_gap(op, WholeSpace{}, f, f_delta, cfg);
  const auto expected = zip_with(f_delta - f, op.diag(), [alpha](double d, double ak) {
    return d / (ak + alpha);
  });
  EXPECT_NEAR(sg.gap, norm(expected), 1e-8);
  EXPECT_LE(sg.gap, delta / alpha);
}

TEST(StabilityGap, DecayOperatorWithinBound) {
  const auto spec = build_example(ExampleId::example1, Grid(200));
  const double delta = 1e-3, alpha = 1e-2;
  const auto f_delta = add_noise(spec.f_star, {delta, 77});
  const auto sg =
      stability_gap(spec.op(), spec.set(), spec.f_star, f_delta, example_config(spec, alpha, delta));
  ASSERT_TRUE(sg.converged);
  EXPECT_DOUBLE_EQ(sg.bound, 0.1);
  EXPECT_LE(sg.gap, sg.bound + 4.0 * sg.abs_tol);
}

TEST(StabilityGap, RejectsDataOutsideNoiseLevel) {
  const auto spec = build_example(ExampleId::example1, Grid(50));
  const auto f_delta = add_noise(spec.f_star, {1e-2, 1});
  EXPECT_THROW(stability_gap(spec.op(), spec.set(), spec.f_star, f_delta,
                             example_config(spec, 1e-2, 1e-4)),
               std::invalid_argument);
}

TEST(ResidualProfile, RatesForExample1) {
  const auto spec = build_example(ExampleId::example1, Grid(200));
  const auto alphas = logspace_desc(1e-1, 1e-4, 8);
  const auto pts =
      vi_residual_profile(spec.op(), spec.set(), spec.f_star, spec.u_star, alphas, spec.ubar, spec.mu());
  std::vector<double> a, e, r;
  for (const auto& p : pts) {
    EXPECT_TRUE(p.converged);
    EXPECT_EQ(p.contraction_violations, 0u);
    a.push_back(p.alpha);
    e.push_back(p.error_norm);
    r.push_back(p.residual_norm);
  }
  EXPECT_GE(loglog_slope(a, e), 0.45);
  EXPECT_GE(loglog_slope(a, r), 0.9);
}

TEST(ResidualProfile, RejectsUnorderedAlphas) {
  const auto spec = build_example(ExampleId::example1, Grid(50));
  EXPECT_THROW(vi_residual_profile(spec.op(), spec.set(), spec.f_star, spec.u_star, {1e-3, 1e-2},
                                   spec.ubar, spec.mu()),
               std::invalid_argument);
  EXPECT_THROW(vi_residual_profile(spec.op(), spec.set(), spec.f_star, spec.u_star, {1e-2, -1.0},
                                   spec.ubar, spec.mu()),
               std::invalid_argument);
}

TEST(ResidualProfile, ErrorIsContinuousInKappa) {
  const auto spec = build_example(ExampleId::example1, Grid(200));
  const double alpha = 1e-2;
  double previous = -1.0;
  for (double kappa : {0.1, 0.2, 0.3, 0.4, 0.45, 0.5}) {
    SolverConfig cfg;
    cfg.alpha = alpha;
    cfg.mu = kappa / 2.0;
    cfg.offset_ubar = spec.ubar;
    const auto r = vi_solve(DecayOperator(1.0, kappa), LowerBoundSet(kappa), spec.f_star, cfg);
    ASSERT_TRUE(r.converged);
    const double err = distance(r.solution, spec.u_star);
    if (previous > 0.0) {
      EXPECT_LE(err, 10.0 * previous);
      EXPECT_GE(err, previous / 10.0);
    }
    previous = err;
  }
}

}  // namespace
}  // namespace lavrentiev
