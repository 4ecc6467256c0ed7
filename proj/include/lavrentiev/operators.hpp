#ifndef LAVRENTIEV_OPERATORS_HPP
#define LAVRENTIEV_OPERATORS_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lavrentiev/space.hpp"

namespace lavrentiev {

/// Declared structural constants of a monotone operator.
///
/// tau is the cocoercivity constant (<F u - F v, u - v> >= tau |F u - F v|^2),
/// lipschitz_L the Lipschitz constant of u -> F'(u), c0 the scale of F and
/// kappa the lower bound of the set on which the constants hold.
struct OperatorConstants {
  double c0 = 1.0;
  double kappa = 0.0;
  double tau = 0.0;
  double lipschitz_L = 0.0;
};

// clang-format off
template <class Op>
concept MonotoneOperator = requires(const Op& op, const GridFunction& u, const GridFunction& h) {
  { op.apply(u) } -> std::same_as<GridFunction>;
  { op.deriv_apply(u, h) } -> std::same_as<GridFunction>;
  { op.deriv_adjoint_apply(u, h) } -> std::same_as<GridFunction>;
  { op.constants() } -> std::same_as<OperatorConstants>;
};
// clang-format on

// ---------------------------------------------------------------------------
// Exponential decay operator (F u)(t) = -c0 exp(-int_0^t u).
// ---------------------------------------------------------------------------

inline GridFunction decay_apply(const GridFunction& u, double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("decay_apply: c0 must be positive");
  return map(cumint_backward(u), [c0](double U) { return -c0 * std::exp(-U); });
}

/// [F'(u) h]_k = -(F u)_k H_k with H the backward cumulative integral of h.
inline GridFunction decay_deriv_apply(const GridFunction& u, const GridFunction& h, double c0) {
  u.check_same_grid(h);
  return zip_with(decay_apply(u, c0), cumint_backward(h),
                  [](double Fu, double H) { return -Fu * H; });
}

/// Exact transpose of decay_deriv_apply under inner_product:
/// z_k = -h sum_{j=k..N} (F u)_j w_j for k >= 1, z_0 = 0.
inline GridFunction decay_deriv_adjoint_apply(const GridFunction& u, const GridFunction& w,
                                              double c0) {
  u.check_same_grid(w);
  const GridFunction Fu = decay_apply(u, c0);
  const double h = u.grid().step();
  std::vector<double> z(u.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = u.size() - 1; k >= 1; --k) {
    acc += Fu[k] * w[k];
    z[k] = -h * acc;
  }
  return GridFunction(u.grid(), std::move(z));
}

/// The coefficient-identification operator for u' = -u(t) y, y(0) = c0 written as F u = y.
/// Cocoercive on { u >= kappa } with tau = kappa / (2 c0) when kappa > 0,
/// monotone when kappa = 0. F' is Lipschitz there with L = c0.
class DecayOperator {
public:
  DecayOperator(double c0, double kappa) : c0_(c0), kappa_(kappa) {
    if (!(c0 > 0.0)) throw std::invalid_argument("DecayOperator: c0 must be positive");
  }

  GridFunction apply(const GridFunction& u) const { return decay_apply(u, c0_); }
  GridFunction deriv_apply(const GridFunction& u, const GridFunction& h) const {
    return decay_deriv_apply(u, h, c0_);
  }
  GridFunction deriv_adjoint_apply(const GridFunction& u, const GridFunction& w) const {
    return decay_deriv_adjoint_apply(u, w, c0_);
  }

  OperatorConstants constants() const {
    return {c0_, kappa_, kappa_ > 0.0 ? kappa_ / (2.0 * c0_) : 0.0, c0_};
  }

private:
  double c0_;
  double kappa_;
};

// ---------------------------------------------------------------------------
// Diagonal linear operator, the closed-form oracle for the solver.
// ---------------------------------------------------------------------------

inline GridFunction diagonal_apply(const GridFunction& a, const GridFunction& u) {
  return zip_with(a, u, [](double ak, double uk) { return ak * uk; });
}

class DiagonalOperator {
public:
  explicit DiagonalOperator(GridFunction diag) : diag_(std::move(diag)) {
    for (double a : diag_.values())
      if (a < 0.0) throw std::invalid_argument("DiagonalOperator: entries must be nonnegative");
  }

  const GridFunction& diag() const noexcept { return diag_; }

  GridFunction apply(const GridFunction& u) const { return diagonal_apply(diag_, u); }
  GridFunction deriv_apply(const GridFunction&, const GridFunction& h) const {
    return diagonal_apply(diag_, h);
  }
  GridFunction deriv_adjoint_apply(const GridFunction&, const GridFunction& w) const {
    return diagonal_apply(diag_, w);
  }

  OperatorConstants constants() const {
    double amax = 0.0;
    for (std::size_t k = 1; k < diag_.size(); ++k) amax = std::max(amax, diag_[k]);
    const double tau = amax > 0.0 ? 1.0 / amax : std::numeric_limits<double>::infinity();
    return {amax, 0.0, tau, 0.0};
  }

private:
  GridFunction diag_;
};

/// -F. Not monotone; exists as a negative control for the property suites.
template <MonotoneOperator Op>
class NegatedOperator {
public:
  explicit NegatedOperator(Op op) : op_(std::move(op)) {}

  GridFunction apply(const GridFunction& u) const { return -op_.apply(u); }
  GridFunction deriv_apply(const GridFunction& u, const GridFunction& h) const {
    return -op_.deriv_apply(u, h);
  }
  GridFunction deriv_adjoint_apply(const GridFunction& u, const GridFunction& w) const {
    return -op_.deriv_adjoint_apply(u, w);
  }
  // Claims the wrapped constants unchanged, which is exactly what the suites must catch.
  OperatorConstants constants() const { return op_.constants(); }

private:
  Op op_;
};

}  // namespace lavrentiev

#endif  // LAVRENTIEV_OPERATORS_HPP
