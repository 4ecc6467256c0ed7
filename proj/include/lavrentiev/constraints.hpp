#ifndef LAVRENTIEV_CONSTRAINTS_HPP
#define LAVRENTIEV_CONSTRAINTS_HPP

#include <algorithm>
#include <concepts>
#include <vector>

#include "lavrentiev/space.hpp"

namespace lavrentiev {

inline constexpr double kMembershipTolerance = 1e-12;

// clang-format off
template <class S>
concept ConvexSet = requires(const S& set, const GridFunction& u) {
  { set.project(u) } -> std::same_as<GridFunction>;
  { set.contains(u) } -> std::same_as<bool>;
};
// clang-format on

/// { u : u_k >= kappa for k = 1..N }.
///
/// Node 0 is exempt: it has zero weight in the inner product and never
/// influences the operator, so projection leaves it untouched.
class LowerBoundSet {
public:
  explicit LowerBoundSet(double kappa) : kappa_(kappa) {}

  double kappa() const noexcept { return kappa_; }

  GridFunction project(const GridFunction& u) const {
    std::vector<double> v(u.values().begin(), u.values().end());
    for (std::size_t k = 1; k < v.size(); ++k) v[k] = std::max(v[k], kappa_);
    return GridFunction(u.grid(), std::move(v));
  }

  bool contains(const GridFunction& u) const {
    for (std::size_t k = 1; k < u.size(); ++k)
      if (u[k] < kappa_ - kMembershipTolerance) return false;
    return true;
  }

private:
  double kappa_;
};

/// The unconstrained case; the VI reduces to the Lavrentiev equation (F + alpha I) u = f.
struct WholeSpace {
  GridFunction project(const GridFunction& u) const { return u; }
  bool contains(const GridFunction&) const { return true; }
};

template <ConvexSet S>
GridFunction project(const S& set, const GridFunction& u) {
  return set.project(u);
}

template <ConvexSet S>
bool membership(const S& set, const GridFunction& u) {
  return set.contains(u);
}

}  // namespace lavrentiev

#endif  // LAVRENTIEV_CONSTRAINTS_HPP
