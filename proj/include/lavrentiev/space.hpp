#ifndef LAVRENTIEV_SPACE_HPP
#define LAVRENTIEV_SPACE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lavrentiev {

/// Raised when two grid functions live on different grids.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised on non-finite values or numeric breakdown.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform grid t_k = k/N, k = 0..N, on [0,1].
class Grid {
public:
  explicit Grid(std::size_t n_intervals = 200) : n_(n_intervals) {
    if (n_ == 0) throw std::invalid_argument("Grid: n_intervals must be positive");
  }

  std::size_t n_intervals() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ + 1; }
  double step() const noexcept { return 1.0 / static_cast<double>(n_); }
  // k/N rather than k*h so that the last node is exactly 1.
  double node(std::size_t k) const noexcept {
    return static_cast<double>(k) / static_cast<double>(n_);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  std::size_t n_;
};

/// Nodal values of a function on a Grid; the discrete stand-in for an element of L2(0,1).
///
/// Node 0 is stored but carries zero quadrature weight (backward rectangle rule), so it
/// never contributes to inner products or norms.
class GridFunction {
public:
  GridFunction(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw DimensionError("GridFunction: expected " + std::to_string(grid_.size()) +
                           " values, got " + std::to_string(values_.size()));
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (!std::isfinite(values_[k]))
        throw NumericError("GridFunction: non-finite value at node " + std::to_string(k));
  }

  static GridFunction constant(Grid grid, double c) {
    return GridFunction(grid, std::vector<double>(grid.size(), c));
  }

  static GridFunction zero(Grid grid) { return constant(grid, 0.0); }

  /// Samples psi at every node.
  static GridFunction sample(Grid grid, const std::function<double(double)>& psi) {
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = psi(grid.node(k));
    return GridFunction(grid, std::move(v));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }

  GridFunction& operator+=(const GridFunction& o) {
    check_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    check_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  GridFunction& operator*=(double s) {
    for (double& x : values_) x *= s;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
  friend GridFunction operator*(GridFunction a, double s) { return a *= s; }
  friend GridFunction operator-(GridFunction a) { return a *= -1.0; }

  friend bool operator==(const GridFunction&, const GridFunction&) = default;

  void check_same_grid(const GridFunction& o) const {
    if (!(grid_ == o.grid_))
      throw DimensionError("grid mismatch: N=" + std::to_string(grid_.n_intervals()) +
                           " vs N=" + std::to_string(o.grid_.n_intervals()));
  }

private:
  Grid grid_;
  std::vector<double> values_;
};

/// Applies op(u_k, v_k) nodewise.
template <class BinaryOp>
GridFunction zip_with(const GridFunction& u, const GridFunction& v, BinaryOp op) {
  u.check_same_grid(v);
  std::vector<double> out(u.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = op(u[k], v[k]);
  return GridFunction(u.grid(), std::move(out));
}

template <class UnaryOp>
GridFunction map(const GridFunction& u, UnaryOp op) {
  std::vector<double> out(u.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = op(u[k]);
  return GridFunction(u.grid(), std::move(out));
}

/// h * sum_{k=1..N} u_k v_k
inline double inner_product(const GridFunction& u, const GridFunction& v) {
  u.check_same_grid(v);
  double s = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) s += u[k] * v[k];
  return u.grid().step() * s;
}

inline double norm(const GridFunction& u) { return std::sqrt(inner_product(u, u)); }

inline double distance(const GridFunction& u, const GridFunction& v) {
  u.check_same_grid(v);
  double s = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    const double d = u[k] - v[k];
    s += d * d;
  }
  return std::sqrt(u.grid().step() * s);
}

/// U_0 = 0, U_k = h * sum_{j=1..k} u_j : backward rectangle rule for int_0^t u.
inline GridFunction cumint_backward(const GridFunction& u) {
  const double h = u.grid().step();
  std::vector<double> out(u.size());
  double acc = 0.0;
  out[0] = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    acc += u[k];
    out[k] = h * acc;
  }
  return GridFunction(u.grid(), std::move(out));
}

}  // namespace lavrentiev

#endif  // LAVRENTIEV_SPACE_HPP
