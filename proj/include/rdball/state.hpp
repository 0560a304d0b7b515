#pragma once

#include <cmath>

#include "rdball/errors.hpp"
#include "rdball/types.hpp"

namespace rdball {

/// Uniform staggered grid on (0, 1): node k sits at (k + 1/2) h, h = 1/m.
/// The center r = 0 and the boundary r = 1 fall on cell faces, where the
/// scheme applies its flux conditions.
template <typename Scalar>
struct RadialGrid {
  Index m_points = 0;

  Scalar h() const { return Scalar(1) / Scalar(m_points); }
  Scalar node(Index k) const { return (Scalar(k) + Scalar(0.5)) * h(); }
  Vector<Scalar> nodes() const {
    Vector<Scalar> out(m_points);
    for (Index k = 0; k < m_points; ++k) out[k] = node(k);
    return out;
  }
  bool operator==(const RadialGrid& other) const {
    return m_points == other.m_points;
  }
};

/// Radial profile of one spherical-harmonic coefficient of the field.
template <typename Scalar>
struct ModeState {
  Index n = 3;
  Index l = 0;
  Index m = 0;
  RadialGrid<Scalar> grid;
  ComplexVector<Scalar> values;
  Scalar time = Scalar(0);
};

/// Weighted norm sqrt( sum |u_k|^2 r_k^{n-1} h ), the discrete form of the
/// radial measure r^{n-1} dr.
template <typename Scalar>
Scalar l2_norm(const ModeState<Scalar>& u, const RadialGrid<Scalar>& grid) {
  if (!(grid == u.grid) || u.values.size() != grid.m_points)
    throw GridMismatch("state and grid disagree on node layout");
  const Scalar h = grid.h();
  Scalar acc = Scalar(0);
  for (Index k = 0; k < grid.m_points; ++k) {
    const Scalar w = std::pow(grid.node(k), Scalar(u.n - 1)) * h;
    acc += std::norm(u.values[k]) * w;
  }
  return std::sqrt(acc);
}

template <typename Scalar>
Scalar l2_norm(const ModeState<Scalar>& u) {
  return l2_norm(u, u.grid);
}

}  // namespace rdball
