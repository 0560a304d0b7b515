#pragma once

#include <cmath>

#include "rdball/errors.hpp"
#include "rdball/types.hpp"

namespace rdball {

/// Integration weights over [a, b] for interior nodes: each node owns the panel
/// bounded by the midpoints to its neighbors and by the interval ends. Exact
/// for constants on any grid, second order on smooth integrands, and equal to
/// the uniform spacing h on the staggered simulation grid.
template <typename Scalar>
Vector<Scalar> panel_weights(const Vector<Scalar>& nodes, Scalar a = Scalar(0),
                             Scalar b = Scalar(1)) {
  const Index m = nodes.size();
  if (m == 0) throw DomainViolation("panel_weights requires at least one node");
  for (Index k = 0; k + 1 < m; ++k)
    if (!(nodes[k] < nodes[k + 1]))
      throw DomainViolation("quadrature nodes must be strictly increasing");
  if (!(a <= nodes[0] && nodes[m - 1] <= b))
    throw DomainViolation("quadrature nodes must lie inside the interval");
  Vector<Scalar> w(m);
  for (Index k = 0; k < m; ++k) {
    const Scalar left = (k == 0) ? a : (nodes[k - 1] + nodes[k]) / Scalar(2);
    const Scalar right = (k == m - 1) ? b : (nodes[k] + nodes[k + 1]) / Scalar(2);
    w[k] = right - left;
  }
  return w;
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// three-term Legendre recurrence.
template <typename Scalar>
void gauss_legendre(Index count, Vector<Scalar>& nodes, Vector<Scalar>& weights) {
  if (count < 1) throw DomainViolation("gauss_legendre requires count >= 1");
  nodes.resize(count);
  weights.resize(count);
  const Index half = (count + 1) / 2;
  for (Index i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th positive root
    double x = std::cos(M_PI * (i + 0.75) / (count + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (Index j = 0; j < count; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = count * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = static_cast<Scalar>(-x);
    nodes[count - 1 - i] = static_cast<Scalar>(x);
    const Scalar w = static_cast<Scalar>(2.0 / ((1.0 - x * x) * pp * pp));
    weights[i] = w;
    weights[count - 1 - i] = w;
  }
}

}  // namespace rdball
