#pragma once

#include <cmath>

#include "rdball/errors.hpp"
#include "rdball/kernel.hpp"
#include "rdball/quadrature.hpp"
#include "rdball/state.hpp"
#include "rdball/types.hpp"

namespace rdball {

enum class GainKind { control, observer };

/// Sampled gain profile with the quadrature weights that turn it into a
/// functional of a state on the same nodes. Control tables integrate against
/// the state; observer tables are pointwise injection profiles (the weights
/// are carried for uniformity of the export format).
template <typename Scalar>
struct GainTable {
  GainKind kind = GainKind::control;
  Index n = 0;
  Index l = 0;
  Scalar epsilon = Scalar(1);
  Index order = 0;  // truncation order of the kernel the values came from
  Vector<Scalar> nodes;
  Vector<Scalar> weights;
  Vector<Scalar> values;
};

/// Boundary feedback profile: values[j] = K(1, nodes[j]). The resulting
/// control is U = sum_j weights[j] * values[j] * u(nodes[j]). Gains do not
/// depend on the harmonic order m, only on the degree l baked into the kernel.
template <typename Scalar>
GainTable<Scalar> control_gain(const KernelCoefficients<Scalar>& k,
                               const Vector<Scalar>& nodes) {
  for (Index j = 0; j < nodes.size(); ++j)
    if (!(Scalar(0) < nodes[j] && nodes[j] <= Scalar(1)))
      throw DomainViolation("control_gain nodes must lie in (0, 1]");
  GainTable<Scalar> g;
  g.kind = GainKind::control;
  g.n = k.n;
  g.l = k.l;
  g.order = k.order();
  g.nodes = nodes;
  g.weights = panel_weights(nodes);
  g.values.resize(nodes.size());
  for (Index j = 0; j < nodes.size(); ++j)
    g.values[j] = evaluate_K(k, Scalar(1), nodes[j]);
  return g;
}

/// Observer output-injection profile. The boundary-flux correction enters the
/// estimate as p(r) * (measured - estimated flux) with
/// p(r) = epsilon * G(1, r) * r^l; the cancellation of the (rho/r)^{l+n-2}
/// factor against the measure is done analytically, so p stays regular at the
/// center for every l and n.
template <typename Scalar>
GainTable<Scalar> observer_gain(const KernelCoefficients<Scalar>& k,
                                Scalar epsilon, const Vector<Scalar>& nodes) {
  if (!(epsilon > Scalar(0)))
    throw NonPositiveDiffusion(static_cast<double>(epsilon));
  for (Index j = 0; j < nodes.size(); ++j)
    if (!(Scalar(0) < nodes[j] && nodes[j] <= Scalar(1)))
      throw DomainViolation("observer_gain nodes must lie in (0, 1]");
  GainTable<Scalar> g;
  g.kind = GainKind::observer;
  g.n = k.n;
  g.l = k.l;
  g.epsilon = epsilon;
  g.order = k.order();
  g.nodes = nodes;
  g.weights = panel_weights(nodes);
  g.values.resize(nodes.size());
  for (Index j = 0; j < nodes.size(); ++j)
    g.values[j] = epsilon * evaluate_G(k, Scalar(1), nodes[j]) *
                  std::pow(nodes[j], Scalar(k.l));
  return g;
}

/// Applies a control table to a state sampled on the same nodes.
template <typename Scalar>
std::complex<Scalar> control_value(const GainTable<Scalar>& g,
                                   const ModeState<Scalar>& u) {
  if (g.values.size() != u.values.size() || g.nodes.size() != u.values.size())
    throw GridMismatch("gain table and state sizes differ");
  for (Index j = 0; j < g.nodes.size(); ++j)
    if (g.nodes[j] != u.grid.node(j))
      throw GridMismatch("gain table nodes differ from the state grid");
  std::complex<Scalar> acc(0, 0);
  for (Index j = 0; j < g.nodes.size(); ++j)
    acc += g.weights[j] * g.values[j] * u.values[j];
  return acc;
}

/// Discrete resolvent of the lower-triangular integral operator with kernel K
/// on a uniform grid: returns L with L = K + K*L, composition taken with the
/// grid quadrature. The inverse state transformation is then
/// u_k = w_k + h * sum_{j<=k} L(k, j) w_j, exactly undoing the forward map
/// w_k = u_k - h * sum_{j<=k} K(r_k, r_j) u_j.
template <typename Scalar>
Matrix<Scalar> inverse_kernel(const KernelCoefficients<Scalar>& k,
                              const RadialGrid<Scalar>& grid) {
  const Index m = grid.m_points;
  if (m < 1) throw DomainViolation("inverse_kernel requires a nonempty grid");
  const Scalar h = grid.h();
  Matrix<Scalar> K = Matrix<Scalar>::Zero(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j <= i; ++j)
      K(i, j) = evaluate_K(k, grid.node(i), grid.node(j));
  Matrix<Scalar> L = Matrix<Scalar>::Zero(m, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = j; i < m; ++i) {
      Scalar acc = K(i, j);
      for (Index p = j; p < i; ++p) acc += h * K(i, p) * L(p, j);
      const Scalar denom = Scalar(1) - h * K(i, i);
      if (std::abs(denom) < Scalar(1e-14))
        throw LinearSolveFailure("resolvent diagonal pivot vanished");
      L(i, j) = acc / denom;
    }
  }
  return L;
}

}  // namespace rdball
