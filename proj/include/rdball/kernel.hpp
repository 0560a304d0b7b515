#pragma once

#include <cmath>
#include <vector>

#include "rdball/errors.hpp"
#include "rdball/series.hpp"
#include "rdball/types.hpp"

namespace rdball {

// The boundary-control kernel K(r, rho) for the radial harmonic of degree l of
// a reaction-diffusion equation on the unit n-ball factors as
//
//   K(r, rho) = G(r, rho) * rho * (rho / r)^(l + n - 2),
//
// where G solves, with q(rho) = (lambda(rho) + c) / epsilon and g' = n/2 + l - 1,
//
//   q(rho) G = G_rr + (1 - 2g')/r G_r - G_rhorho - (1 + 2g')/rho G_rho,
//   G(r, r) = -(1/(2r)) * int_0^r q.
//
// For q even, G is an even power series G = sum_{i} sum_{j<=i} C[i][j] r^{2j}
// rho^{2(i-j)}. Matching coefficients of r^{2j} rho^{2(i-1-j)} in the equation
// gives, for every i >= 1 and 0 <= j <= i-1,
//
//   4 (j+1)(j+1-g') C[i][j+1] - 4 (i-j)(i-j+g') C[i][j] = B[i-1][j],
//   B[i-1][j] = sum_{k=j}^{i-1} C[k][j] q_{i-1-k},
//
// and matching the diagonal trace gives the row-sum closure
//
//   sum_{j=0}^{i} C[i][j] = -q_i / (2 (2i+1)).
//
// Each row i is solved by one sweep: express C[i][j] = P_j C[i][i] + Q_j along
// the coupling chain, close C[i][i] with the row sum, then back-substitute.
// The sum of the homogeneous weights P_j has the closed form kappa(i, g')
// below, which is strictly positive, so every row is uniquely solvable.

template <typename Scalar>
struct KernelCoefficients {
  Index n = 0;
  Index l = 0;
  Scalar gamma_prime = Scalar(0);
  /// rows[i][j] multiplies r^{2j} rho^{2(i-j)} in G.
  std::vector<Vector<Scalar>> rows;

  Index order() const { return static_cast<Index>(rows.size()) - 1; }
};

/// Chain coefficient of the in-row coupling, defined for 0 <= j < i:
/// a(i, j) = (j+1)(j+1-g') / ((i-j)(i-j+g')).
template <typename Scalar>
Scalar a_coeff(Index i, Index j, Scalar gamma_prime) {
  if (j < 0 || j >= i) throw DomainViolation("a_coeff requires 0 <= j < i");
  const Scalar num = Scalar(j + 1) * (Scalar(j + 1) - gamma_prime);
  const Scalar den = Scalar(i - j) * (Scalar(i - j) + gamma_prime);
  return num / den;
}

/// Row-closure denominator: kappa(i, g') = (2i)!/i! * Gamma(g'+1)/Gamma(i+g'+1).
/// Evaluated through log-Gamma so large i cannot overflow intermediate factors;
/// equals 1 + sum_{j<i} prod_{k=j}^{i-1} a(i, k) and is strictly positive for
/// g' >= 0.
template <typename Scalar>
Scalar kappa(Index i, Scalar gamma_prime) {
  if (i < 0) throw DomainViolation("kappa requires i >= 0");
  if (!(gamma_prime >= Scalar(0)))
    throw DomainViolation("kappa requires gamma_prime >= 0");
  const double g = static_cast<double>(gamma_prime);
  const double lg = std::lgamma(2.0 * i + 1.0) - std::lgamma(i + 1.0) +
                    std::lgamma(g + 1.0) - std::lgamma(i + g + 1.0);
  return static_cast<Scalar>(std::exp(lg));
}

/// Solves the kernel series for harmonic degree l in dimension n, truncated at
/// total even order N (rows 0..N). `reaction` is the folded profile
/// (lambda + c)/epsilon and must be even with convergence radius above 1.
template <typename Scalar>
KernelCoefficients<Scalar> solve_kernel(const EvenPowerSeries<Scalar>& reaction,
                                        Index n, Index l, Index N,
                                        Index max_order = 256) {
  if (n < 2) throw DomainViolation("dimension n must be at least 2");
  if (l < 0) throw DomainViolation("harmonic degree l must be nonnegative");
  if (N < 0) throw DomainViolation("truncation order must be nonnegative");
  if (N > max_order) throw OrderOverflow(static_cast<long>(N),
                                         static_cast<long>(max_order));
  if (!(reaction.radius_hint > Scalar(1)))
    throw DomainViolation(
        "reaction series must converge beyond the unit radius");

  const Scalar gp = Scalar(n) / Scalar(2) + Scalar(l) - Scalar(1);
  auto q = [&](Index d) -> Scalar {
    return d < reaction.coeffs.size() ? reaction.coeffs[d] : Scalar(0);
  };

  KernelCoefficients<Scalar> k;
  k.n = n;
  k.l = l;
  k.gamma_prime = gp;
  k.rows.resize(N + 1);
  k.rows[0] = Vector<Scalar>::Constant(1, -q(0) / Scalar(2));

  std::vector<Scalar> beta(N + 1), P(N + 2), Q(N + 2);
  for (Index i = 1; i <= N; ++i) {
    for (Index j = 0; j < i; ++j) {
      Scalar B = Scalar(0);
      for (Index kk = j; kk <= i - 1; ++kk) B += k.rows[kk][j] * q(i - 1 - kk);
      beta[j] = -B / (Scalar(4) * Scalar(i - j) * (Scalar(i - j) + gp));
    }
    P[i] = Scalar(1);
    Q[i] = Scalar(0);
    for (Index j = i - 1; j >= 0; --j) {
      const Scalar a = a_coeff(i, j, gp);
      P[j] = a * P[j + 1];
      Q[j] = a * Q[j + 1] + beta[j];
    }
    Scalar qsum = Scalar(0);
    for (Index j = 0; j < i; ++j) qsum += Q[j];
    const Scalar kap = kappa(i, gp);
    if (!std::isfinite(kap) || kap <= Scalar(0))
      throw LinearSolveFailure("row closure denominator is not positive finite");

    k.rows[i] = Vector<Scalar>::Zero(i + 1);
    k.rows[i][i] = -(q(i) / (Scalar(2) * Scalar(2 * i + 1)) + qsum) / kap;
    for (Index j = i - 1; j >= 0; --j)
      k.rows[i][j] = a_coeff(i, j, gp) * k.rows[i][j + 1] + beta[j];
    if (!k.rows[i].allFinite())
      throw LinearSolveFailure("kernel row " + std::to_string(i) +
                               " produced non-finite coefficients");
  }
  return k;
}

/// Evaluates the reduced kernel G at (r, rho), 0 <= rho <= r <= 1.
template <typename Scalar>
Scalar evaluate_G(const KernelCoefficients<Scalar>& k, Scalar r, Scalar rho) {
  if (!(Scalar(0) <= rho && rho <= r && r <= Scalar(1)))
    throw DomainViolation("evaluate_G requires 0 <= rho <= r <= 1");
  const Index N = k.order();
  const Scalar r2 = r * r, p2 = rho * rho;
  // pw_r[j] = r^{2j}, pw_p[q] = rho^{2q}
  Vector<Scalar> pw_r(N + 1), pw_p(N + 1);
  pw_r[0] = Scalar(1);
  pw_p[0] = Scalar(1);
  for (Index j = 1; j <= N; ++j) {
    pw_r[j] = pw_r[j - 1] * r2;
    pw_p[j] = pw_p[j - 1] * p2;
  }
  Scalar acc = Scalar(0);
  for (Index i = 0; i <= N; ++i)
    for (Index j = 0; j <= i; ++j) acc += k.rows[i][j] * pw_r[j] * pw_p[i - j];
  return acc;
}

/// Evaluates the full control kernel K(r, rho) = G * rho * (rho/r)^{l+n-2}.
/// Requires r > 0; the power is exact at rho = 0 (K vanishes there unless
/// l + n = 2).
template <typename Scalar>
Scalar evaluate_K(const KernelCoefficients<Scalar>& k, Scalar r, Scalar rho) {
  if (!(r > Scalar(0))) throw DomainViolation("evaluate_K requires r > 0");
  const Scalar g = evaluate_G(k, r, rho);
  const Index p = k.l + k.n - 2;
  Scalar ratio_pow = Scalar(1);
  const Scalar ratio = rho / r;
  for (Index m = 0; m < p; ++m) ratio_pow *= ratio;
  return g * rho * ratio_pow;
}

template <typename Scalar>
struct ResidualReport {
  /// Max absolute value of the equation defect q(rho) G - (operator G) over the
  /// sample triangle 0 <= rho <= r <= 1.
  Scalar max_pde_residual = Scalar(0);
  /// Max absolute mismatch between G(r, r) and the diagonal trace series.
  Scalar max_boundary_residual = Scalar(0);
  /// Largest coefficient magnitude of the defect polynomial per total even
  /// degree 2t, t = 0 .. order + reaction order + 1. Entries below the
  /// truncation order measure rounding only; later entries measure truncation.
  Vector<Scalar> per_degree;
  /// Spacing of the (r, rho) sample triangle.
  Scalar sample_step = Scalar(0);
};

/// Forms the defect of the kernel equation by exact coefficient arithmetic on
/// the stored rows and reports its size, both per degree and evaluated on a
/// sample triangle. A zero reaction yields an identically zero report.
template <typename Scalar>
ResidualReport<Scalar> pde_residual(const KernelCoefficients<Scalar>& k,
                                    const EvenPowerSeries<Scalar>& reaction,
                                    Index samples = 11) {
  const Index N = k.order();
  const Index L = reaction.coeffs.size() - 1;
  const Scalar gp = k.gamma_prime;
  auto q = [&](Index d) -> Scalar {
    return d >= 0 && d < reaction.coeffs.size() ? reaction.coeffs[d] : Scalar(0);
  };
  auto C = [&](Index i, Index j) -> Scalar {
    return (i >= 0 && i <= N && j >= 0 && j <= i) ? k.rows[i][j] : Scalar(0);
  };

  // defect[t][a]: coefficient of r^{2a} rho^{2(t-a)} in q(rho) G - (op G)
  const Index T = N + L + 1;
  std::vector<Vector<Scalar>> defect(T + 1);
  for (Index t = 0; t <= T; ++t) {
    defect[t] = Vector<Scalar>::Zero(t + 1);
    for (Index a = 0; a <= t; ++a) {
      Scalar B = Scalar(0);
      for (Index kk = a; kk <= std::min(t, N); ++kk) B += C(kk, a) * q(t - kk);
      const Scalar diff =
          Scalar(4) * Scalar(a + 1) * (Scalar(a + 1) - gp) * C(t + 1, a + 1) -
          Scalar(4) * Scalar(t + 1 - a) * (Scalar(t + 1 - a) + gp) * C(t + 1, a);
      defect[t][a] = B - diff;
    }
  }

  ResidualReport<Scalar> rep;
  rep.per_degree = Vector<Scalar>::Zero(T + 1);
  for (Index t = 0; t <= T; ++t)
    rep.per_degree[t] = defect[t].cwiseAbs().maxCoeff();

  rep.sample_step = Scalar(1) / Scalar(samples);
  const EvenPowerSeries<Scalar> trace = boundary_series(reaction);
  for (Index ir = 1; ir <= samples; ++ir) {
    const Scalar r = Scalar(ir) * rep.sample_step;
    rep.max_boundary_residual =
        std::max(rep.max_boundary_residual,
                 std::abs(evaluate_G(k, r, r) - evaluate(trace, r)));
    for (Index ip = 0; ip <= ir; ++ip) {
      const Scalar rho = Scalar(ip) * rep.sample_step;
      const Scalar r2 = r * r, p2 = rho * rho;
      // val = sum_a r^{2a} * sum_{t>=a} defect[t][a] rho^{2(t-a)}, Horner twice
      Scalar val = Scalar(0);
      for (Index a = T; a >= 0; --a) {
        Scalar inner = Scalar(0);
        for (Index t = T; t >= a; --t) inner = inner * p2 + defect[t][a];
        val = val * r2 + inner;
      }
      rep.max_pde_residual = std::max(rep.max_pde_residual, std::abs(val));
    }
  }
  return rep;
}

}  // namespace rdball
