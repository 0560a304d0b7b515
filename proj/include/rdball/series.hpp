#pragma once

#include <cmath>
#include <limits>

#include "rdball/errors.hpp"
#include "rdball/types.hpp"

namespace rdball {

/// Polynomial in r^2: coeffs[i] multiplies r^{2i}. radius_hint records the
/// radius of convergence of the underlying profile; downstream kernel solves
/// require it to exceed 1 (polynomial data keeps the default, infinity).
template <typename Scalar>
struct EvenPowerSeries {
  Vector<Scalar> coeffs;
  Scalar radius_hint = std::numeric_limits<Scalar>::infinity();

  Index order() const { return coeffs.size() - 1; }
};

/// Coefficient list in plain powers of r (both parities), as supplied by a caller.
template <typename Scalar>
struct RawSeries {
  Vector<Scalar> coeffs;
};

/// Collapses a mixed-parity coefficient list to even-only form. Odd entries
/// must be zero within `tol` of the largest coefficient magnitude; the first
/// offending index is reported otherwise.
template <typename Scalar>
EvenPowerSeries<Scalar> validate_even(const RawSeries<Scalar>& raw,
                                      Scalar tol = Scalar(1e-12)) {
  Scalar scale = Scalar(1);
  for (Index i = 0; i < raw.coeffs.size(); ++i)
    scale = std::max(scale, std::abs(raw.coeffs[i]));
  for (Index i = 1; i < raw.coeffs.size(); i += 2) {
    if (std::abs(raw.coeffs[i]) > tol * scale)
      throw EvennessViolation(static_cast<long>(i),
                              static_cast<double>(raw.coeffs[i]));
  }
  EvenPowerSeries<Scalar> out;
  out.coeffs = Vector<Scalar>::Zero((raw.coeffs.size() + 1) / 2);
  for (Index i = 0; i < raw.coeffs.size(); i += 2) out.coeffs[i / 2] = raw.coeffs[i];
  return out;
}

/// Folded reaction profile (lambda(r) + c) / epsilon used by the kernel
/// equations. `lambda_even` holds the even-power coefficients of lambda itself.
template <typename Scalar>
EvenPowerSeries<Scalar> reaction_series(const EvenPowerSeries<Scalar>& lambda_even,
                                        Scalar c, Scalar epsilon) {
  if (!(epsilon > Scalar(0)))
    throw NonPositiveDiffusion(static_cast<double>(epsilon));
  EvenPowerSeries<Scalar> out = lambda_even;
  if (out.coeffs.size() == 0) out.coeffs = Vector<Scalar>::Zero(1);
  out.coeffs[0] += c;
  out.coeffs /= epsilon;
  return out;
}

/// Horner evaluation in x = r^2.
template <typename Scalar>
Scalar evaluate(const EvenPowerSeries<Scalar>& s, Scalar r) {
  const Scalar x = r * r;
  Scalar acc = Scalar(0);
  for (Index i = s.coeffs.size() - 1; i >= 0; --i) acc = acc * x + s.coeffs[i];
  return acc;
}

/// Series of the kernel diagonal trace G(r, r) = -(1/(2r)) * int_0^r reaction.
/// Term i of the result is -reaction_i / (2 (2i+1)).
template <typename Scalar>
EvenPowerSeries<Scalar> boundary_series(const EvenPowerSeries<Scalar>& reaction) {
  EvenPowerSeries<Scalar> out;
  out.radius_hint = reaction.radius_hint;
  out.coeffs = Vector<Scalar>::Zero(reaction.coeffs.size());
  for (Index i = 0; i < reaction.coeffs.size(); ++i)
    out.coeffs[i] = -reaction.coeffs[i] / (Scalar(2) * Scalar(2 * i + 1));
  return out;
}

}  // namespace rdball
