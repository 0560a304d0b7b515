#pragma once

#include <cmath>
#include <vector>

#include "rdball/errors.hpp"
#include "rdball/series.hpp"
#include "rdball/types.hpp"

namespace rdball {

/// Which harmonic degrees need boundary control, and the decay rate the
/// controlled target dynamics guarantee.
template <typename Scalar>
struct ModePlan {
  Index L_cutoff = 0;  // degrees l >= L_cutoff are stable uncontrolled
  std::vector<Index> controlled_degrees;
  Scalar predicted_D2 = Scalar(0);
};

/// Smallest degree l whose centrifugal term dominates the reaction:
/// epsilon * l * (l + n - 2) > reaction_sup. A nonpositive supremum means every
/// degree is stable, including l = 0.
template <typename Scalar>
Index unstable_mode_bound(Scalar reaction_sup, Scalar epsilon, Index n) {
  if (!(epsilon > Scalar(0)))
    throw NonPositiveDiffusion(static_cast<double>(epsilon));
  if (n < 2) throw DomainViolation("dimension n must be at least 2");
  if (reaction_sup <= Scalar(0)) return 0;
  Index l = 0;
  while (!(epsilon * Scalar(l) * Scalar(l + n - 2) > reaction_sup)) ++l;
  return l;
}

/// Guaranteed exponential decay rate of the squared weighted norm of the
/// target dynamics on the unit ball: D2 = 2c + epsilon / 2.
template <typename Scalar>
Scalar target_decay_rate(Scalar c, Scalar epsilon) {
  if (!(epsilon > Scalar(0)))
    throw NonPositiveDiffusion(static_cast<double>(epsilon));
  if (c < Scalar(0)) throw DomainViolation("target shift c must be nonnegative");
  return Scalar(2) * c + epsilon / Scalar(2);
}

/// Supremum of an even polynomial on [0, 1] by dense sampling plus endpoints.
template <typename Scalar>
Scalar polynomial_sup_unit_interval(const EvenPowerSeries<Scalar>& s,
                                    Index samples = 1000) {
  Scalar sup = std::max(evaluate(s, Scalar(0)), evaluate(s, Scalar(1)));
  for (Index i = 1; i < samples; ++i)
    sup = std::max(sup, evaluate(s, Scalar(i) / Scalar(samples)));
  return sup;
}

template <typename Scalar>
ModePlan<Scalar> make_mode_plan(const EvenPowerSeries<Scalar>& lambda_even,
                                Scalar c, Scalar epsilon, Index n) {
  ModePlan<Scalar> plan;
  plan.L_cutoff =
      unstable_mode_bound(polynomial_sup_unit_interval(lambda_even), epsilon, n);
  for (Index l = 0; l < plan.L_cutoff; ++l) plan.controlled_degrees.push_back(l);
  plan.predicted_D2 = target_decay_rate(c, epsilon);
  return plan;
}

}  // namespace rdball
