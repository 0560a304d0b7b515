#pragma once

#include <cmath>
#include <map>

#include "rdball/harmonics.hpp"
#include "rdball/rng.hpp"
#include "rdball/state.hpp"
#include "rdball/types.hpp"

namespace rdball {

// Random initial data is realized as smooth band-limited functions with seeded
// coefficients, not as per-node noise: refining the grid must re-sample the
// same underlying field, or resolution studies would compare different data.

/// One radial coefficient profile: z(r) = r^power * sum_q coeffs[q] cos(q pi r).
template <typename Scalar>
struct RadialProfile {
  Index power = 0;
  ComplexVector<Scalar> coeffs;

  std::complex<Scalar> eval(Scalar r) const {
    std::complex<Scalar> acc(0, 0);
    for (Index q = 0; q < coeffs.size(); ++q)
      acc += coeffs[q] * std::cos(Scalar(q) * Scalar(M_PI) * r);
    return acc * std::pow(r, Scalar(power));
  }
};

/// A field on the ball described by per-mode radial profiles. Profiles for
/// m < 0 carry the conjugate symmetry that keeps the synthesized field real.
template <typename Scalar>
struct SmoothField {
  Index n = 3;
  Index band_limit = 0;
  std::map<ModeKey, RadialProfile<Scalar>> profiles;

  ModeState<Scalar> mode_state(ModeKey key, const RadialGrid<Scalar>& grid) const {
    const auto& prof = profiles.at(key);
    ModeState<Scalar> st;
    st.n = n;
    st.l = key.first;
    st.m = key.second;
    st.grid = grid;
    st.values.resize(grid.m_points);
    for (Index k = 0; k < grid.m_points; ++k)
      st.values[k] = prof.eval(grid.node(k));
    return st;
  }

  std::map<ModeKey, ModeState<Scalar>> states(const RadialGrid<Scalar>& grid) const {
    std::map<ModeKey, ModeState<Scalar>> out;
    for (const auto& [key, prof] : profiles) out.emplace(key, mode_state(key, grid));
    return out;
  }

  /// Physical field values at radius r on an angular grid (real up to rounding).
  Matrix<std::complex<Scalar>> synthesize_at(Scalar r,
                                             const AngularGrid<Scalar>& grid) const {
    ModeSet<Scalar> snap;
    snap.n = n;
    snap.band_limit = band_limit;
    for (const auto& [key, prof] : profiles) snap.coeffs[key] = prof.eval(r);
    return synthesize(snap, grid);
  }
};

namespace detail {

template <typename Scalar>
void mirror_negative_orders(SmoothField<Scalar>& field) {
  for (Index l = 0; l <= field.band_limit; ++l)
    for (Index m = 1; m <= l; ++m) {
      if (!admissible_mode(field.n, l, m)) continue;
      const auto& pos = field.profiles.at({l, m});
      RadialProfile<Scalar> neg;
      neg.power = pos.power;
      neg.coeffs = pos.coeffs.conjugate();
      if (m % 2 != 0) neg.coeffs = -neg.coeffs;
      field.profiles[{l, -m}] = std::move(neg);
    }
}

}  // namespace detail

/// Random field with values inside [lo, hi]: a constant offset at the midpoint
/// plus band-limited fluctuations with uniform coefficients, scaled down until
/// a dense sample of the synthesized field stays inside the range.
/// Law: mode (l, m >= 0) has profile r^l sum_{q=0}^{3} (a_q + i b_q) cos(q pi r)
/// / (1 + l (l + 1)), a_q, b_q uniform in [-1, 1] from stream (seed, 1, l, m),
/// b_q = 0 at m = 0; negative orders by conjugate symmetry.
template <typename Scalar>
SmoothField<Scalar> make_uniform_band_field(std::uint64_t seed, Index n, Index S,
                                            Scalar lo, Scalar hi) {
  if (!(lo < hi)) throw DomainViolation("field range must satisfy lo < hi");
  SmoothField<Scalar> field;
  field.n = n;
  field.band_limit = S;
  const Scalar mid = (lo + hi) / Scalar(2);
  const Scalar offset =
      n == 3 ? mid * std::sqrt(Scalar(4) * Scalar(M_PI))
             : mid * std::sqrt(Scalar(2) * Scalar(M_PI));
  for (Index l = 0; l <= S; ++l)
    for (Index m = 0; m <= l; ++m) {
      if (!admissible_mode(n, l, m)) continue;
      auto gen = seeded_stream(seed, 1, static_cast<std::uint64_t>(l),
                               static_cast<std::uint64_t>(m));
      RadialProfile<Scalar> prof;
      prof.power = l;
      prof.coeffs.resize(4);
      const Scalar amp = Scalar(1) / (Scalar(1) + Scalar(l) * Scalar(l + 1));
      for (Index q = 0; q < 4; ++q) {
        const Scalar a = static_cast<Scalar>(uniform(gen, -1.0, 1.0));
        const Scalar b =
            m == 0 ? Scalar(0) : static_cast<Scalar>(uniform(gen, -1.0, 1.0));
        prof.coeffs[q] = amp * std::complex<Scalar>(a, b);
      }
      field.profiles[{l, m}] = std::move(prof);
    }
  detail::mirror_negative_orders(field);

  // scale fluctuations so the sampled field stays inside [lo, hi]
  const AngularGrid<Scalar> check = make_angular_grid<Scalar>(n, S);
  Scalar fmin = mid, fmax = mid;
  const Index nr = 33;
  std::map<ModeKey, std::complex<Scalar>> base;  // fluctuation-only snapshot
  for (Index ir = 0; ir <= nr; ++ir) {
    const Scalar r = Scalar(ir) / Scalar(nr);
    ModeSet<Scalar> snap;
    snap.n = n;
    snap.band_limit = S;
    for (const auto& [key, prof] : field.profiles) snap.coeffs[key] = prof.eval(r);
    const auto vals = synthesize(snap, check);
    for (Index i = 0; i < vals.rows(); ++i)
      for (Index q = 0; q < vals.cols(); ++q) {
        fmin = std::min(fmin, vals(i, q).real() + mid);
        fmax = std::max(fmax, vals(i, q).real() + mid);
      }
  }
  Scalar scale = Scalar(1);
  if (fmax > mid) scale = std::min(scale, (hi - mid) / (fmax - mid));
  if (fmin < mid) scale = std::min(scale, (mid - lo) / (mid - fmin));
  scale *= Scalar(0.95);
  for (auto& [key, prof] : field.profiles) prof.coeffs *= scale;
  // the constant offset enters through the (0, 0) coefficient
  field.profiles[{0, 0}].coeffs[0] += offset;
  return field;
}

/// Zero-mean Gaussian random field with pointwise variance approximately
/// sigma2, as smooth band-limited data. Law: mode (l, m >= 0) has profile
/// r^l sum_{q=0}^{5} (g_q + i g'_q) w cos(q pi r) with g standard normal from
/// stream (seed, 2, l, m), w = sqrt(v / 6), v = sigma2 * (surface area) /
/// (mode count); at m = 0 the profile is real with w scaled by sqrt(2);
/// negative orders by conjugate symmetry.
///
/// The r^l envelope keeps each mode an admissible degree-l state: the degree-l
/// component of any field that is smooth across the origin vanishes like r^l
/// there. A profile without that factor loads the innermost radial nodes,
/// whose centrifugal stiffness the trapezoidal time step damps only slowly,
/// leaving a long-lived artifact that tightens as the grid is refined.
template <typename Scalar>
SmoothField<Scalar> make_gaussian_field(std::uint64_t seed, Index n, Index S,
                                        Scalar sigma2) {
  if (!(sigma2 >= Scalar(0)))
    throw DomainViolation("variance must be nonnegative");
  SmoothField<Scalar> field;
  field.n = n;
  field.band_limit = S;
  Index mode_count = 0;
  for (Index l = 0; l <= S; ++l)
    for (Index m = -l; m <= l; ++m)
      if (admissible_mode(n, l, m)) ++mode_count;
  const Scalar area =
      n == 3 ? Scalar(4) * Scalar(M_PI) : Scalar(2) * Scalar(M_PI);
  const Scalar v = sigma2 * area / Scalar(mode_count);
  const Index nq = 6;
  for (Index l = 0; l <= S; ++l)
    for (Index m = 0; m <= l; ++m) {
      if (!admissible_mode(n, l, m)) continue;
      auto gen = seeded_stream(seed, 2, static_cast<std::uint64_t>(l),
                               static_cast<std::uint64_t>(m));
      RadialProfile<Scalar> prof;
      prof.power = l;
      prof.coeffs.resize(nq);
      const Scalar w = std::sqrt(v / Scalar(nq)) *
                       (m == 0 ? std::sqrt(Scalar(2)) : Scalar(1));
      for (Index q = 0; q < nq; ++q) {
        const Scalar g = static_cast<Scalar>(standard_normal(gen));
        const Scalar gi =
            m == 0 ? Scalar(0) : static_cast<Scalar>(standard_normal(gen));
        prof.coeffs[q] = w * std::complex<Scalar>(g, gi);
      }
      field.profiles[{l, m}] = std::move(prof);
    }
  detail::mirror_negative_orders(field);
  return field;
}

}  // namespace rdball
