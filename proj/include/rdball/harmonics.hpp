#pragma once

#include <cmath>
#include <map>

#include "rdball/errors.hpp"
#include "rdball/quadrature.hpp"
#include "rdball/types.hpp"

namespace rdball {

/// Associated Legendre function P_l^m(s) without the Condon-Shortley phase:
/// P_m^m = (2m-1)!! (1-s^2)^{m/2} > 0. Computed by the stable three-term
/// recurrence upward in degree. Safe in double precision through l = 64;
/// returns 0 for m > l.
template <typename Scalar>
Scalar assoc_legendre(Index l, Index m, Scalar s) {
  if (l < 0 || m < 0) throw DomainViolation("assoc_legendre requires l, m >= 0");
  if (!(s >= Scalar(-1) && s <= Scalar(1)))
    throw DomainViolation("assoc_legendre argument must lie in [-1, 1]");
  if (m > l) return Scalar(0);
  Scalar pmm = Scalar(1);
  if (m > 0) {
    const Scalar somx2 = std::sqrt((Scalar(1) - s) * (Scalar(1) + s));
    Scalar fact = Scalar(1);
    for (Index i = 1; i <= m; ++i) {
      pmm *= fact * somx2;
      fact += Scalar(2);
    }
  }
  if (l == m) return pmm;
  Scalar pmmp1 = s * Scalar(2 * m + 1) * pmm;
  if (l == m + 1) return pmmp1;
  Scalar pll = Scalar(0);
  for (Index ll = m + 2; ll <= l; ++ll) {
    pll = (s * Scalar(2 * ll - 1) * pmmp1 - Scalar(ll + m - 1) * pmm) /
          Scalar(ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

/// Orthonormal surface harmonic on the 2-sphere:
/// Y_lm = (-1)^m sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(cos t1) e^{i m t2}
/// for m >= 0, and Y_{l,-m} = (-1)^m conj(Y_{l,m}). The factorial ratio is
/// taken through log-Gamma so no intermediate overflows.
template <typename Scalar>
std::complex<Scalar> sph_harm(Index l, Index m, Scalar theta1, Scalar theta2) {
  if (l < 0 || std::abs(m) > l)
    throw DomainViolation("sph_harm requires |m| <= l");
  const Index ma = std::abs(m);
  const double logn = 0.5 * (std::log((2.0 * l + 1.0) / (4.0 * M_PI)) +
                             std::lgamma(static_cast<double>(l - ma + 1)) -
                             std::lgamma(static_cast<double>(l + ma + 1)));
  const Scalar norm = static_cast<Scalar>(std::exp(logn));
  const Scalar sign = (ma % 2 == 0) ? Scalar(1) : Scalar(-1);
  const Scalar p = assoc_legendre(l, ma, std::cos(theta1));
  const std::complex<Scalar> azim(std::cos(Scalar(ma) * theta2),
                                  std::sin(Scalar(ma) * theta2));
  const std::complex<Scalar> y = sign * norm * p * azim;
  return m >= 0 ? y : sign * std::conj(y);
}

/// Orthonormal harmonic on the circle: e^{i m t} / sqrt(2 pi).
template <typename Scalar>
std::complex<Scalar> circular_harmonic(Index m, Scalar theta) {
  const Scalar norm = Scalar(1) / std::sqrt(Scalar(2) * Scalar(M_PI));
  return norm * std::complex<Scalar>(std::cos(Scalar(m) * theta),
                                     std::sin(Scalar(m) * theta));
}

/// On the 2-sphere every |m| <= l appears; on the circle the degree-l
/// eigenspace is spanned by m = +-l (a single function at l = 0).
inline bool admissible_mode(Index n, Index l, Index m) {
  if (l < 0) return false;
  if (n == 3) return std::abs(m) <= l;
  if (n == 2) return m == l || m == -l;
  return false;
}

/// Quadrature grid on the unit sphere (n = 3: Gauss-Legendre in cos(polar)
/// times equispaced azimuth) or circle (n = 2: equispaced azimuth). Node
/// counts of 2S+2 per direction make analysis of band limit S exact.
template <typename Scalar>
struct AngularGrid {
  Index n = 3;
  Vector<Scalar> theta1;         // polar angles (empty for n = 2)
  Vector<Scalar> polar_weights;  // Gauss-Legendre weights in cos(theta1)
  Vector<Scalar> theta2;         // azimuth angles
  Scalar azimuth_weight = Scalar(0);

  /// Largest band limit this grid integrates exactly.
  Index capacity() const {
    const Index az = (theta2.size() - 1) / 2;
    if (n == 2) return az;
    return std::min<Index>(theta1.size() - 1, az);
  }
};

template <typename Scalar>
AngularGrid<Scalar> make_angular_grid(Index n, Index band_limit) {
  if (n != 2 && n != 3)
    throw DomainViolation("angular grids exist for n = 2 and n = 3 only");
  if (band_limit < 0) throw DomainViolation("band limit must be nonnegative");
  AngularGrid<Scalar> g;
  g.n = n;
  const Index count = 2 * band_limit + 2;
  if (n == 3) {
    Vector<Scalar> x, w;
    gauss_legendre<Scalar>(count, x, w);
    g.theta1.resize(count);
    for (Index i = 0; i < count; ++i) g.theta1[i] = std::acos(x[i]);
    g.polar_weights = w;
  }
  g.theta2.resize(count);
  for (Index q = 0; q < count; ++q)
    g.theta2[q] = Scalar(2) * Scalar(M_PI) * Scalar(q) / Scalar(count);
  g.azimuth_weight = Scalar(2) * Scalar(M_PI) / Scalar(count);
  return g;
}

/// Harmonic coefficients of a field snapshot at one radius.
template <typename Scalar>
struct ModeSet {
  Index n = 3;
  Index band_limit = 0;
  std::map<ModeKey, std::complex<Scalar>> coeffs;
};

/// Evaluates sum c_lm Y_lm on the grid. Rows index theta1 (a single row for
/// n = 2), columns index theta2.
template <typename Scalar>
Matrix<std::complex<Scalar>> synthesize(const ModeSet<Scalar>& modes,
                                        const AngularGrid<Scalar>& grid) {
  if (modes.n != grid.n)
    throw BandLimitMismatch("mode set and grid dimension differ");
  if (modes.band_limit > grid.capacity())
    throw BandLimitMismatch("mode set band limit exceeds grid capacity");
  const Index rows = grid.n == 3 ? grid.theta1.size() : 1;
  const Index cols = grid.theta2.size();
  Matrix<std::complex<Scalar>> field =
      Matrix<std::complex<Scalar>>::Zero(rows, cols);
  for (Index l = 0; l <= modes.band_limit; ++l) {
    for (Index m = -l; m <= l; ++m) {
      if (!admissible_mode(grid.n, l, m)) continue;
      const auto it = modes.coeffs.find({l, m});
      if (it == modes.coeffs.end())
        throw BandLimitMismatch("missing coefficient for an admissible mode");
      const std::complex<Scalar> c = it->second;
      for (Index i = 0; i < rows; ++i)
        for (Index q = 0; q < cols; ++q) {
          const std::complex<Scalar> y =
              grid.n == 3 ? sph_harm(l, m, grid.theta1[i], grid.theta2[q])
                          : circular_harmonic(m, grid.theta2[q]);
          field(i, q) += c * y;
        }
    }
  }
  return field;
}

/// Projects a field on the grid onto harmonics with l <= band_limit by
/// quadrature. Exact for band-limited fields the grid resolves.
template <typename Scalar>
ModeSet<Scalar> analyze(const Matrix<std::complex<Scalar>>& field,
                        const AngularGrid<Scalar>& grid, Index band_limit) {
  if (band_limit > grid.capacity())
    throw UnderResolvedGrid("grid cannot resolve the requested band limit");
  const Index rows = grid.n == 3 ? grid.theta1.size() : 1;
  const Index cols = grid.theta2.size();
  if (field.rows() != rows || field.cols() != cols)
    throw GridMismatch("field shape differs from the angular grid");
  ModeSet<Scalar> out;
  out.n = grid.n;
  out.band_limit = band_limit;
  for (Index l = 0; l <= band_limit; ++l) {
    for (Index m = -l; m <= l; ++m) {
      if (!admissible_mode(grid.n, l, m)) continue;
      std::complex<Scalar> acc(0, 0);
      for (Index i = 0; i < rows; ++i) {
        const Scalar wi = grid.n == 3 ? grid.polar_weights[i] : Scalar(1);
        for (Index q = 0; q < cols; ++q) {
          const std::complex<Scalar> y =
              grid.n == 3 ? sph_harm(l, m, grid.theta1[i], grid.theta2[q])
                          : circular_harmonic(m, grid.theta2[q]);
          acc += wi * grid.azimuth_weight * field(i, q) * std::conj(y);
        }
      }
      out.coeffs[{l, m}] = acc;
    }
  }
  return out;
}

}  // namespace rdball
