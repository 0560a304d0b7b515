#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rdball/harmonics.hpp"
#include "rdball/rng.hpp"

using namespace rdball;

TEST_CASE("associated Legendre values against explicit low-degree forms") {
  for (double s : {-0.9, -0.3, 0.0, 0.4, 1.0}) {
    const double c = std::sqrt(1 - s * s);
    CHECK(assoc_legendre(0, 0, s) == doctest::Approx(1.0));
    CHECK(assoc_legendre(1, 0, s) == doctest::Approx(s));
    CHECK(assoc_legendre(1, 1, s) == doctest::Approx(c));  // no phase factor
    CHECK(assoc_legendre(2, 0, s) == doctest::Approx(0.5 * (3 * s * s - 1)));
    CHECK(assoc_legendre(2, 1, s) == doctest::Approx(3 * s * c));
    CHECK(assoc_legendre(2, 2, s) == doctest::Approx(3 * (1 - s * s)));
    CHECK(assoc_legendre(3, 0, s) ==
          doctest::Approx(0.5 * s * (5 * s * s - 3)));
  }
  CHECK(assoc_legendre(2, 3, 0.5) == 0.0);  // order above degree
  CHECK_THROWS_AS(assoc_legendre(2, -1, 0.5), DomainViolation);
  CHECK_THROWS_AS(assoc_legendre(2, 0, 1.5), DomainViolation);
}

TEST_CASE("spherical harmonic values against explicit low-degree forms") {
  const double th = 1.1, ph = 0.7;
  const auto y00 = sph_harm(0, 0, th, ph);
  CHECK(y00.real() == doctest::Approx(1.0 / std::sqrt(4 * M_PI)));
  CHECK(y00.imag() == doctest::Approx(0.0));

  const auto y10 = sph_harm(1, 0, th, ph);
  CHECK(y10.real() ==
        doctest::Approx(std::sqrt(3 / (4 * M_PI)) * std::cos(th)));

  const auto y11 = sph_harm(1, 1, th, ph);
  const double mag = std::sqrt(3 / (8 * M_PI)) * std::sin(th);
  CHECK(y11.real() == doctest::Approx(-mag * std::cos(ph)));
  CHECK(y11.imag() == doctest::Approx(-mag * std::sin(ph)));
}

TEST_CASE("conjugation symmetry ties positive and negative orders") {
  for (Index l = 0; l <= 6; ++l)
    for (Index m = 0; m <= l; ++m)
      for (double th : {0.3, 1.4, 2.8}) {
        const auto plus = sph_harm(l, m, th, 0.9);
        const auto minus = sph_harm(l, -m, th, 0.9);
        const auto expect =
            (m % 2 == 0 ? 1.0 : -1.0) * std::conj(plus);
        CHECK(std::abs(minus - expect) < 1e-13);
      }
}

TEST_CASE("sum over orders is rotation invariant") {
  for (Index l : {Index(1), Index(4), Index(9)}) {
    for (double th : {0.2, 1.0, 2.2}) {
      double acc = 0;
      for (Index m = -l; m <= l; ++m) acc += std::norm(sph_harm(l, m, th, 0.35));
      CHECK(acc == doctest::Approx((2 * l + 1) / (4 * M_PI)).epsilon(1e-12));
    }
  }
}

TEST_CASE("orthonormality under the quadrature grid") {
  const auto grid = make_angular_grid<double>(3, 6);
  for (Index l1 = 0; l1 <= 4; ++l1)
    for (Index m1 = -l1; m1 <= l1; ++m1)
      for (Index l2 = l1; l2 <= 4; ++l2)
        for (Index m2 = -l2; m2 <= l2; ++m2) {
          std::complex<double> inner(0, 0);
          for (Index i = 0; i < grid.theta1.size(); ++i)
            for (Index q = 0; q < grid.theta2.size(); ++q)
              inner += grid.polar_weights[i] * grid.azimuth_weight *
                       sph_harm(l1, m1, grid.theta1[i], grid.theta2[q]) *
                       std::conj(sph_harm(l2, m2, grid.theta1[i], grid.theta2[q]));
          const double expect = (l1 == l2 && m1 == m2) ? 1.0 : 0.0;
          CHECK(std::abs(inner - expect) < 1e-12);
        }
}

TEST_CASE("analysis inverts synthesis") {
  const Index S = 6;
  const auto grid = make_angular_grid<double>(3, S);
  ModeSet<double> modes;
  modes.n = 3;
  modes.band_limit = S;
  auto gen = seeded_stream(21);
  for (Index l = 0; l <= S; ++l)
    for (Index m = -l; m <= l; ++m)
      modes.coeffs[{l, m}] =
          std::complex<double>(uniform(gen, -1.0, 1.0), uniform(gen, -1.0, 1.0));
  const auto field = synthesize(modes, grid);
  const auto back = analyze(field, grid, S);
  for (const auto& [key, c] : modes.coeffs)
    CHECK(std::abs(c - back.coeffs.at(key)) < 1e-12);
}

TEST_CASE("energy is preserved between coefficients and the sampled field") {
  const Index S = 5;
  const auto grid = make_angular_grid<double>(3, S);
  ModeSet<double> modes;
  modes.n = 3;
  modes.band_limit = S;
  auto gen = seeded_stream(22);
  double coeff_energy = 0;
  for (Index l = 0; l <= S; ++l)
    for (Index m = -l; m <= l; ++m) {
      const std::complex<double> c(uniform(gen, -1.0, 1.0),
                                   uniform(gen, -1.0, 1.0));
      modes.coeffs[{l, m}] = c;
      coeff_energy += std::norm(c);
    }
  const auto field = synthesize(modes, grid);
  double field_energy = 0;
  for (Index i = 0; i < field.rows(); ++i)
    for (Index q = 0; q < field.cols(); ++q)
      field_energy +=
          grid.polar_weights[i] * grid.azimuth_weight * std::norm(field(i, q));
  CHECK(field_energy == doctest::Approx(coeff_energy).epsilon(1e-12));
}

TEST_CASE("conjugate-symmetric coefficients synthesize a real field") {
  const Index S = 4;
  const auto grid = make_angular_grid<double>(3, S);
  ModeSet<double> modes;
  modes.n = 3;
  modes.band_limit = S;
  auto gen = seeded_stream(23);
  for (Index l = 0; l <= S; ++l) {
    modes.coeffs[{l, 0}] = std::complex<double>(uniform(gen, -1.0, 1.0), 0.0);
    for (Index m = 1; m <= l; ++m) {
      const std::complex<double> c(uniform(gen, -1.0, 1.0),
                                   uniform(gen, -1.0, 1.0));
      modes.coeffs[{l, m}] = c;
      modes.coeffs[{l, -m}] = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(c);
    }
  }
  const auto field = synthesize(modes, grid);
  for (Index i = 0; i < field.rows(); ++i)
    for (Index q = 0; q < field.cols(); ++q)
      CHECK(std::abs(field(i, q).imag()) < 1e-12);
}

TEST_CASE("plane case uses circular harmonics with extreme orders only") {
  CHECK(admissible_mode(2, 3, 3));
  CHECK(admissible_mode(2, 3, -3));
  CHECK_FALSE(admissible_mode(2, 3, 1));
  CHECK(admissible_mode(3, 3, 1));
  CHECK_FALSE(admissible_mode(3, 3, 4));

  const auto y = circular_harmonic(2, 0.6);
  CHECK(y.real() == doctest::Approx(std::cos(1.2) / std::sqrt(2 * M_PI)));
  CHECK(y.imag() == doctest::Approx(std::sin(1.2) / std::sqrt(2 * M_PI)));

  const Index S = 5;
  const auto grid = make_angular_grid<double>(2, S);
  ModeSet<double> modes;
  modes.n = 2;
  modes.band_limit = S;
  auto gen = seeded_stream(24);
  for (Index l = 0; l <= S; ++l)
    for (Index m : {l, -l}) {
      if (l == 0 && m == 0 && modes.coeffs.count({0, 0})) continue;
      modes.coeffs[{l, m}] =
          std::complex<double>(uniform(gen, -1.0, 1.0), uniform(gen, -1.0, 1.0));
    }
  const auto field = synthesize(modes, grid);
  REQUIRE(field.rows() == 1);
  const auto back = analyze(field, grid, S);
  for (const auto& [key, c] : modes.coeffs)
    CHECK(std::abs(c - back.coeffs.at(key)) < 1e-12);
}

TEST_CASE("band limit above grid capacity is rejected") {
  const auto grid = make_angular_grid<double>(3, 4);
  ModeSet<double> modes;
  modes.n = 3;
  modes.band_limit = 4;
  for (Index l = 0; l <= 4; ++l)
    for (Index m = -l; m <= l; ++m) modes.coeffs[{l, m}] = 1.0;
  const auto field = synthesize(modes, grid);
  CHECK_THROWS_AS(analyze(field, grid, Index(40)), UnderResolvedGrid);

  ModeSet<double> missing = modes;
  missing.coeffs.erase({3, 1});
  CHECK_THROWS_AS(synthesize(missing, grid), BandLimitMismatch);
}
