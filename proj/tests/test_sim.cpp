#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rdball/rng.hpp"
#include "rdball/sim.hpp"

using namespace rdball;

namespace {

SimConfig<double> base_config(Index m) {
  SimConfig<double> cfg;
  cfg.epsilon = 1;
  cfg.c = 0;
  cfg.reaction.coeffs = Vector<double>::Zero(1);
  cfg.grid = RadialGrid<double>{m};
  cfg.dt = 1e-4;
  cfg.t_end = 0.02;
  cfg.loop = LoopMode::open;
  cfg.record_every = 10;
  return cfg;
}

ModeState<double> smooth_state(const RadialGrid<double>& grid, Index l) {
  ModeState<double> st;
  st.n = 3;
  st.l = l;
  st.m = 0;
  st.grid = grid;
  st.values.resize(grid.m_points);
  for (Index k = 0; k < grid.m_points; ++k) {
    const double r = grid.node(k);
    st.values[k] = std::pow(r, double(l)) * std::cos(M_PI * r / 2);
  }
  return st;
}

ModePlan<double> trivial_plan(Index cutoff) {
  ModePlan<double> plan;
  plan.L_cutoff = cutoff;
  for (Index l = 0; l < cutoff; ++l) plan.controlled_degrees.push_back(l);
  plan.predicted_D2 = 0.5;
  return plan;
}

}  // namespace

TEST_CASE("zero stays zero") {
  auto cfg = base_config(50);
  ModeState<double> st = smooth_state(cfg.grid, 0);
  st.values.setZero();
  std::map<ModeKey, ModeState<double>> init{{{0, 0}, st}};
  const auto reps = simulate(cfg, {}, trivial_plan(0), init);
  for (double n : reps.at({0, 0}).l2_norms) CHECK(n == 0.0);
}

TEST_CASE("pure diffusion dissipates the weighted norm monotonically") {
  auto cfg = base_config(100);
  cfg.t_end = 0.05;
  std::map<ModeKey, ModeState<double>> init{{{0, 0}, smooth_state(cfg.grid, 0)}};
  const auto reps = simulate(cfg, {}, trivial_plan(0), init);
  const auto& norms = reps.at({0, 0}).l2_norms;
  for (std::size_t i = 1; i < norms.size(); ++i)
    CHECK(norms[i] < norms[i - 1]);
}

TEST_CASE("norm observable converges at second order in the grid spacing") {
  auto run = [&](Index m) {
    SimConfig<double> cfg = base_config(m);
    cfg.reaction.coeffs = Vector<double>::Constant(1, 2.0);
    cfg.dt = 2e-5;
    cfg.t_end = 0.1;
    cfg.record_every = 1 << 30;  // record only start and end
    std::map<ModeKey, ModeState<double>> init{{{0, 0}, smooth_state(cfg.grid, 0)}};
    return simulate(cfg, {}, trivial_plan(0), init).at({0, 0}).l2_norms.back();
  };
  const double ref = run(800);
  const double e25 = std::abs(run(25) - ref);
  const double e50 = std::abs(run(50) - ref);
  const double e100 = std::abs(run(100) - ref);
  CHECK(std::log2(e25 / e50) > 1.7);
  CHECK(std::log2(e50 / e100) > 1.7);
}

TEST_CASE("boundary flux stencil is second-order accurate") {
  for (Index m : {Index(50), Index(100), Index(200)}) {
    auto cfg = base_config(m);
    detail::TrapezoidalStepper<double> st(cfg, 3, 0, false);
    ComplexVector<double> u(m);
    for (Index k = 0; k < m; ++k) {
      const double r = cfg.grid.node(k);
      u[k] = std::sin(2 * r) + 3 * r * r;
    }
    const std::complex<double> boundary(std::sin(2.0) + 3.0, 0.0);
    const double exact = 2 * std::cos(2.0) + 6.0;
    const double err = std::abs(st.boundary_flux(u, boundary).real() - exact);
    CHECK(err < 4.0 / (m * m));  // ~ C h^2
  }
}

TEST_CASE("dynamics and feedback are linear in the initial data") {
  EvenPowerSeries<double> lam;
  lam.coeffs.resize(2);
  lam.coeffs << 20, 5;
  auto cfg = base_config(100);
  cfg.reaction = lam;
  cfg.c = 1;
  cfg.loop = LoopMode::full_state;
  cfg.t_end = 0.05;
  const auto plan = make_mode_plan(lam, cfg.c, cfg.epsilon, Index(3));
  const auto q = reaction_series(lam, cfg.c, cfg.epsilon);
  std::map<Index, KernelCoefficients<double>> kernels;
  for (Index l : plan.controlled_degrees)
    kernels.emplace(l, solve_kernel(q, 3, l, 10));

  auto st = smooth_state(cfg.grid, 0);
  std::map<ModeKey, ModeState<double>> init{{{0, 0}, st}};
  st.values *= 2.0;
  std::map<ModeKey, ModeState<double>> init2{{{0, 0}, st}};

  const auto r1 = simulate(cfg, kernels, plan, init).at({0, 0});
  const auto r2 = simulate(cfg, kernels, plan, init2).at({0, 0});
  REQUIRE(r1.l2_norms.size() == r2.l2_norms.size());
  for (std::size_t i = 0; i < r1.l2_norms.size(); ++i) {
    CHECK(r2.l2_norms[i] == doctest::Approx(2 * r1.l2_norms[i]).epsilon(1e-12));
    CHECK(std::abs(r2.control_signal[i] - 2.0 * r1.control_signal[i]) <=
          1e-12 * (1 + std::abs(r1.control_signal[i])));
  }
}

TEST_CASE("decay-rate fit recovers a synthetic exponential of the squared norm") {
  std::vector<double> times, norms;
  const double rate = -7.25;  // of the squared norm
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.01 * i;
    times.push_back(t);
    norms.push_back(2.0 * std::exp(0.5 * rate * t));
  }
  CHECK(fit_decay_rate(times, norms) == doctest::Approx(rate).epsilon(1e-10));

  // values at the floor are ignored; too few samples gives zero
  std::vector<double> t2{0, 1, 2}, n2{0, 0, 0};
  CHECK(fit_decay_rate(t2, n2) == 0.0);
}

TEST_CASE("zero-horizon run records exactly the initial sample") {
  auto cfg = base_config(50);
  cfg.t_end = 0;
  std::map<ModeKey, ModeState<double>> init{{{0, 0}, smooth_state(cfg.grid, 0)}};
  const auto rep = simulate(cfg, {}, trivial_plan(0), init).at({0, 0});
  REQUIRE(rep.times.size() == 1);
  CHECK(rep.times[0] == 0.0);
  CHECK(rep.l2_norms[0] == doctest::Approx(l2_norm(smooth_state(cfg.grid, 0))));
  CHECK(rep.final_state.size() == 50);
}

TEST_CASE("closing the loop without a kernel for a controlled degree fails") {
  EvenPowerSeries<double> lam;
  lam.coeffs.resize(1);
  lam.coeffs << 20;
  auto cfg = base_config(50);
  cfg.reaction = lam;
  cfg.loop = LoopMode::full_state;
  const auto plan = make_mode_plan(lam, 0.0, 1.0, Index(3));
  REQUIRE(plan.L_cutoff > 0);
  std::map<ModeKey, ModeState<double>> init{{{0, 0}, smooth_state(cfg.grid, 0)}};
  CHECK_THROWS_AS(simulate(cfg, {}, plan, init), MissingKernel);
}

TEST_CASE("mismatched state grid is rejected") {
  auto cfg = base_config(50);
  auto st = smooth_state(RadialGrid<double>{60}, 0);
  std::map<ModeKey, ModeState<double>> init{{{0, 0}, st}};
  CHECK_THROWS_AS(simulate(cfg, {}, trivial_plan(0), init), GridMismatch);
}

TEST_CASE("worker count does not change any recorded value") {
  EvenPowerSeries<double> lam;
  lam.coeffs.resize(2);
  lam.coeffs << 15, 10;
  auto cfg = base_config(80);
  cfg.reaction = lam;
  cfg.c = 2;
  cfg.loop = LoopMode::output_feedback;
  cfg.t_end = 0.03;
  const auto plan = make_mode_plan(lam, cfg.c, cfg.epsilon, Index(3));
  const auto q = reaction_series(lam, cfg.c, cfg.epsilon);
  std::map<Index, KernelCoefficients<double>> kernels;
  for (Index l : plan.controlled_degrees)
    kernels.emplace(l, solve_kernel(q, 3, l, 10));

  std::map<ModeKey, ModeState<double>> init;
  auto gen = seeded_stream(5);
  for (Index l = 0; l <= 3; ++l)
    for (Index m = -l; m <= l; ++m) {
      ModeState<double> st = smooth_state(cfg.grid, l);
      st.m = m;
      for (Index k = 0; k < st.values.size(); ++k)
        st.values[k] *= std::complex<double>(uniform(gen, 0.5, 1.5),
                                             uniform(gen, -0.5, 0.5));
      init.emplace(ModeKey{l, m}, st);
    }

  const auto serial = simulate(cfg, kernels, plan, init, {}, 1);
  const auto parallel = simulate(cfg, kernels, plan, init, {}, 4);
  REQUIRE(serial.size() == parallel.size());
  for (const auto& [key, rs] : serial) {
    const auto& rp = parallel.at(key);
    REQUIRE(rs.l2_norms.size() == rp.l2_norms.size());
    for (std::size_t i = 0; i < rs.l2_norms.size(); ++i) {
      CHECK(rs.l2_norms[i] == rp.l2_norms[i]);
      CHECK(rs.control_signal[i] == rp.control_signal[i]);
      CHECK(rs.observer_error_norms[i] == rp.observer_error_norms[i]);
    }
  }
}

TEST_CASE("single plant step matches the loop runner") {
  EvenPowerSeries<double> lam;
  lam.coeffs.resize(1);
  lam.coeffs << 3;
  auto cfg = base_config(60);
  cfg.reaction = lam;
  cfg.record_every = 1;
  cfg.t_end = cfg.dt;
  auto st = smooth_state(cfg.grid, 1);
  const auto stepped = step_plant(st, cfg, std::complex<double>(0, 0));
  std::map<ModeKey, ModeState<double>> init{{{1, 0}, st}};
  const auto rep = simulate(cfg, {}, trivial_plan(0), init).at({1, 0});
  CHECK(rep.l2_norms.back() == doctest::Approx(l2_norm(stepped)).epsilon(1e-14));
}
