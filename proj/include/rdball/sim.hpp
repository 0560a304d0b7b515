#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <memory>
#include <thread>
#include <utility>
#include <vector>

#include "rdball/errors.hpp"
#include "rdball/gains.hpp"
#include "rdball/kernel.hpp"
#include "rdball/modes.hpp"
#include "rdball/series.hpp"
#include "rdball/state.hpp"
#include "rdball/types.hpp"

namespace rdball {

enum class LoopMode { open, full_state, output_feedback, target };
enum class TimeScheme { implicit_trapezoidal };

template <typename Scalar>
struct SimConfig {
  Scalar epsilon = Scalar(1);
  Scalar c = Scalar(0);
  /// Even coefficients of the reaction profile lambda(r) itself; the fold with
  /// c and epsilon happens only inside kernel construction.
  EvenPowerSeries<Scalar> reaction;
  RadialGrid<Scalar> grid;
  Scalar dt = Scalar(1e-4);
  Scalar t_end = Scalar(1);
  TimeScheme scheme = TimeScheme::implicit_trapezoidal;
  LoopMode loop = LoopMode::open;
  /// Sampling stride of the recorded time series (1 = every step).
  Index record_every = 10;
  /// Keep the full plant state at every record (memory-heavy; off by default).
  bool record_states = false;
};

template <typename Scalar>
void validate(const SimConfig<Scalar>& cfg) {
  if (!(cfg.epsilon > Scalar(0)))
    throw NonPositiveDiffusion(static_cast<double>(cfg.epsilon));
  if (!(cfg.dt > Scalar(0))) throw DomainViolation("dt must be positive");
  if (cfg.t_end < Scalar(0)) throw DomainViolation("t_end must be nonnegative");
  if (cfg.grid.m_points < 3)
    throw DomainViolation("the radial grid needs at least 3 nodes");
  if (cfg.record_every < 1)
    throw DomainViolation("record_every must be at least 1");
}

namespace detail {

/// One-step integrator for du/dt = A u + s on the staggered radial grid, with
/// A the conservative flux form of the radial operator plus the per-degree
/// centrifugal and reaction terms. The boundary value enters through a ghost
/// node mirrored about the r = 1 face; the trapezoidal (A-stable) update
///   (I - dt/2 A) u' = (I + dt/2 A) u + dt s
/// treats the boundary datum and any injection source as constant over the
/// step. A is real tridiagonal and constant, so the elimination coefficients
/// are factored once and each step costs one sweep.
template <typename Scalar>
class TrapezoidalStepper {
 public:
  TrapezoidalStepper(const SimConfig<Scalar>& cfg, Index n, Index l,
                     bool target_operator)
      : m_(cfg.grid.m_points), dt_(cfg.dt), h_(cfg.grid.h()) {
    validate(cfg);
    if (n < 2) throw DomainViolation("dimension n must be at least 2");
    if (l < 0) throw DomainViolation("harmonic degree must be nonnegative");
    Al_.setZero(m_);
    Ad_.setZero(m_);
    Au_.setZero(m_);
    const Scalar eps = cfg.epsilon;
    for (Index k = 0; k < m_; ++k) {
      const Scalar r = cfg.grid.node(k);
      const Scalar rn = std::pow(r, Scalar(n - 1));
      const Scalar face_l = std::pow(Scalar(k) * h_, Scalar(n - 1));
      const Scalar face_r = std::pow(Scalar(k + 1) * h_, Scalar(n - 1));
      const Scalar aL = eps * face_l / (rn * h_ * h_);
      const Scalar aR = eps * face_r / (rn * h_ * h_);
      const Scalar centrifugal = eps * Scalar(l) * Scalar(l + n - 2) / (r * r);
      const Scalar zero_order =
          target_operator ? -cfg.c : evaluate(cfg.reaction, r);
      if (k > 0) Al_[k] = aL;  // k = 0: zero-flux face at the center, aL = 0
      if (k < m_ - 1) {
        Au_[k] = aR;
        Ad_[k] = -(aL + aR) - centrifugal + zero_order;
      } else {
        // Dirichlet ghost by quadratic extrapolation through the boundary
        // datum, ghost = (8/3) U - 2 u_k + u_{k-1}/3: one order better at the
        // face than linear reflection, which matters because the observer's
        // flux functional scales the near-boundary rows by 1/h.
        Al_[k] = aL + aR / Scalar(3);
        Ad_[k] = -(aL + Scalar(3) * aR) - centrifugal + zero_order;
        boundary_coeff_ = Scalar(8) / Scalar(3) * aR;
      }
    }
    // factor M = I - dt/2 A once (Thomas elimination coefficients)
    Vector<Scalar> Md = Vector<Scalar>::Ones(m_) - (dt_ / 2) * Ad_;
    Ml_ = -(dt_ / 2) * Al_;
    Mu_ = -(dt_ / 2) * Au_;
    cp_.resize(m_);
    inv_denom_.resize(m_);
    Scalar denom = Md[0];
    for (Index k = 0; k < m_; ++k) {
      if (k > 0) denom = Md[k] - Ml_[k] * cp_[k - 1];
      if (std::abs(denom) < Scalar(1e-300))
        throw LinearSolveFailure("time-step matrix is numerically singular");
      inv_denom_[k] = Scalar(1) / denom;
      cp_[k] = Mu_[k] * inv_denom_[k];
    }
  }

  void step(ComplexVector<Scalar>& u, std::complex<Scalar> boundary_value,
            const ComplexVector<Scalar>* source = nullptr) const {
    ComplexVector<Scalar> rhs =
        explicit_rhs(u, dt_ * boundary_coeff_ * boundary_value);
    if (source) rhs += dt_ * (*source);
    solve_in_place(rhs);
    u = std::move(rhs);
  }

  /// Explicit half of the trapezoidal update, (I + dt/2 A) u, with
  /// `boundary_term` added to the last row (callers weight the datum).
  ComplexVector<Scalar> explicit_rhs(const ComplexVector<Scalar>& u,
                                     std::complex<Scalar> boundary_term) const {
    if (u.size() != m_) throw GridMismatch("state size differs from the grid");
    ComplexVector<Scalar> rhs(m_);
    for (Index k = 0; k < m_; ++k) {
      std::complex<Scalar> acc = u[k] + (dt_ / 2) * (Ad_[k] * u[k]);
      if (k > 0) acc += (dt_ / 2) * (Al_[k] * u[k - 1]);
      if (k < m_ - 1) acc += (dt_ / 2) * (Au_[k] * u[k + 1]);
      rhs[k] = acc;
    }
    rhs[m_ - 1] += boundary_term;
    return rhs;
  }

  /// x := (I - dt/2 A)^{-1} x using the prefactored elimination coefficients.
  void solve_in_place(ComplexVector<Scalar>& x) const {
    if (x.size() != m_) throw GridMismatch("state size differs from the grid");
    x[0] *= inv_denom_[0];
    for (Index k = 1; k < m_; ++k)
      x[k] = (x[k] - Ml_[k] * x[k - 1]) * inv_denom_[k];
    for (Index k = m_ - 2; k >= 0; --k) x[k] -= cp_[k] * x[k + 1];
  }

  Vector<Scalar> solve_real(Vector<Scalar> x) const {
    if (x.size() != m_) throw GridMismatch("vector size differs from the grid");
    x[0] *= inv_denom_[0];
    for (Index k = 1; k < m_; ++k)
      x[k] = (x[k] - Ml_[k] * x[k - 1]) * inv_denom_[k];
    for (Index k = m_ - 2; k >= 0; --k) x[k] -= cp_[k] * x[k + 1];
    return x;
  }

  /// One-sided second-order boundary derivative at r = 1 from the boundary
  /// datum and the two outermost nodes (spacings h/2 and 3h/2).
  std::complex<Scalar> boundary_flux(const ComplexVector<Scalar>& u,
                                     std::complex<Scalar> boundary_value) const {
    if (u.size() != m_ || m_ < 2)
      throw GridMismatch("flux stencil needs the two outermost nodes");
    return (Scalar(8) * boundary_value - Scalar(9) * u[m_ - 1] + u[m_ - 2]) /
           (Scalar(3) * h_);
  }

  Index size() const { return m_; }
  Scalar spacing() const { return h_; }
  Scalar dt() const { return dt_; }
  Scalar boundary_coeff() const { return boundary_coeff_; }

 private:
  Index m_;
  Scalar dt_, h_;
  Vector<Scalar> Al_, Ad_, Au_;
  Scalar boundary_coeff_ = Scalar(0);
  Vector<Scalar> Ml_, Mu_, cp_, inv_denom_;
};

/// Advances controlled degrees with the feedback folded into the trapezoidal
/// update itself. Holding the boundary value (and the observer's flux
/// injection) at its step-start value puts an h-dependent ceiling on the
/// stable dt; evaluating both at the new time level keeps the update exactly
/// trapezoidal on the closed-loop operator, so A-stability survives grid
/// refinement. The feedback enters the linear solve only through rank-one
/// couplings, so each step still costs one factored sweep per state plus a
/// few dot products (Sherman-Morrison).
template <typename Scalar>
class ClosedLoopStepper {
 public:
  /// `observer` selects the joint plant/observer update; pass nullptr for
  /// full-state feedback.
  ClosedLoopStepper(std::shared_ptr<const TrapezoidalStepper<Scalar>> stepper,
                    const GainTable<Scalar>& control,
                    const GainTable<Scalar>* observer)
      : st_(std::move(stepper)), h_(st_->spacing()) {
    const Index m = st_->size();
    if (control.values.size() != m || control.weights.size() != m)
      throw GridMismatch("control gain table size differs from the grid");
    k_ = control.weights.cwiseProduct(control.values);
    alpha_ = (st_->dt() / 2) * st_->boundary_coeff();
    Vector<Scalar> em = Vector<Scalar>::Zero(m);
    em[m - 1] = Scalar(1);
    z_ = st_->solve_real(std::move(em));
    control_denom_ = Scalar(1) - alpha_ * k_.dot(z_);
    if (std::abs(control_denom_) < Scalar(1e-300))
      throw LinearSolveFailure("implicit boundary feedback is singular");
    if (observer) {
      if (observer->values.size() != m)
        throw GridMismatch("observer gain table size differs from the grid");
      with_observer_ = true;
      beta_ = st_->dt() / 2;
      p_ = observer->values;
      w_ = st_->solve_real(p_);
      defect_denom_ = Scalar(1) + beta_ * defect_functional(w_);
      kw_ = k_.dot(w_);
      if (std::abs(defect_denom_) < Scalar(1e-300))
        throw LinearSolveFailure("implicit flux injection is singular");
    }
  }

  /// Full-state step: the datum solves U' = k^T u' together with the update.
  void advance(ComplexVector<Scalar>& u, std::complex<Scalar> boundary_value) const {
    ComplexVector<Scalar> y = st_->explicit_rhs(u, alpha_ * boundary_value);
    st_->solve_in_place(y);
    const std::complex<Scalar> U_new = gain_dot(y) / control_denom_;
    u = y + (alpha_ * U_new) * z_;
  }

  /// Output-feedback step: joint update of plant and observer. The datum
  /// U' = k^T uhat' and the flux defect d' = g^T (u' - uhat') are eliminated
  /// exactly; the boundary value passed in is the step-start datum k^T uhat.
  void advance(ComplexVector<Scalar>& u, ComplexVector<Scalar>& uhat,
               std::complex<Scalar> boundary_value) const {
    if (!with_observer_)
      throw LinearSolveFailure("stepper was built without an observer gain");
    const std::complex<Scalar> d_old =
        defect_functional(u) - defect_functional(uhat);
    ComplexVector<Scalar> yu = st_->explicit_rhs(u, alpha_ * boundary_value);
    ComplexVector<Scalar> yh = st_->explicit_rhs(uhat, alpha_ * boundary_value);
    yh += (beta_ * d_old) * p_;
    st_->solve_in_place(yu);
    st_->solve_in_place(yh);
    const std::complex<Scalar> d_new =
        (defect_functional(yu) - defect_functional(yh)) / defect_denom_;
    const std::complex<Scalar> U_new =
        (gain_dot(yh) + beta_ * kw_ * d_new) / control_denom_;
    u = yu + (alpha_ * U_new) * z_;
    uhat = yh + (alpha_ * U_new) * z_ + (beta_ * d_new) * w_;
  }

 private:
  std::complex<Scalar> gain_dot(const ComplexVector<Scalar>& v) const {
    std::complex<Scalar> acc(0, 0);
    for (Index j = 0; j < k_.size(); ++j) acc += k_[j] * v[j];
    return acc;
  }

  /// Datum-free part of the boundary-flux stencil; the datum contribution
  /// cancels in the measured-minus-estimated defect.
  std::complex<Scalar> defect_functional(const ComplexVector<Scalar>& v) const {
    const Index m = v.size();
    return (Scalar(-9) * v[m - 1] + v[m - 2]) / (Scalar(3) * h_);
  }
  Scalar defect_functional(const Vector<Scalar>& v) const {
    const Index m = v.size();
    return (Scalar(-9) * v[m - 1] + v[m - 2]) / (Scalar(3) * h_);
  }

  std::shared_ptr<const TrapezoidalStepper<Scalar>> st_;
  Scalar h_;
  Vector<Scalar> k_, z_;
  Scalar alpha_ = Scalar(0), control_denom_ = Scalar(1);
  bool with_observer_ = false;
  Scalar beta_ = Scalar(0), defect_denom_ = Scalar(1), kw_ = Scalar(0);
  Vector<Scalar> p_, w_;
};

}  // namespace detail

/// Advances one plant step with the given boundary datum.
template <typename Scalar>
ModeState<Scalar> step_plant(const ModeState<Scalar>& u,
                             const SimConfig<Scalar>& cfg,
                             std::complex<Scalar> boundary_value) {
  if (!(u.grid == cfg.grid)) throw GridMismatch("state grid differs from config");
  detail::TrapezoidalStepper<Scalar> st(cfg, u.n, u.l, false);
  ModeState<Scalar> out = u;
  st.step(out.values, boundary_value);
  out.time += cfg.dt;
  return out;
}

/// Advances one observer step: plant operator plus the output-injection source
/// gain * (measured_flux - estimated flux), evaluated at the step start.
template <typename Scalar>
ModeState<Scalar> step_observer(const ModeState<Scalar>& uhat,
                                const SimConfig<Scalar>& cfg,
                                const GainTable<Scalar>& gain,
                                std::complex<Scalar> measured_flux,
                                std::complex<Scalar> boundary_value) {
  if (!(uhat.grid == cfg.grid))
    throw GridMismatch("state grid differs from config");
  if (gain.values.size() != uhat.values.size())
    throw GridMismatch("gain table size differs from the state");
  detail::TrapezoidalStepper<Scalar> st(cfg, uhat.n, uhat.l, false);
  const std::complex<Scalar> defect =
      measured_flux - st.boundary_flux(uhat.values, boundary_value);
  ComplexVector<Scalar> source(uhat.values.size());
  for (Index k = 0; k < source.size(); ++k) source[k] = gain.values[k] * defect;
  ModeState<Scalar> out = uhat;
  st.step(out.values, boundary_value, &source);
  out.time += cfg.dt;
  return out;
}

/// Forward state transformation on the grid:
/// w_k = u_k - h * sum_{j <= k} K(r_k, r_j) u_j.
template <typename Scalar>
ModeState<Scalar> transform_state(const ModeState<Scalar>& u,
                                  const KernelCoefficients<Scalar>& k) {
  if (u.n != k.n || u.l != k.l)
    throw GridMismatch("state and kernel disagree on (n, l)");
  const Scalar h = u.grid.h();
  ModeState<Scalar> w = u;
  for (Index i = 0; i < u.values.size(); ++i) {
    const Scalar r = u.grid.node(i);
    std::complex<Scalar> acc(0, 0);
    for (Index j = 0; j <= i; ++j)
      acc += evaluate_K(k, r, u.grid.node(j)) * u.values[j];
    w.values[i] = u.values[i] - h * acc;
  }
  return w;
}

/// Least-squares slope of log(norm^2) over the trailing half of the samples,
/// skipping values at or below the floating-point floor 1e-14 (squared scale).
/// Returns 0 when fewer than two usable samples remain.
template <typename Scalar>
Scalar fit_decay_rate(const std::vector<Scalar>& times,
                      const std::vector<Scalar>& norms) {
  std::vector<Scalar> t, y;
  for (std::size_t i = 0; i < times.size() && i < norms.size(); ++i) {
    const Scalar sq = norms[i] * norms[i];
    if (sq > Scalar(1e-14)) {
      t.push_back(times[i]);
      y.push_back(std::log(sq));
    }
  }
  if (t.size() < 2) return Scalar(0);
  const std::size_t start = t.size() < 4 ? 0 : t.size() / 2;
  Scalar st = 0, sy = 0, stt = 0, sty = 0;
  const Scalar count = Scalar(t.size() - start);
  for (std::size_t i = start; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  const Scalar denom = count * stt - st * st;
  if (denom == Scalar(0)) return Scalar(0);
  return (count * sty - st * sy) / denom;
}

template <typename Scalar>
struct SimReport {
  std::vector<Scalar> times;
  std::vector<Scalar> l2_norms;
  std::vector<Scalar> observer_error_norms;  // empty when no observer ran
  std::vector<std::complex<Scalar>> control_signal;
  Scalar fitted_decay_rate = Scalar(0);
  ComplexVector<Scalar> final_state;  // plant values at t_end
  std::vector<ComplexVector<Scalar>> states;  // per record, when requested
};

namespace detail {

template <typename Scalar>
struct DegreeContext {
  bool controlled = false;
  const KernelCoefficients<Scalar>* kernel = nullptr;
  GainTable<Scalar> control;
  GainTable<Scalar> observer;
  std::shared_ptr<TrapezoidalStepper<Scalar>> stepper;
  std::shared_ptr<const ClosedLoopStepper<Scalar>> closed;  // feedback loops
};

template <typename Scalar>
SimReport<Scalar> run_mode(const SimConfig<Scalar>& cfg,
                           const DegreeContext<Scalar>& ctx,
                           const ModeState<Scalar>& initial,
                           const ModeState<Scalar>& initial_observer) {
  const Index nsteps = static_cast<Index>(std::llround(
      static_cast<double>(cfg.t_end) / static_cast<double>(cfg.dt)));
  ModeState<Scalar> u = initial;
  ModeState<Scalar> uhat = initial_observer;
  const bool with_observer =
      cfg.loop == LoopMode::output_feedback && ctx.controlled;
  const bool with_control =
      ctx.controlled && (cfg.loop == LoopMode::full_state ||
                         cfg.loop == LoopMode::output_feedback);

  SimReport<Scalar> rep;
  ModeState<Scalar> diff = u;  // scratch for error norms
  for (Index step = 0;; ++step) {
    std::complex<Scalar> U(0, 0);
    if (with_control)
      U = control_value(ctx.control,
                        cfg.loop == LoopMode::output_feedback ? uhat : u);
    if (step % cfg.record_every == 0 || step == nsteps) {
      rep.times.push_back(u.time);
      rep.l2_norms.push_back(l2_norm(u));
      rep.control_signal.push_back(U);
      if (cfg.record_states) rep.states.push_back(u.values);
      if (with_observer) {
        diff.values = uhat.values - u.values;
        rep.observer_error_norms.push_back(l2_norm(diff));
      }
    }
    if (step == nsteps) break;
    if (with_observer) {
      ctx.closed->advance(u.values, uhat.values, U);
      uhat.time += cfg.dt;
    } else if (with_control) {
      ctx.closed->advance(u.values, U);
    } else {
      ctx.stepper->step(u.values, U);
    }
    u.time += cfg.dt;
  }
  rep.fitted_decay_rate = fit_decay_rate(rep.times, rep.l2_norms);
  rep.final_state = u.values;
  return rep;
}

}  // namespace detail

/// Runs the configured loop for every mode in `initial`. Kernels are required
/// for every controlled degree when the loop closes a feedback path. Modes are
/// independent; `threads` > 1 fans them out across workers without changing
/// any result. Observer states start at `initial_observer` when a key is
/// present there, otherwise at the plant initial state (zero initial error).
template <typename Scalar>
std::map<ModeKey, SimReport<Scalar>> simulate(
    const SimConfig<Scalar>& cfg,
    const std::map<Index, KernelCoefficients<Scalar>>& kernels,
    const ModePlan<Scalar>& plan,
    const std::map<ModeKey, ModeState<Scalar>>& initial,
    const std::map<ModeKey, ModeState<Scalar>>& initial_observer = {},
    Index threads = 1) {
  validate(cfg);

  // shared per-degree contexts (kernel, gains, factored stepper)
  std::map<Index, detail::DegreeContext<Scalar>> contexts;
  for (const auto& [key, state] : initial) {
    const Index l = key.first;
    if (state.l != l || std::abs(key.second) > l)
      throw DomainViolation("mode key disagrees with its state");
    if (!(state.grid == cfg.grid))
      throw GridMismatch("initial state grid differs from config");
    if (contexts.count(l)) continue;
    detail::DegreeContext<Scalar> ctx;
    ctx.controlled =
        std::find(plan.controlled_degrees.begin(), plan.controlled_degrees.end(),
                  l) != plan.controlled_degrees.end();
    const bool needs_kernel =
        ctx.controlled && (cfg.loop == LoopMode::full_state ||
                           cfg.loop == LoopMode::output_feedback);
    if (needs_kernel) {
      auto it = kernels.find(l);
      if (it == kernels.end()) throw MissingKernel(static_cast<long>(l));
      ctx.kernel = &it->second;
      ctx.control = control_gain(it->second, cfg.grid.nodes());
      if (cfg.loop == LoopMode::output_feedback)
        ctx.observer = observer_gain(it->second, cfg.epsilon, cfg.grid.nodes());
    }
    ctx.stepper = std::make_shared<detail::TrapezoidalStepper<Scalar>>(
        cfg, state.n, l, cfg.loop == LoopMode::target);
    if (needs_kernel)
      ctx.closed = std::make_shared<const detail::ClosedLoopStepper<Scalar>>(
          ctx.stepper, ctx.control,
          cfg.loop == LoopMode::output_feedback ? &ctx.observer : nullptr);
    contexts.emplace(l, std::move(ctx));
  }

  std::vector<ModeKey> keys;
  for (const auto& [key, state] : initial) keys.push_back(key);
  std::vector<SimReport<Scalar>> slots(keys.size());

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ModeKey key = keys[i];
      const auto& state = initial.at(key);
      auto obs_it = initial_observer.find(key);
      slots[i] = detail::run_mode(
          cfg, contexts.at(key.first), state,
          obs_it == initial_observer.end() ? state : obs_it->second);
    }
  };

  const std::size_t nw = std::max<Index>(1, std::min<Index>(
      threads, static_cast<Index>(keys.size())));
  if (nw <= 1) {
    worker(0, keys.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nw);
    const std::size_t chunk = (keys.size() + nw - 1) / nw;
    for (std::size_t w = 0; w < nw; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(keys.size(), b + chunk);
      pool.emplace_back([&, w, b, e] {
        try {
          worker(b, e);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  std::map<ModeKey, SimReport<Scalar>> out;
  for (std::size_t i = 0; i < keys.size(); ++i)
    out.emplace(keys[i], std::move(slots[i]));
  return out;
}

/// Mean of the per-mode norm series at matching sample times. When
/// `observer_error` is set, modes without an observer are skipped.
template <typename Scalar>
std::pair<std::vector<Scalar>, std::vector<Scalar>> mean_norm_series(
    const std::map<ModeKey, SimReport<Scalar>>& reports,
    bool observer_error = false) {
  std::vector<Scalar> times, mean;
  Index count = 0;
  for (const auto& [key, rep] : reports) {
    const auto& series = observer_error ? rep.observer_error_norms : rep.l2_norms;
    if (series.empty()) continue;
    if (times.empty()) {
      times = rep.times;
      mean.assign(series.size(), Scalar(0));
    }
    if (series.size() != mean.size())
      throw GridMismatch("norm series lengths differ between modes");
    for (std::size_t i = 0; i < series.size(); ++i) mean[i] += series[i];
    ++count;
  }
  if (count > 0)
    for (auto& v : mean) v /= Scalar(count);
  return {times, mean};
}

}  // namespace rdball
