// Command-line front end: solve gain kernels, run per-harmonic simulations,
// and reproduce the reference experiment as plain CSV/JSON artifacts.
// Outputs are deterministic for a fixed config and seed: no timestamps, fixed
// key order, 17-significant-digit floats.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rdball/fields.hpp"
#include "rdball/io.hpp"

namespace fs = std::filesystem;
using namespace rdball;

namespace {

constexpr std::uint64_t kDefaultSeed = 20260816ULL;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = kDefaultSeed;
  Index threads = 1;
};

const char* kInitialLaw =
    "mode (l,m>=0): r^l * sum_{q=0..3} (a_q + i b_q) cos(q pi r) / (1+l(l+1)), "
    "a,b ~ U(-1,1) from stream (seed,1,l,m), b=0 at m=0; constant offset "
    "(lo+hi)/2 via the (0,0) coefficient; fluctuations scaled by 0.95x the "
    "range margin of a dense field sample; negative m by conjugate symmetry";

const char* kNoiseLaw =
    "mode (l,m>=0): r^l * sum_{q=0..5} (g_q + i g'_q) w cos(q pi r), g ~ N(0,1) "
    "from stream (seed,2,l,m), w = sqrt(sigma2 * area / (mode count) / 6), real "
    "with w*sqrt(2) at m=0; negative m by conjugate symmetry";

json problem_echo(const RunConfig<double>& cfg, std::uint64_t seed) {
  json j;
  j["n"] = cfg.n;
  j["epsilon"] = cfg.epsilon;
  j["c"] = cfg.c;
  std::vector<double> lam(cfg.lambda_even.coeffs.data(),
                          cfg.lambda_even.coeffs.data() +
                              cfg.lambda_even.coeffs.size());
  j["lambda_even_coeffs"] = lam;  // unit-ball normalized
  j["solver_order"] = cfg.order;
  j["grid_points"] = cfg.grid_points;
  j["dt"] = cfg.dt;
  j["t_end"] = cfg.t_end;
  j["record_every"] = cfg.record_every;
  j["band_limit"] = cfg.band_limit;
  j["loop"] = to_string(cfg.loop);
  j["noise_sigma2"] = cfg.noise_sigma2;
  j["seed"] = seed;
  j["initial_law"] = kInitialLaw;
  j["noise_law"] = kNoiseLaw;
  return j;
}

RunConfig<double> reference_config() {
  RunConfig<double> cfg;
  cfg.n = 3;
  cfg.epsilon = 1;
  cfg.c = 3;
  cfg.lambda_even.coeffs.resize(3);
  cfg.lambda_even.coeffs << 50, 50, 10;
  cfg.order = 15;
  cfg.grid_points = 200;
  cfg.dt = 1e-4;
  cfg.t_end = 2.0;
  cfg.record_every = 10;
  cfg.band_limit = 10;
  cfg.loop = LoopMode::output_feedback;
  cfg.noise_sigma2 = 0.5;
  cfg.initial_lo = 0;
  cfg.initial_hi = 10;
  return cfg;
}

SimConfig<double> sim_config(const RunConfig<double>& cfg) {
  SimConfig<double> sc;
  sc.epsilon = cfg.epsilon;
  sc.c = cfg.c;
  sc.reaction = cfg.lambda_even;
  sc.grid = RadialGrid<double>{cfg.grid_points};
  sc.dt = cfg.dt;
  sc.t_end = cfg.t_end;
  sc.loop = cfg.loop;
  sc.record_every = cfg.record_every;
  return sc;
}

std::map<Index, KernelCoefficients<double>> solve_controlled_kernels(
    const RunConfig<double>& cfg, const ModePlan<double>& plan) {
  const auto q = reaction_series(cfg.lambda_even, cfg.c, cfg.epsilon);
  std::map<Index, KernelCoefficients<double>> kernels;
  for (Index l : plan.controlled_degrees)
    kernels.emplace(l, solve_kernel(q, cfg.n, l, cfg.order, cfg.max_order));
  return kernels;
}

/// Largest |G| over a triangle sample, for scaling residuals.
double kernel_scale(const KernelCoefficients<double>& k) {
  double scale = 0;
  const Index steps = 24;
  for (Index a = 0; a <= steps; ++a)
    for (Index b = 0; b <= a; ++b) {
      const double r = double(a) / steps;
      const double rho = double(b) / steps;
      scale = std::max(scale, std::abs(evaluate_G(k, r, rho)));
    }
  return scale;
}

std::map<ModeKey, ModeState<double>> zero_states(Index n, Index S,
                                                 const RadialGrid<double>& grid) {
  std::map<ModeKey, ModeState<double>> out;
  for (Index l = 0; l <= S; ++l)
    for (Index m = -l; m <= l; ++m) {
      if (!admissible_mode(n, l, m)) continue;
      ModeState<double> st;
      st.n = n;
      st.l = l;
      st.m = m;
      st.grid = grid;
      st.values = ComplexVector<double>::Zero(grid.m_points);
      out.emplace(ModeKey{l, m}, st);
    }
  return out;
}

std::string mode_tag(ModeKey key) {
  return "l" + std::to_string(key.first) + "_m" + std::to_string(key.second);
}

void write_trajectories(const std::map<ModeKey, SimReport<double>>& reports,
                        const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [key, rep] : reports)
    write_text_file(dir / ("traj_" + mode_tag(key) + ".csv"),
                    trajectory_to_csv(rep));
}

void write_mean_series(const std::map<ModeKey, SimReport<double>>& reports,
                       const fs::path& dir, bool with_observer) {
  auto [times, means] = mean_norm_series(reports, false);
  write_text_file(dir / "mean_l2_norm.csv",
                  norm_series_to_csv(times, means, "mean_l2_norm"));
  if (with_observer) {
    auto [et, errs] = mean_norm_series(reports, true);
    write_text_file(dir / "mean_observer_error.csv",
                    norm_series_to_csv(et, errs, "mean_observer_error"));
  }
}

json report_summary_json(const std::map<ModeKey, SimReport<double>>& reports) {
  json modes = json::array();
  for (const auto& [key, rep] : reports) {
    json m;
    m["l"] = key.first;
    m["m"] = key.second;
    m["initial_l2_norm"] = rep.l2_norms.front();
    m["final_l2_norm"] = rep.l2_norms.back();
    m["fitted_decay_rate"] = rep.fitted_decay_rate;
    if (!rep.observer_error_norms.empty()) {
      m["initial_observer_error"] = rep.observer_error_norms.front();
      m["final_observer_error"] = rep.observer_error_norms.back();
    }
    modes.push_back(m);
  }
  return modes;
}

/// Physical boundary control at polar angle theta1 = pi/2 and the given
/// azimuths, synthesized from the per-mode control signals.
void write_control_effort(const std::map<ModeKey, SimReport<double>>& reports,
                          Index n, const std::vector<double>& azimuths,
                          const fs::path& path) {
  const auto& first = reports.begin()->second;
  std::string out = "time";
  for (double th : azimuths) out += ",theta2_" + format_float(th);
  out += '\n';
  for (std::size_t i = 0; i < first.times.size(); ++i) {
    out += format_float(first.times[i]);
    for (double th : azimuths) {
      std::complex<double> u(0, 0);
      for (const auto& [key, rep] : reports) {
        if (i >= rep.control_signal.size()) continue;
        const std::complex<double> y =
            n == 3 ? sph_harm(key.first, key.second, M_PI / 2, th)
                   : circular_harmonic(key.second, th);
        u += rep.control_signal[i] * y;
      }
      out += ',';
      out += format_float(u.real());
    }
    out += '\n';
  }
  write_text_file(path, out);
}

/// Field snapshot (theta1, theta2, value) at the grid node nearest `radius`.
void write_field_slice(const std::map<ModeKey, SimReport<double>>& reports,
                       const RunConfig<double>& cfg, double radius,
                       const std::string& time_tag, const fs::path& dir) {
  const RadialGrid<double> grid{cfg.grid_points};
  Index kk = 0;
  double best = 2;
  for (Index k = 0; k < grid.m_points; ++k)
    if (std::abs(grid.node(k) - radius) < best) {
      best = std::abs(grid.node(k) - radius);
      kk = k;
    }
  ModeSet<double> snap;
  snap.n = cfg.n;
  snap.band_limit = cfg.band_limit;
  for (const auto& [key, rep] : reports) snap.coeffs[key] = rep.final_state[kk];
  const auto angular = make_angular_grid<double>(cfg.n, cfg.band_limit);
  const auto vals = synthesize(snap, angular);
  fs::create_directories(dir);
  char rtag[32];
  std::snprintf(rtag, sizeof(rtag), "%g", grid.node(kk));
  write_text_file(dir / ("field_" + time_tag + "_r" + rtag + ".csv"),
                  field_slice_to_csv(vals, angular));
}

int cmd_modeplan(const CommonArgs& args) {
  const auto cfg = load_run_config(args.config_path);
  const auto plan = make_mode_plan(cfg.lambda_even, cfg.c, cfg.epsilon, cfg.n);
  fs::create_directories(args.out_dir);
  write_text_file(fs::path(args.out_dir) / "modeplan.json",
                  modeplan_to_json(plan).dump(2) + "\n");
  std::cout << "cutoff degree: " << plan.L_cutoff << "\n"
            << "controlled degrees: 0.." << plan.L_cutoff - 1 << "\n"
            << "predicted squared-norm decay rate: " << plan.predicted_D2
            << "\n";
  return 0;
}

int cmd_kernel(const CommonArgs& args) {
  const auto cfg = load_run_config(args.config_path);
  const auto plan = make_mode_plan(cfg.lambda_even, cfg.c, cfg.epsilon, cfg.n);
  const auto q = reaction_series(cfg.lambda_even, cfg.c, cfg.epsilon);
  const fs::path dir = fs::path(args.out_dir) / "kernels";
  fs::create_directories(dir);

  json residuals = json::array();
  bool ok = true;
  auto kernels = solve_controlled_kernels(cfg, plan);
  for (const auto& [l, k] : kernels) {
    write_kernel_json(k, dir / ("kernel_l" + std::to_string(l) + ".json"));
    const auto rr = pde_residual(k, q);
    const double scale = std::max(1.0, kernel_scale(k));
    const double rel = rr.max_pde_residual / scale;
    const bool pass = rel <= cfg.tolerance &&
                      rr.max_boundary_residual <= cfg.tolerance;
    ok = ok && pass;
    json entry = residual_to_json(rr);
    entry["l"] = l;
    entry["relative_pde_residual"] = rel;
    entry["pass"] = pass;
    residuals.push_back(entry);
    std::cout << "l=" << l << "  pde residual " << rr.max_pde_residual
              << " (relative " << rel << "), boundary residual "
              << rr.max_boundary_residual << (pass ? "" : "  [EXCEEDS TOLERANCE]")
              << "\n";
  }
  json top;
  top["tolerance"] = cfg.tolerance;
  top["order"] = cfg.order;
  top["per_degree"] = residuals;
  write_text_file(dir / "residuals.json", top.dump(2) + "\n");
  std::cout << kernels.size() << " kernel files in " << dir.string() << "\n";
  if (!ok) throw NumericalError("kernel residuals exceed configured tolerance");
  return 0;
}

int cmd_simulate(const CommonArgs& args) {
  const auto cfg = load_run_config(args.config_path);
  const auto plan = make_mode_plan(cfg.lambda_even, cfg.c, cfg.epsilon, cfg.n);
  const RadialGrid<double> grid{cfg.grid_points};
  const fs::path dir = args.out_dir;
  fs::create_directories(dir);

  std::map<ModeKey, ModeState<double>> init;
  if (cfg.initial_kind == InitialKind::uniform_band) {
    const auto field = make_uniform_band_field<double>(
        args.seed, cfg.n, cfg.band_limit, cfg.initial_lo, cfg.initial_hi);
    init = field.states(grid);
  } else {
    init = zero_states(cfg.n, cfg.band_limit, grid);
  }

  std::map<ModeKey, ModeState<double>> init_obs;
  if (cfg.loop == LoopMode::output_feedback) {
    const auto noise =
        make_gaussian_field<double>(args.seed, cfg.n, cfg.band_limit,
                                    cfg.noise_sigma2);
    for (const auto& [key, st] : init) {
      ModeState<double> ob = st;
      ob.values -= noise.mode_state(key, grid).values;
      init_obs.emplace(key, ob);
    }
  }

  std::map<Index, KernelCoefficients<double>> kernels;
  if (cfg.loop == LoopMode::full_state || cfg.loop == LoopMode::output_feedback)
    kernels = solve_controlled_kernels(cfg, plan);

  const auto reports =
      simulate(sim_config(cfg), kernels, plan, init, init_obs, args.threads);

  write_text_file(dir / "modeplan.json", modeplan_to_json(plan).dump(2) + "\n");
  write_mean_series(reports, dir, cfg.loop == LoopMode::output_feedback);
  if (cfg.write_trajectories) write_trajectories(reports, dir / "traj");
  if (cfg.write_fields) {
    write_field_slice(reports, cfg, 0.5, "tend", dir / "fields");
    write_field_slice(reports, cfg, 1.0, "tend", dir / "fields");
  }

  json summary;
  summary["config"] = problem_echo(cfg, args.seed);
  summary["modeplan"] = modeplan_to_json(plan);
  summary["modes"] = report_summary_json(reports);
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");

  const auto [times, means] = mean_norm_series(reports, false);
  std::cout << reports.size() << " modes, loop " << to_string(cfg.loop)
            << ": mean norm " << means[0] << " -> " << means[means.size() - 1]
            << " over t=[0," << cfg.t_end << "]\n"
            << "artifacts in " << dir.string() << "\n";
  return 0;
}

int cmd_reproduce(const CommonArgs& args) {
  RunConfig<double> cfg = reference_config();
  const fs::path dir = args.out_dir;
  fs::create_directories(dir);
  const RadialGrid<double> grid{cfg.grid_points};

  // mode plan and kernels
  const auto plan = make_mode_plan(cfg.lambda_even, cfg.c, cfg.epsilon, cfg.n);
  std::cout << "mode plan: cutoff degree " << plan.L_cutoff << "\n";
  write_text_file(dir / "modeplan.json", modeplan_to_json(plan).dump(2) + "\n");
  const auto q = reaction_series(cfg.lambda_even, cfg.c, cfg.epsilon);
  const auto kernels = solve_controlled_kernels(cfg, plan);
  const fs::path kdir = dir / "kernels";
  fs::create_directories(kdir);
  json residuals = json::array();
  for (const auto& [l, k] : kernels) {
    write_kernel_json(k, kdir / ("kernel_l" + std::to_string(l) + ".json"));
    json entry = residual_to_json(pde_residual(k, q));
    entry["l"] = l;
    residuals.push_back(entry);
  }
  write_text_file(kdir / "residuals.json", residuals.dump(2) + "\n");
  std::cout << kernels.size() << " kernels solved (order " << cfg.order << ")\n";

  // gain tables for the first six degrees
  const fs::path gdir = dir / "gains";
  fs::create_directories(gdir);
  for (Index l = 0; l <= 5 && l < plan.L_cutoff; ++l) {
    const auto& k = kernels.at(l);
    const auto ctrl = control_gain(k, grid.nodes());
    const auto obs = observer_gain(k, cfg.epsilon, grid.nodes());
    write_gain_csv(ctrl, gdir / ("control_l" + std::to_string(l) + ".csv"),
                   gdir / ("control_l" + std::to_string(l) + ".meta.json"));
    write_gain_csv(obs, gdir / ("observer_l" + std::to_string(l) + ".csv"),
                   gdir / ("observer_l" + std::to_string(l) + ".meta.json"));
  }
  std::cout << "gain tables for degrees 0..5 written\n";

  // shared random data
  const auto field = make_uniform_band_field<double>(
      args.seed, cfg.n, cfg.band_limit, cfg.initial_lo, cfg.initial_hi);
  const auto init = field.states(grid);
  const auto noise = make_gaussian_field<double>(args.seed, cfg.n,
                                                 cfg.band_limit,
                                                 cfg.noise_sigma2);
  std::map<ModeKey, ModeState<double>> init_obs;
  for (const auto& [key, st] : init) {
    ModeState<double> ob = st;
    ob.values -= noise.mode_state(key, grid).values;
    init_obs.emplace(key, ob);
  }

  // open loop over a short horizon
  RunConfig<double> open_cfg = cfg;
  open_cfg.loop = LoopMode::open;
  open_cfg.t_end = 0.2;
  const auto open_reports = simulate(sim_config(open_cfg), {}, plan, init, {},
                                     args.threads);
  const fs::path odir = dir / "open";
  fs::create_directories(odir);
  write_mean_series(open_reports, odir, false);
  write_trajectories(open_reports, odir / "traj");
  {
    const auto [t, v] = mean_norm_series(open_reports, false);
    std::cout << "open loop: mean norm " << v[0] << " -> " << v[v.size() - 1]
              << " at t=0.2\n";
  }

  // output feedback over the full horizon
  const auto fb_reports = simulate(sim_config(cfg), kernels, plan, init,
                                   init_obs, args.threads);
  const fs::path fdir = dir / "feedback";
  fs::create_directories(fdir);
  write_mean_series(fb_reports, fdir, true);
  write_trajectories(fb_reports, fdir / "traj");
  write_control_effort(fb_reports, cfg.n, {M_PI / 4, 3 * M_PI / 8},
                       fdir / "control_effort.csv");
  write_field_slice(fb_reports, cfg, 0.5, "tend", dir / "fields");
  write_field_slice(fb_reports, cfg, 1.0, "tend", dir / "fields");
  {
    const auto [t, v] = mean_norm_series(fb_reports, false);
    const auto [te, e] = mean_norm_series(fb_reports, true);
    std::cout << "output feedback: mean norm " << v[0] << " -> "
              << v[v.size() - 1] << ", observer error " << e[0] << " -> "
              << e[e.size() - 1] << " at t=" << cfg.t_end << "\n";
  }

  json summary;
  summary["seed"] = args.seed;
  summary["config"] = problem_echo(cfg, args.seed);
  summary["modeplan"] = modeplan_to_json(plan);
  summary["open_loop_modes"] = report_summary_json(open_reports);
  summary["feedback_modes"] = report_summary_json(fb_reports);
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << "artifacts in " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Boundary-control gain synthesis and closed-loop simulation for "
      "radially varying reaction-diffusion equations on balls"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config)
      sub->add_option("--config", args.config_path, "JSON configuration file")
          ->required()
          ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--seed", args.seed, "RNG seed for random fields");
    sub->add_option("--threads", args.threads, "worker threads for simulation")
        ->check(CLI::PositiveNumber);
  };

  auto* plan_cmd =
      app.add_subcommand("modeplan", "degree cutoff and predicted decay rate");
  add_common(plan_cmd, true);
  auto* kernel_cmd = app.add_subcommand(
      "kernel", "solve gain kernels for all controlled degrees");
  add_common(kernel_cmd, true);
  auto* sim_cmd = app.add_subcommand(
      "simulate", "run the configured loop for all modes up to the band limit");
  add_common(sim_cmd, true);
  auto* repro_cmd = app.add_subcommand(
      "reproduce-paper",
      "run the built-in reference experiment end to end");
  add_common(repro_cmd, false);

  try {
    app.parse(argc, argv);
    if (plan_cmd->parsed()) return cmd_modeplan(args);
    if (kernel_cmd->parsed()) return cmd_kernel(args);
    if (sim_cmd->parsed()) return cmd_simulate(args);
    if (repro_cmd->parsed()) return cmd_reproduce(args);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
