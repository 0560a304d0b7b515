#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rdball/errors.hpp"
#include "rdball/gains.hpp"
#include "rdball/harmonics.hpp"
#include "rdball/kernel.hpp"
#include "rdball/modes.hpp"
#include "rdball/series.hpp"
#include "rdball/sim.hpp"
#include "rdball/types.hpp"

namespace rdball {

using nlohmann::json;

/// 17 significant digits: enough for binary64 round trips in text artifacts.
inline std::string format_float(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// kernel coefficients <-> JSON

template <typename Scalar>
json kernel_to_json(const KernelCoefficients<Scalar>& k) {
  json j;
  j["n"] = k.n;
  j["l"] = k.l;
  j["gamma_prime"] = static_cast<double>(k.gamma_prime);
  j["order"] = k.order();
  std::vector<double> flat;
  for (const auto& row : k.rows)
    for (Index c = 0; c < row.size(); ++c) flat.push_back(static_cast<double>(row[c]));
  j["C"] = flat;
  return j;
}

template <typename Scalar = double>
KernelCoefficients<Scalar> kernel_from_json(const json& j) {
  KernelCoefficients<Scalar> k;
  k.n = j.at("n").get<Index>();
  k.l = j.at("l").get<Index>();
  k.gamma_prime = static_cast<Scalar>(j.at("gamma_prime").get<double>());
  const Index order = j.at("order").get<Index>();
  const auto flat = j.at("C").get<std::vector<double>>();
  const Index expect = (order + 1) * (order + 2) / 2;
  if (static_cast<Index>(flat.size()) != expect)
    throw ValidationError("kernel JSON: C length does not match order");
  k.rows.resize(order + 1);
  Index pos = 0;
  for (Index i = 0; i <= order; ++i) {
    k.rows[i].resize(i + 1);
    for (Index c = 0; c <= i; ++c) k.rows[i][c] = static_cast<Scalar>(flat[pos++]);
  }
  return k;
}

template <typename Scalar>
void write_kernel_json(const KernelCoefficients<Scalar>& k,
                       const std::filesystem::path& path) {
  write_text_file(path, kernel_to_json(k).dump(2) + "\n");
}

template <typename Scalar = double>
KernelCoefficients<Scalar> read_kernel_json(const std::filesystem::path& path) {
  try {
    return kernel_from_json<Scalar>(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("kernel JSON parse: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// gain tables <-> CSV (+ JSON sidecar)

template <typename Scalar>
std::string gain_to_csv(const GainTable<Scalar>& g) {
  std::string out = "node,weight,value\n";
  for (Index i = 0; i < g.nodes.size(); ++i) {
    out += format_float(static_cast<double>(g.nodes[i]));
    out += ',';
    out += format_float(static_cast<double>(g.weights[i]));
    out += ',';
    out += format_float(static_cast<double>(g.values[i]));
    out += '\n';
  }
  return out;
}

template <typename Scalar>
json gain_sidecar_json(const GainTable<Scalar>& g) {
  json j;
  j["kind"] = g.kind == GainKind::control ? "control" : "observer";
  j["n"] = g.n;
  j["l"] = g.l;
  j["epsilon"] = static_cast<double>(g.epsilon);
  j["order"] = g.order;
  return j;
}

template <typename Scalar>
void write_gain_csv(const GainTable<Scalar>& g, const std::filesystem::path& csv,
                    const std::filesystem::path& sidecar) {
  write_text_file(csv, gain_to_csv(g));
  write_text_file(sidecar, gain_sidecar_json(g).dump(2) + "\n");
}

template <typename Scalar = double>
GainTable<Scalar> read_gain_csv(const std::filesystem::path& csv,
                                const std::filesystem::path& sidecar) {
  GainTable<Scalar> g;
  json meta;
  try {
    meta = json::parse(read_text_file(sidecar));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("gain sidecar parse: ") + e.what());
  }
  const std::string kind = meta.at("kind").get<std::string>();
  if (kind == "control")
    g.kind = GainKind::control;
  else if (kind == "observer")
    g.kind = GainKind::observer;
  else
    throw ValidationError("gain sidecar: unknown kind '" + kind + "'");
  g.n = meta.at("n").get<Index>();
  g.l = meta.at("l").get<Index>();
  g.epsilon = static_cast<Scalar>(meta.at("epsilon").get<double>());
  g.order = meta.at("order").get<Index>();

  std::istringstream in(read_text_file(csv));
  std::string line;
  if (!std::getline(in, line) || line != "node,weight,value")
    throw ValidationError("gain CSV: bad header");
  std::vector<Scalar> nodes, weights, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double a, b, c;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
      throw ValidationError("gain CSV: bad row '" + line + "'");
    nodes.push_back(static_cast<Scalar>(a));
    weights.push_back(static_cast<Scalar>(b));
    values.push_back(static_cast<Scalar>(c));
  }
  const Index m = static_cast<Index>(nodes.size());
  g.nodes = Eigen::Map<const Vector<Scalar>>(nodes.data(), m);
  g.weights = Eigen::Map<const Vector<Scalar>>(weights.data(), m);
  g.values = Eigen::Map<const Vector<Scalar>>(values.data(), m);
  return g;
}

// ---------------------------------------------------------------------------
// trajectories, norm series, field slices

template <typename Scalar>
std::string trajectory_to_csv(const SimReport<Scalar>& rep) {
  const bool with_err = !rep.observer_error_norms.empty();
  std::string out = "time,l2_norm,control_re,control_im";
  if (with_err) out += ",observer_error";
  out += '\n';
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    out += format_float(static_cast<double>(rep.times[i]));
    out += ',';
    out += format_float(static_cast<double>(rep.l2_norms[i]));
    out += ',';
    out += format_float(static_cast<double>(rep.control_signal[i].real()));
    out += ',';
    out += format_float(static_cast<double>(rep.control_signal[i].imag()));
    if (with_err) {
      out += ',';
      out += format_float(static_cast<double>(rep.observer_error_norms[i]));
    }
    out += '\n';
  }
  return out;
}

template <typename Scalar>
std::string norm_series_to_csv(const std::vector<Scalar>& times,
                               const std::vector<Scalar>& values,
                               const std::string& value_name) {
  std::string out = "time," + value_name + "\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    out += format_float(static_cast<double>(times[i]));
    out += ',';
    out += format_float(static_cast<double>(values[i]));
    out += '\n';
  }
  return out;
}

/// Field snapshot on an angular grid at one radius: rows theta1, cols theta2.
template <typename Scalar>
std::string field_slice_to_csv(const Matrix<std::complex<Scalar>>& field,
                               const AngularGrid<Scalar>& grid) {
  std::string out = "theta1,theta2,value\n";
  for (Index i = 0; i < field.rows(); ++i)
    for (Index q = 0; q < field.cols(); ++q) {
      const double t1 =
          grid.n == 3 ? static_cast<double>(grid.theta1[i]) : 0.0;
      out += format_float(t1);
      out += ',';
      out += format_float(static_cast<double>(grid.theta2[q]));
      out += ',';
      out += format_float(static_cast<double>(field(i, q).real()));
      out += '\n';
    }
  return out;
}

template <typename Scalar>
json modeplan_to_json(const ModePlan<Scalar>& plan) {
  json j;
  j["L_cutoff"] = plan.L_cutoff;
  j["controlled_degrees"] = plan.controlled_degrees;
  j["predicted_decay_rate"] = static_cast<double>(plan.predicted_D2);
  return j;
}

template <typename Scalar>
json residual_to_json(const ResidualReport<Scalar>& rr) {
  json j;
  j["max_pde_residual"] = static_cast<double>(rr.max_pde_residual);
  j["max_boundary_residual"] = static_cast<double>(rr.max_boundary_residual);
  std::vector<double> per;
  for (Index i = 0; i < rr.per_degree.size(); ++i)
    per.push_back(static_cast<double>(rr.per_degree[i]));
  j["per_degree"] = per;
  return j;
}

// ---------------------------------------------------------------------------
// run configuration

enum class InitialKind { uniform_band, zero };

template <typename Scalar>
struct RunConfig {
  // problem, rescaled to the unit ball on load
  Index n = 3;
  Scalar R = 1;
  Scalar epsilon = 1;
  Scalar c = 0;
  EvenPowerSeries<Scalar> lambda_even;
  // solver
  Index order = 15;
  Index max_order = 256;
  Scalar tolerance = Scalar(1e-2);
  // sim
  Index grid_points = 200;
  Scalar dt = Scalar(1e-4);
  Scalar t_end = 1;
  Index record_every = 10;
  Index band_limit = 10;
  LoopMode loop = LoopMode::output_feedback;
  InitialKind initial_kind = InitialKind::uniform_band;
  Scalar initial_lo = 0;
  Scalar initial_hi = 10;
  Scalar noise_sigma2 = Scalar(0.5);
  // output
  std::string directory = "out";
  bool write_trajectories = true;
  bool write_fields = false;
};

inline LoopMode loop_mode_from_string(const std::string& s) {
  if (s == "open") return LoopMode::open;
  if (s == "full_state" || s == "full-state") return LoopMode::full_state;
  if (s == "output_feedback" || s == "output-feedback")
    return LoopMode::output_feedback;
  if (s == "target") return LoopMode::target;
  throw ValidationError("unknown loop mode '" + s + "'");
}

inline std::string to_string(LoopMode loop) {
  switch (loop) {
    case LoopMode::open: return "open";
    case LoopMode::full_state: return "full_state";
    case LoopMode::output_feedback: return "output_feedback";
    case LoopMode::target: return "target";
  }
  return "?";
}

namespace detail {

template <typename Scalar>
Vector<Scalar> json_to_vector(const json& arr) {
  if (!arr.is_array()) throw ValidationError("expected a numeric array");
  Vector<Scalar> v(arr.size());
  Index i = 0;
  for (const auto& x : arr) v[i++] = static_cast<Scalar>(x.get<double>());
  return v;
}

}  // namespace detail

/// Parse and validate a configuration document; problems on a ball of radius
/// R are rescaled to the unit ball (epsilon / R^2, lambda_i * R^(2i)) so the
/// rest of the library only ever sees r in [0, 1].
template <typename Scalar = double>
RunConfig<Scalar> parse_run_config(const json& doc) {
  RunConfig<Scalar> cfg;
  try {
    const json& prob = doc.at("problem");
    cfg.n = prob.value("n", 3);
    cfg.R = static_cast<Scalar>(prob.value("R", 1.0));
    cfg.epsilon = static_cast<Scalar>(prob.at("epsilon").get<double>());
    cfg.c = static_cast<Scalar>(prob.value("c", 0.0));
    if (prob.contains("lambda_even_coeffs")) {
      cfg.lambda_even.coeffs =
          detail::json_to_vector<Scalar>(prob.at("lambda_even_coeffs"));
    } else if (prob.contains("lambda_coeffs")) {
      RawSeries<Scalar> raw{detail::json_to_vector<Scalar>(prob.at("lambda_coeffs"))};
      cfg.lambda_even = validate_even(raw);
    } else {
      throw ValidationError(
          "problem: need lambda_even_coeffs or lambda_coeffs");
    }

    if (doc.contains("solver")) {
      const json& sol = doc.at("solver");
      cfg.order = sol.value("order", cfg.order);
      cfg.max_order = sol.value("max_order", cfg.max_order);
      cfg.tolerance = static_cast<Scalar>(
          sol.value("tolerance", static_cast<double>(cfg.tolerance)));
    }

    if (doc.contains("sim")) {
      const json& sim = doc.at("sim");
      cfg.grid_points = sim.value("grid_points", cfg.grid_points);
      cfg.dt = static_cast<Scalar>(sim.value("dt", static_cast<double>(cfg.dt)));
      cfg.t_end =
          static_cast<Scalar>(sim.value("t_end", static_cast<double>(cfg.t_end)));
      cfg.record_every = sim.value("record_every", cfg.record_every);
      cfg.band_limit = sim.value("band_limit", cfg.band_limit);
      if (sim.contains("loop"))
        cfg.loop = loop_mode_from_string(sim.at("loop").get<std::string>());
      if (sim.contains("initial")) {
        const json& ini = sim.at("initial");
        const std::string kind = ini.value("kind", "uniform_band");
        if (kind == "uniform_band") {
          cfg.initial_kind = InitialKind::uniform_band;
          cfg.initial_lo = static_cast<Scalar>(ini.value("lo", 0.0));
          cfg.initial_hi = static_cast<Scalar>(ini.value("hi", 10.0));
        } else if (kind == "zero") {
          cfg.initial_kind = InitialKind::zero;
        } else {
          throw ValidationError("unknown initial-condition kind '" + kind + "'");
        }
      }
      cfg.noise_sigma2 = static_cast<Scalar>(
          sim.value("noise_sigma2", static_cast<double>(cfg.noise_sigma2)));
    }

    if (doc.contains("output")) {
      const json& out = doc.at("output");
      cfg.directory = out.value("directory", cfg.directory);
      cfg.write_trajectories =
          out.value("write_trajectories", cfg.write_trajectories);
      cfg.write_fields = out.value("write_fields", cfg.write_fields);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  if (cfg.n < 2) throw ValidationError("problem.n must be >= 2");
  if (!(cfg.R > Scalar(0))) throw ValidationError("problem.R must be positive");
  if (!(cfg.epsilon > Scalar(0))) throw NonPositiveDiffusion(double(cfg.epsilon));
  if (cfg.c < Scalar(0)) throw ValidationError("problem.c must be nonnegative");
  if (cfg.order < 0 || cfg.order > cfg.max_order)
    throw ValidationError("solver.order must lie in [0, max_order]");
  if (cfg.grid_points < 3) throw ValidationError("sim.grid_points must be >= 3");
  if (!(cfg.dt > Scalar(0))) throw ValidationError("sim.dt must be positive");
  if (cfg.t_end < Scalar(0)) throw ValidationError("sim.t_end must be >= 0");
  if (cfg.record_every < 1)
    throw ValidationError("sim.record_every must be >= 1");
  if (cfg.band_limit < 0) throw ValidationError("sim.band_limit must be >= 0");
  if (cfg.noise_sigma2 < Scalar(0))
    throw ValidationError("sim.noise_sigma2 must be >= 0");
  if (!(cfg.initial_lo < cfg.initial_hi) &&
      cfg.initial_kind == InitialKind::uniform_band)
    throw ValidationError("sim.initial: need lo < hi");

  // rescale to the unit ball
  if (cfg.R != Scalar(1)) {
    cfg.epsilon /= cfg.R * cfg.R;
    Scalar pw = Scalar(1);
    for (Index i = 0; i < cfg.lambda_even.coeffs.size(); ++i) {
      cfg.lambda_even.coeffs[i] *= pw;
      pw *= cfg.R * cfg.R;
    }
    cfg.R = Scalar(1);
  }
  return cfg;
}

template <typename Scalar = double>
RunConfig<Scalar> load_run_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config parse: ") + e.what());
  }
  return parse_run_config<Scalar>(doc);
}

}  // namespace rdball
