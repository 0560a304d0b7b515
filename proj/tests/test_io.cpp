#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <unistd.h>

#include "rdball/io.hpp"

using namespace rdball;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rdball_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

KernelCoefficients<double> sample_kernel() {
  EvenPowerSeries<double> q;
  q.coeffs.resize(3);
  q.coeffs << 53, 50, 10;
  return solve_kernel(q, 3, 2, 12);
}

}  // namespace

TEST_CASE("kernel JSON round trip is bit exact through text") {
  const auto k = sample_kernel();
  const auto restored =
      kernel_from_json<double>(json::parse(kernel_to_json(k).dump()));
  CHECK(restored.n == k.n);
  CHECK(restored.l == k.l);
  CHECK(restored.gamma_prime == k.gamma_prime);
  REQUIRE(restored.order() == k.order());
  for (Index i = 0; i <= k.order(); ++i)
    for (Index j = 0; j <= i; ++j) CHECK(restored.rows[i][j] == k.rows[i][j]);
}

TEST_CASE("kernel JSON file round trip") {
  TempDir tmp;
  const auto k = sample_kernel();
  const auto path = tmp.path / "k.json";
  write_kernel_json(k, path);
  const auto restored = read_kernel_json<double>(path);
  for (Index i = 0; i <= k.order(); ++i)
    for (Index j = 0; j <= i; ++j) CHECK(restored.rows[i][j] == k.rows[i][j]);

  write_text_file(path, "{\"n\": 3}");
  CHECK_THROWS_AS(read_kernel_json<double>(path), ValidationError);
  write_text_file(path, "not json");
  CHECK_THROWS_AS(read_kernel_json<double>(path), ValidationError);
}

TEST_CASE("gain CSV with sidecar round trips bit exactly") {
  TempDir tmp;
  const auto k = sample_kernel();
  RadialGrid<double> grid{64};
  const auto g = observer_gain(k, 1.5, grid.nodes());
  const auto csv = tmp.path / "g.csv";
  const auto meta = tmp.path / "g.meta.json";
  write_gain_csv(g, csv, meta);
  const auto r = read_gain_csv<double>(csv, meta);
  CHECK(r.kind == g.kind);
  CHECK(r.n == g.n);
  CHECK(r.l == g.l);
  CHECK(r.epsilon == g.epsilon);
  CHECK(r.order == g.order);
  REQUIRE(r.nodes.size() == g.nodes.size());
  for (Index i = 0; i < g.nodes.size(); ++i) {
    CHECK(r.nodes[i] == g.nodes[i]);
    CHECK(r.weights[i] == g.weights[i]);
    CHECK(r.values[i] == g.values[i]);
  }
}

TEST_CASE("17-significant-digit formatting round trips binary64") {
  for (double x : {1.0 / 3, M_PI, 1e-300, -6.02e23, 0.1, 215.0 / 6}) {
    const double back = std::strtod(format_float(x).c_str(), nullptr);
    CHECK(back == x);
  }
}

TEST_CASE("trajectory CSV carries the observer column only when present") {
  SimReport<double> rep;
  rep.times = {0.0, 0.1};
  rep.l2_norms = {1.0, 0.5};
  rep.control_signal = {{-2.0, 0.25}, {-1.0, 0.125}};
  const auto csv = trajectory_to_csv(rep);
  CHECK(csv.rfind("time,l2_norm,control_re,control_im\n", 0) == 0);
  rep.observer_error_norms = {0.3, 0.2};
  const auto csv2 = trajectory_to_csv(rep);
  CHECK(csv2.rfind("time,l2_norm,control_re,control_im,observer_error\n", 0) ==
        0);
  CHECK(csv2.find("0.29999999999999999") != std::string::npos);
}

TEST_CASE("run configuration parsing applies defaults and checks ranges") {
  json doc;
  doc["problem"] = {{"epsilon", 1.0},
                    {"c", 3.0},
                    {"lambda_even_coeffs", {50.0, 50.0, 10.0}}};
  const auto cfg = parse_run_config(doc);
  CHECK(cfg.n == 3);
  CHECK(cfg.order == 15);
  CHECK(cfg.grid_points == 200);
  CHECK(cfg.loop == LoopMode::output_feedback);
  CHECK(cfg.lambda_even.coeffs.size() == 3);

  json bad = doc;
  bad["problem"].erase("lambda_even_coeffs");
  CHECK_THROWS_AS(parse_run_config(bad), ValidationError);

  bad = doc;
  bad["problem"]["epsilon"] = 0.0;
  CHECK_THROWS_AS(parse_run_config(bad), ValidationError);

  bad = doc;
  bad["sim"] = {{"dt", -1.0}};
  CHECK_THROWS_AS(parse_run_config(bad), ValidationError);

  bad = doc;
  bad["sim"] = {{"loop", "resonant"}};
  CHECK_THROWS_AS(parse_run_config(bad), ValidationError);
}

TEST_CASE("raw mixed-parity reaction input is folded or rejected") {
  json doc;
  doc["problem"] = {{"epsilon", 1.0},
                    {"lambda_coeffs", {50.0, 0.0, 50.0, 0.0, 10.0}}};
  const auto cfg = parse_run_config(doc);
  REQUIRE(cfg.lambda_even.coeffs.size() == 3);
  CHECK(cfg.lambda_even.coeffs[1] == 50.0);

  doc["problem"]["lambda_coeffs"] = {1.0, 0.1};
  CHECK_THROWS_AS(parse_run_config(doc), EvennessViolation);
}

TEST_CASE("problems on a ball of radius R are rescaled to the unit ball") {
  json doc;
  doc["problem"] = {{"R", 2.0},
                    {"epsilon", 4.0},
                    {"c", 3.0},
                    {"lambda_even_coeffs", {50.0, 50.0, 10.0}}};
  const auto cfg = parse_run_config(doc);
  CHECK(cfg.R == 1.0);
  CHECK(cfg.epsilon == doctest::Approx(1.0));
  CHECK(cfg.lambda_even.coeffs[0] == doctest::Approx(50.0));
  CHECK(cfg.lambda_even.coeffs[1] == doctest::Approx(200.0));
  CHECK(cfg.lambda_even.coeffs[2] == doctest::Approx(160.0));
}

TEST_CASE("loop-mode names round trip") {
  for (LoopMode m : {LoopMode::open, LoopMode::full_state,
                     LoopMode::output_feedback, LoopMode::target})
    CHECK(loop_mode_from_string(to_string(m)) == m);
  CHECK(loop_mode_from_string("output-feedback") == LoopMode::output_feedback);
}

TEST_CASE("config file loading distinguishes parse and schema errors") {
  TempDir tmp;
  const auto path = tmp.path / "cfg.json";
  write_text_file(path, "{ not json");
  CHECK_THROWS_AS(load_run_config(path), ValidationError);
  write_text_file(path, "{\"problem\": {\"epsilon\": 1.0}}");
  CHECK_THROWS_AS(load_run_config(path), ValidationError);
  write_text_file(path,
                  "{\"problem\": {\"epsilon\": 1.0, "
                  "\"lambda_even_coeffs\": [1.0]}}");
  CHECK_NOTHROW(load_run_config(path));
}
