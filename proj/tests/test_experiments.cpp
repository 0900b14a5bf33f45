#include "fracext/experiments.hpp"
#include "fracext/sparse.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

using namespace fracext;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string slurp(const std::string &path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string &tag) {
  const fs::path p = fs::temp_directory_path() / ("fracext_test_" + tag);
  fs::remove_all(p);
  return p;
}

} // namespace

TEST_CASE("fit_rate recovers exact power laws") {
  std::vector<double> x, y;
  for (double n : {10.0, 100.0, 1000.0, 1e4})
    x.push_back(n), y.push_back(3.0 * std::pow(n, -1.0 / 3.0));
  const RateFit f = fit_rate(x, y);
  CHECK(f.slope == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.residual < 1e-12);
  CHECK_FALSE(f.log_corrected);

  // y = N^{-1/2} |log N|^s: the corrected fit removes the log factor exactly
  const double s = 0.8;
  std::vector<double> yl;
  for (double n : x)
    yl.push_back(std::pow(n, -0.5) * std::pow(std::log(n), s));
  const RateFit raw = fit_rate(x, yl);
  const RateFit corr = fit_rate(x, yl, true, s);
  CHECK(corr.log_corrected);
  CHECK(corr.slope == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(raw.slope > -0.5 + 0.05);
}

TEST_CASE("fit_rate under 1% multiplicative noise stays within 0.02") {
  std::mt19937 gen(7);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x, y;
    for (int k = 0; k < 6; ++k) {
      const double n = 100.0 * std::pow(4.0, k);
      x.push_back(n);
      y.push_back(std::pow(n, -0.5) * (1.0 + noise(gen)));
    }
    CHECK(std::abs(fit_rate(x, y).slope + 0.5) < 0.02);
  }
}

TEST_CASE("fit_rate rejects degenerate input") {
  CHECK_THROWS_AS(fit_rate({1.0, 2.0}, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(fit_rate({1.0, 2.0, 3.0}, {1.0, 0.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(fit_rate({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}), InvalidArgument);
  CHECK_THROWS_AS(fit_rate({0.5, 2.0, 3.0}, {1.0, 2.0, 3.0}, true, 0.5), InvalidArgument);
  CHECK_THROWS_AS(fit_rate({1.0, 2.0, 3.0}, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("fit_line") {
  const LineFit f = fit_line({1, 2, 3, 4, 5}, {3, 5, 7, 9, 11});
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.relative_residual < 1e-14);
  // one outlier of +1 on y = 2: residual measured relative to |y|
  const LineFit g = fit_line({0, 1, 2}, {2, 3, 2});
  CHECK(g.slope == doctest::Approx(0.0));
  CHECK(g.relative_residual == doctest::Approx(2.0 / 9.0));
  CHECK_THROWS_AS(fit_line({1.0}, {1.0}), InvalidArgument);
}

TEST_CASE("format_double round-trips") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 200; ++i) {
    const double v = std::ldexp(u(gen), static_cast<int>(u(gen)));
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("spectral data pairings") {
  for (double s : {0.2, 0.5, 0.8}) {
    const SpectralData d1 = make_spectral_data(DataKind::eig1, 1, s, 64);
    CHECK(d1.fu == doctest::Approx(std::pow(kPi, 2 * s) / 2).epsilon(1e-13));
    CHECK(d1.f_fn(0.25, 0.0) == doctest::Approx(std::pow(kPi, 2 * s) * std::sin(kPi / 4)));
    const SpectralData d2 = make_spectral_data(DataKind::eig1, 2, s, 16);
    CHECK(d2.fu == doctest::Approx(std::pow(2 * kPi * kPi, s) / 4).epsilon(1e-13));
  }
  // f = sqrt(2) sin(2 pi x): fu = λ_2^{-s}
  const SpectralData c = make_spectral_data(DataKind::custom_sine, 1, 0.4, 32, {0.0, 1.0});
  CHECK(c.fu == doctest::Approx(std::pow(4 * kPi * kPi, -0.4)).epsilon(1e-13));
  CHECK_THROWS_AS(make_spectral_data(DataKind::custom_sine, 2, 0.4, 32, {1.0}), InvalidArgument);
  // constant one: pairing plus tail equals the full series, stable in the cutoff
  const SpectralData a = make_spectral_data(DataKind::constant_one, 1, 0.5, 1 << 10);
  const SpectralData b = make_spectral_data(DataKind::constant_one, 1, 0.5, 1 << 14);
  CHECK(a.fu == doctest::Approx(b.fu).epsilon(1e-7));
}

TEST_CASE("contraction: one level is exact, several stay below one") {
  HierarchyOptions o;
  o.coarse_cells = 4;
  o.coarse_levels = 4;
  o.refinements = 0;
  o.alpha = 0.0;
  const MeshHierarchy h(o);
  CHECK(vcycle_contraction(h, CycleOptions{}) < 1e-10);

  o.coarse_cells = 2;
  o.coarse_levels = 2;
  o.refinements = 3;
  o.grading = default_grading(0.5);
  const MeshHierarchy h3(o);
  const double d = vcycle_contraction(h3, CycleOptions{});
  CHECK(d > 0.0);
  CHECK(d < 1.0);
}

TEST_CASE("parse_config validation") {
  const ExperimentConfig c = parse_config(R"({"kind":"elliptic","n":1,"s":0.3,"ladder":[4,8],"grading":"uniform"})");
  CHECK(c.kind == ExperimentKind::elliptic);
  CHECK_FALSE(c.graded);
  CHECK(c.s_values == std::vector<double>{0.3});
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"elliptic","ladder":[4],"bogus":1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"elliptic","ladder":[4],"s":1.0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"elliptic","ladder":[4],"s":"x"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"elliptic","ladder":[8,4]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"afem","theta":0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"afem","n":2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"parabolic","gamma":1.5,"time_steps":[4]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"parabolic","time_steps":[4],"forcing_amplitude":1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"swim"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"mg-bench","ladder":[4,8],"s_values":[0.3],"reference_iterations":[[1]]})"),
                  ConfigError);
}

TEST_CASE("elliptic experiment writes csv and summary, reruns byte-identical") {
  const int threads = kernels::max_threads();
  kernels::set_threads(1);
  const ExperimentConfig c =
      parse_config(R"({"kind":"elliptic","n":1,"s":0.5,"ladder":[4,8,16],"expected_slope":-0.5,"slope_tol":0.2})");
  const fs::path d1 = scratch_dir("ell1"), d2 = scratch_dir("ell2");
  const ExperimentOutcome a = run_experiment(c, d1.string(), 11);
  const ExperimentOutcome b = run_experiment(c, d2.string(), 11);
  kernels::set_threads(threads);
  REQUIRE(a.exit_code == 0);
  REQUIRE(a.csv_files.size() == 1);
  const std::string csv = slurp(a.csv_files[0]);
  CHECK(csv.rfind("dofs,h_base,M,Y,energy_err,hs_trace_err,est_total\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv == slurp(b.csv_files[0]));
  CHECK(slurp(a.summary_file) == slurp(b.summary_file));
  const std::string summary = slurp(a.summary_file);
  CHECK(summary.find("\"seed\": 11") != std::string::npos);
  CHECK(summary.find("\"pass\": true") != std::string::npos);
  REQUIRE(a.slope);
  CHECK(*a.slope < 0.0);
}

TEST_CASE("experiment exit codes") {
  const fs::path d = scratch_dir("codes");
  ExperimentConfig bad = parse_config(R"({"kind":"elliptic","ladder":[4,8,16],"expected_slope":5.0})");
  const ExperimentOutcome fail = run_experiment(bad, d.string());
  CHECK(fail.exit_code == 1);
  CHECK_FALSE(fail.pass);
  CHECK(slurp(fail.summary_file).find("\"pass\": false") != std::string::npos);

  ExperimentConfig par = parse_config(R"({"kind":"parabolic","time_steps":[4],"data":"constant-one"})");
  CHECK(run_experiment(par, d.string()).exit_code == 2);

  ExperimentConfig odd = parse_config(R"({"kind":"mg-bench","ladder":[6]})");
  CHECK(run_experiment(odd, d.string()).exit_code == 2);
}

TEST_CASE("parabolic experiment: stability recorded, self errors shrink") {
  const fs::path d = scratch_dir("par");
  const ExperimentConfig c = parse_config(
      R"({"kind":"parabolic","s":0.5,"gamma":1.0,"time_steps":[4,8,16,32],"refinements":2,"time_error":"self",
          "forcing_amplitude":0.5,"forcing_mode":2,"expected_slope":1.0,"slope_tol":0.25})");
  const ExperimentOutcome o = run_experiment(c, d.string());
  CHECK(o.exit_code == 0);
  CHECK(o.csv_files.size() == 4);
  const std::string first = slurp(o.csv_files[0]);
  CHECK(first.rfind("step,t,trace_l2,energy,ledger\n", 0) == 0);
  CHECK(std::count(first.begin(), first.end(), '\n') == 5);
  CHECK(slurp(o.summary_file).find("\"stability_holds\": true") != std::string::npos);
}
