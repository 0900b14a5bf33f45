#include "fracext/experiments.hpp"

#include "fracext/afem.hpp"
#include "fracext/assembly.hpp"
#include "fracext/caputo.hpp"
#include "fracext/special_functions.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

namespace fracext {

namespace {

constexpr double kPi = std::numbers::pi;

} // namespace

RateFit fit_rate(const std::vector<double> &x, const std::vector<double> &y, bool log_correct, double s) {
  detail::require(x.size() == y.size(), "fit_rate: x and y differ in length");
  detail::require(x.size() >= 3, "fit_rate: need at least three points");
  RateFit out{x, y};
  out.log_corrected = log_correct;
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    detail::require(x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i]),
                    "fit_rate: points must be positive and finite");
    double v = y[i];
    if (log_correct) {
      detail::require(x[i] > 1.0, "fit_rate: log correction needs x > 1");
      v /= std::pow(std::log(x[i]), s);
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(v);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  detail::require(sxx > 0.0, "fit_rate: x values coincide");
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (out.intercept + out.slope * lx[i]);
    rss += r * r;
  }
  out.residual = std::sqrt(rss / n);
  return out;
}

LineFit fit_line(const std::vector<double> &x, const std::vector<double> &y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "fit_line: need two or more points of equal length");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  detail::require(sxx > 0.0, "fit_line: x values coincide");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  for (std::size_t i = 0; i < n; ++i)
    out.relative_residual =
        std::max(out.relative_residual, std::abs(y[i] - out.intercept - out.slope * x[i]) / std::abs(y[i]));
  return out;
}

double vcycle_contraction(const MeshHierarchy &h, const CycleOptions &opts, int iterations) {
  const HierarchyLevel &fine = h.finest();
  const int k = h.num_levels() - 1;
  const std::size_t n = fine.mesh.num_dofs();
  std::mt19937 gen(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FieldVector e(n), zero(n, 0.0);
  for (double &v : e)
    v = u(gen);
  double norm = std::sqrt(quadratic_form(fine.op, e, e));
  double ratio = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (double &v : e)
      v /= norm;
    vcycle(h, k, e, zero, opts);
    norm = std::sqrt(quadratic_form(fine.op, e, e));
    ratio = norm;
    if (norm == 0.0)
      break;
  }
  return ratio;
}

SpectralData make_spectral_data(DataKind kind, int dim, double s, int cutoff, const std::vector<double> &coeffs) {
  detail::require(dim == 1 || dim == 2, "make_spectral_data: dimension must be 1 or 2");
  detail::require(s > 0.0 && s < 1.0, "make_spectral_data: s must lie in (0, 1)");
  if (cutoff <= 0)
    cutoff = dim == 1 ? (kind == DataKind::constant_one ? 1 << 16 : 1 << 14) : 256;
  SpectralData d;
  d.dim = dim;
  d.s = s;
  switch (kind) {
  case DataKind::eig1:
    if (dim == 1) {
      const double c = std::pow(kPi, 2.0 * s);
      d.f = sine_mode(1, cutoff, c / std::sqrt(2.0), 1);
      d.f_fn = [c](double x, double) { return c * std::sin(kPi * x); };
    } else {
      const double c = std::pow(2.0 * kPi * kPi, s);
      d.f = sine_mode(2, cutoff, c / 2.0, 1, 1);
      d.f_fn = [c](double x1, double x2) { return c * std::sin(kPi * x1) * std::sin(kPi * x2); };
    }
    break;
  case DataKind::constant_one:
    d.f = constant_one(dim, cutoff);
    d.f_fn = [](double, double) { return 1.0; };
    break;
  case DataKind::custom_sine: {
    detail::require(dim == 1, "make_spectral_data: custom sine data is one-dimensional");
    detail::require(!coeffs.empty() && static_cast<int>(coeffs.size()) <= cutoff,
                    "make_spectral_data: need 1..cutoff coefficients");
    d.f = SineExpansion::zeros(1, cutoff);
    std::copy(coeffs.begin(), coeffs.end(), d.f.coeffs.begin());
    const std::vector<double> c = coeffs;
    d.f_fn = [c](double x, double) {
      double v = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k)
        v += c[k] * std::sqrt(2.0) * std::sin((k + 1.0) * kPi * x);
      return v;
    };
    break;
  }
  }
  d.u = spectral_solve(d.f, s);
  d.fu = l2_pairing(d.f, d.u);
  if (kind == DataKind::constant_one && dim == 1) {
    // sum_{k > cutoff} f_k u_k = sum_{k > cutoff} λ_k^s u_k^2
    d.u_tail_sq = constant_one_solution_tail(cutoff, s);
    d.fu += d.u_tail_sq;
  }
  return d;
}

namespace {

HierarchyOptions ladder_hierarchy(int dim, int cells, double grading, double height, double s) {
  int j = 0;
  while (cells % (2 << j) == 0 && cells / (2 << j) >= 2)
    ++j;
  HierarchyOptions o;
  o.dim = dim;
  o.coarse_cells = cells >> j;
  o.coarse_levels = cells >> j;
  o.refinements = j;
  o.grading = grading;
  o.height = height;
  o.alpha = 1.0 - 2.0 * s;
  return o;
}

} // namespace

EllipticPoint elliptic_point(const SpectralData &data, int cells, double grading, double height) {
  detail::require(cells >= 2, "elliptic_point: need at least two cells");
  const double s = data.s;
  const MeshHierarchy h(ladder_hierarchy(data.dim, cells, grading, height, s));
  const HierarchyLevel &fine = h.finest();
  const FieldVector b = assemble_trace_load(fine.mesh, data.f_fn, s);
  CycleOptions co;
  co.smoothing_steps = 2;
  const SolveResult sol = mg_pcg_solve(h, b, 1e-11 * kernels::norm2(b), 500, co);
  EllipticPoint p;
  p.dofs = fine.mesh.num_dofs();
  p.h_base = 1.0 / cells;
  p.levels = fine.mesh.levels();
  p.height = height;
  p.iterations = sol.iterations;
  p.energy_error = extension_energy_error(fine.stiffness, b, sol.x, normalization_ds(s) * data.fu);
  const TraceError te = trace_error_hs(fine.mesh, sol.x, data.u, s, data.u_tail_sq);
  p.trace_error = te.value;
  p.cutoff_warning = te.cutoff_warning;
  if (data.dim == 1)
    p.estimator = estimate(fine.mesh, sol.x, data.f_fn, s).global_total;
  return p;
}

SpatialFunction mg_bench_load(int dim, double s) {
  if (dim == 1) {
    const double c = std::pow(9.0 * kPi * kPi, s);
    return [c](double x, double) { return c * std::sin(3.0 * kPi * x); };
  }
  const double c = std::pow(8.0 * kPi * kPi, s);
  return [c](double x1, double x2) { return c * std::sin(2.0 * kPi * x1) * std::sin(2.0 * kPi * x2); };
}

MgBenchPoint mg_bench_point(int dim, double s, int cells, bool measure_delta) {
  detail::require(cells >= 2 && (cells & (cells - 1)) == 0, "mg_bench_point: cells must be a power of two >= 2");
  HierarchyOptions o;
  o.dim = dim;
  o.coarse_cells = 2;
  o.coarse_levels = 2;
  while ((o.coarse_cells << o.refinements) < cells)
    ++o.refinements;
  o.grading = default_grading(s);
  o.height = 1.0;
  o.alpha = 1.0 - 2.0 * s;
  const MeshHierarchy h(o);
  const FieldVector b = assemble_trace_load(h.finest().mesh, mg_bench_load(dim, s), s);
  CycleOptions co;
  co.smoothing_steps = 2;
  MgBenchPoint p;
  p.cells = cells;
  p.s = s;
  p.dofs = h.finest().mesh.num_dofs();
  p.iterations = mg_pcg_solve(h, b, 1e-8 * kernels::norm2(b), 500, co).iterations;
  if (measure_delta)
    p.delta = vcycle_contraction(h, co);
  return p;
}

// ---------------------------------------------------------------------------
// configuration

namespace {

using nlohmann::json;

template <class T> T get(const json &j, const char *key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

bool increasing(const std::vector<int> &v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1])
      return false;
  return true;
}

} // namespace

ExperimentConfig parse_config(const std::string &json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "name",        "kind",          "n",          "s",           "s_values",       "gamma",
      "ladder",      "grading",       "mesh_grading", "height",    "theta",          "max_iterations",
      "max_dofs",    "initial_cells", "time_steps", "T",           "refinements",    "coarse_cells",
      "forcing_amplitude", "forcing_mode", "time_error", "data",   "coeffs",         "cutoff",
      "log_correct", "expected_slope", "slope_tol", "fit_skip",    "fit_quantity",   "reference_iterations",
      "iteration_tol", "measure_delta"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown config key '" + it.key() + "'");

  ExperimentConfig c;
  const std::string kind = get<std::string>(j, "kind");
  if (kind == "elliptic")
    c.kind = ExperimentKind::elliptic;
  else if (kind == "mg-bench")
    c.kind = ExperimentKind::mg_bench;
  else if (kind == "afem")
    c.kind = ExperimentKind::afem;
  else if (kind == "parabolic")
    c.kind = ExperimentKind::parabolic;
  else
    throw ConfigError("unknown kind '" + kind + "'");
  if (j.contains("name"))
    c.name = get<std::string>(j, "name");
  if (j.contains("n"))
    c.dim = get<int>(j, "n");
  if (j.contains("s"))
    c.s = get<double>(j, "s");
  if (j.contains("s_values"))
    c.s_values = get<std::vector<double>>(j, "s_values");
  if (c.s_values.empty())
    c.s_values = {c.s};
  if (j.contains("gamma"))
    c.gamma = get<double>(j, "gamma");
  if (j.contains("ladder"))
    c.ladder = get<std::vector<int>>(j, "ladder");
  if (j.contains("grading")) {
    const std::string g = get<std::string>(j, "grading");
    if (g == "uniform")
      c.graded = false;
    else if (g == "graded")
      c.graded = true;
    else
      throw ConfigError("grading must be 'uniform' or 'graded'");
  }
  if (j.contains("mesh_grading"))
    c.mesh_grading = get<double>(j, "mesh_grading");
  if (j.contains("height"))
    c.height = get<double>(j, "height");
  if (j.contains("theta"))
    c.theta = get<double>(j, "theta");
  if (j.contains("max_iterations"))
    c.max_iterations = get<int>(j, "max_iterations");
  if (j.contains("max_dofs"))
    c.max_dofs = get<std::size_t>(j, "max_dofs");
  if (j.contains("initial_cells"))
    c.initial_cells = get<int>(j, "initial_cells");
  if (j.contains("time_steps"))
    c.time_steps = get<std::vector<int>>(j, "time_steps");
  if (j.contains("T"))
    c.final_time = get<double>(j, "T");
  if (j.contains("refinements"))
    c.refinements = get<int>(j, "refinements");
  if (j.contains("coarse_cells"))
    c.coarse_cells = get<int>(j, "coarse_cells");
  if (j.contains("forcing_amplitude"))
    c.forcing_amplitude = get<double>(j, "forcing_amplitude");
  if (j.contains("forcing_mode"))
    c.forcing_mode = get<int>(j, "forcing_mode");
  if (j.contains("time_error"))
    c.time_error = get<std::string>(j, "time_error");
  if (j.contains("data")) {
    const std::string d = get<std::string>(j, "data");
    if (d == "eig1")
      c.data = DataKind::eig1;
    else if (d == "constant-one")
      c.data = DataKind::constant_one;
    else if (d == "custom-sine-coeffs")
      c.data = DataKind::custom_sine;
    else
      throw ConfigError("unknown data selector '" + d + "'");
  }
  if (j.contains("coeffs"))
    c.coeffs = get<std::vector<double>>(j, "coeffs");
  if (j.contains("cutoff"))
    c.cutoff = get<int>(j, "cutoff");
  if (j.contains("log_correct"))
    c.log_correct = get<bool>(j, "log_correct");
  if (j.contains("expected_slope"))
    c.expected_slope = get<double>(j, "expected_slope");
  if (j.contains("slope_tol"))
    c.slope_tol = get<double>(j, "slope_tol");
  if (j.contains("fit_skip"))
    c.fit_skip = get<int>(j, "fit_skip");
  if (j.contains("fit_quantity"))
    c.fit_quantity = get<std::string>(j, "fit_quantity");
  if (j.contains("reference_iterations"))
    c.reference_iterations = get<std::vector<std::vector<int>>>(j, "reference_iterations");
  if (j.contains("iteration_tol"))
    c.iteration_tol = get<int>(j, "iteration_tol");
  if (j.contains("measure_delta"))
    c.measure_delta = get<bool>(j, "measure_delta");

  auto check = [](bool ok, const std::string &msg) {
    if (!ok)
      throw ConfigError(msg);
  };
  check(c.dim == 1 || c.dim == 2, "n must be 1 or 2");
  for (double s : c.s_values)
    check(s > 0.0 && s < 1.0, "s must lie in (0, 1)");
  check(c.s > 0.0 && c.s < 1.0, "s must lie in (0, 1)");
  check(c.gamma > 0.0 && c.gamma <= 1.0, "gamma must lie in (0, 1]");
  check(c.theta > 0.0 && c.theta <= 1.0, "theta must lie in (0, 1]");
  check(c.slope_tol > 0.0, "slope_tol must be positive");
  check(c.fit_skip >= 0, "fit_skip must be non-negative");
  check(c.fit_quantity == "energy" || c.fit_quantity == "trace", "fit_quantity must be 'energy' or 'trace'");
  check(c.time_error == "exact" || c.time_error == "self", "time_error must be 'exact' or 'self'");
  switch (c.kind) {
  case ExperimentKind::elliptic:
  case ExperimentKind::mg_bench:
    check(!c.ladder.empty() && increasing(c.ladder), "ladder must be non-empty and increasing");
    check(c.ladder.front() >= 2, "ladder entries must be at least 2");
    break;
  case ExperimentKind::afem:
    check(c.dim == 1, "afem runs are one-dimensional");
    check(c.max_iterations >= 1 && c.initial_cells >= 2, "afem needs max_iterations >= 1, initial_cells >= 2");
    break;
  case ExperimentKind::parabolic:
    check(!c.time_steps.empty() && increasing(c.time_steps), "time_steps must be non-empty and increasing");
    check(c.time_steps.front() >= 1, "time_steps entries must be positive");
    check(c.final_time > 0.0, "T must be positive");
    check(c.refinements >= 0 && c.coarse_cells >= 2, "refinements >= 0 and coarse_cells >= 2 required");
    check(c.forcing_mode >= 1, "forcing_mode must be positive");
    check(c.time_error == "self" || c.forcing_amplitude == 0.0,
          "the closed-form time error needs forcing_amplitude = 0");
    break;
  }
  if (c.kind == ExperimentKind::mg_bench && !c.reference_iterations.empty()) {
    check(c.reference_iterations.size() == c.s_values.size(), "reference_iterations needs one row per s");
    for (const auto &row : c.reference_iterations)
      check(row.size() == c.ladder.size(), "reference_iterations rows must match the ladder");
  }
  return c;
}

// ---------------------------------------------------------------------------
// running

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

class Csv {
public:
  Csv(const std::filesystem::path &path, const std::vector<std::string> &header) : out_(path) {
    if (!out_)
      throw Error("cannot write " + path.string());
    row_strings(header);
  }
  void row(const std::vector<double> &values, const std::vector<bool> &integral = {}) {
    std::vector<std::string> cells;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i < integral.size() && integral[i])
        cells.push_back(std::to_string(static_cast<long long>(std::llround(values[i]))));
      else
        cells.push_back(format_double(values[i]));
    }
    row_strings(cells);
  }

private:
  void row_strings(const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::ofstream out_;
};

const char *kind_name(ExperimentKind k) {
  switch (k) {
  case ExperimentKind::elliptic:
    return "elliptic";
  case ExperimentKind::mg_bench:
    return "mg-bench";
  case ExperimentKind::afem:
    return "afem";
  case ExperimentKind::parabolic:
    return "parabolic";
  }
  return "";
}

nlohmann::ordered_json params_json(const ExperimentConfig &c, int seed) {
  nlohmann::ordered_json p;
  if (!c.name.empty())
    p["name"] = c.name;
  p["n"] = c.dim;
  p["s"] = c.s;
  switch (c.kind) {
  case ExperimentKind::elliptic:
    p["ladder"] = c.ladder;
    p["grading"] = c.graded ? "graded" : "uniform";
    p["log_correct"] = c.log_correct;
    p["fit_quantity"] = c.fit_quantity;
    break;
  case ExperimentKind::mg_bench:
    p["s_values"] = c.s_values;
    p["ladder"] = c.ladder;
    break;
  case ExperimentKind::afem:
    p["theta"] = c.theta;
    p["max_iterations"] = c.max_iterations;
    p["initial_cells"] = c.initial_cells;
    p["fit_quantity"] = c.fit_quantity;
    break;
  case ExperimentKind::parabolic:
    p["gamma"] = c.gamma;
    p["T"] = c.final_time;
    p["time_steps"] = c.time_steps;
    p["refinements"] = c.refinements;
    p["time_error"] = c.time_error;
    break;
  }
  p["seed"] = seed;
  return p;
}

void finish_slope(ExperimentOutcome &out, const ExperimentConfig &c, const std::vector<double> &x,
                  const std::vector<double> &y, bool log_correct, double s, nlohmann::ordered_json &summary) {
  std::vector<double> fx, fy;
  for (std::size_t i = static_cast<std::size_t>(c.fit_skip); i < x.size(); ++i) {
    fx.push_back(x[i]);
    fy.push_back(y[i]);
  }
  if (fx.size() < 3) {
    summary["slope"] = nullptr;
    out.message = "fewer than three points to fit";
    if (c.expected_slope)
      out.pass = false;
    return;
  }
  const RateFit fit = fit_rate(fx, fy, log_correct, s);
  out.slope = fit.slope;
  summary["slope"] = fit.slope;
  summary["fit_residual"] = fit.residual;
  if (c.expected_slope) {
    summary["expected_slope"] = *c.expected_slope;
    out.pass = std::abs(fit.slope - *c.expected_slope) <= c.slope_tol;
  }
}

} // namespace

ExperimentOutcome run_experiment(const ExperimentConfig &c, const std::string &out_dir, int seed) {
  namespace fs = std::filesystem;
  ExperimentOutcome out;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  nlohmann::ordered_json summary;
  summary["kind"] = kind_name(c.kind);
  summary["params"] = params_json(c, seed);

  try {
    switch (c.kind) {
    case ExperimentKind::elliptic: {
      const SpectralData data = make_spectral_data(c.data, c.dim, c.s, c.cutoff, c.coeffs);
      const fs::path path = dir / "elliptic.csv";
      Csv csv(path, {"dofs", "h_base", "M", "Y", "energy_err", "hs_trace_err", "est_total"});
      std::vector<double> dofs, energy, trace;
      bool warned = false;
      for (int cells : c.ladder) {
        const double grading = c.graded ? (c.mesh_grading > 0.0 ? c.mesh_grading : default_grading(c.s)) : 1.0;
        const double height =
            c.height > 0.0 ? c.height
                           : truncation_height(static_cast<std::size_t>(std::pow(static_cast<double>(cells), c.dim)));
        const EllipticPoint p = elliptic_point(data, cells, grading, height);
        csv.row({double(p.dofs), p.h_base, double(p.levels), p.height, p.energy_error, p.trace_error, p.estimator},
                {true, false, true});
        dofs.push_back(double(p.dofs));
        energy.push_back(p.energy_error);
        trace.push_back(p.trace_error);
        warned = warned || p.cutoff_warning;
      }
      out.csv_files.push_back(path.string());
      summary["cutoff_warning"] = warned;
      finish_slope(out, c, dofs, c.fit_quantity == "energy" ? energy : trace, c.log_correct, c.s, summary);
      break;
    }
    case ExperimentKind::mg_bench: {
      const fs::path path = dir / "mg_bench.csv";
      Csv csv(path, {"h_base", "s", "dofs", "iters", "delta"});
      nlohmann::ordered_json table = nlohmann::ordered_json::array();
      for (std::size_t si = 0; si < c.s_values.size(); ++si) {
        std::vector<int> row;
        for (std::size_t li = 0; li < c.ladder.size(); ++li) {
          const MgBenchPoint p = mg_bench_point(c.dim, c.s_values[si], c.ladder[li], c.measure_delta);
          csv.row({1.0 / p.cells, p.s, double(p.dofs), double(p.iterations), p.delta}, {false, false, true, true});
          row.push_back(p.iterations);
          if (!c.reference_iterations.empty() &&
              std::abs(p.iterations - c.reference_iterations[si][li]) > c.iteration_tol)
            out.pass = false;
        }
        table.push_back(row);
      }
      out.csv_files.push_back(path.string());
      summary["iterations"] = table;
      summary["slope"] = nullptr;
      break;
    }
    case ExperimentKind::afem: {
      const SpectralData data = make_spectral_data(c.data, 1, c.s, c.cutoff, c.coeffs);
      AfemConfig ac;
      ac.s = c.s;
      ac.f = data.f_fn;
      ac.initial_cells = c.initial_cells;
      ac.theta = c.theta;
      ac.max_iterations = c.max_iterations;
      ac.max_dofs = c.max_dofs;
      ac.oracle = SpectralOracle{data.f, data.u, data.u_tail_sq};
      const auto recs = afem_loop(ac);
      const fs::path path = dir / "afem.csv";
      Csv csv(path, {"iter", "dofs", "est", "osc", "hs_err", "energy_err"});
      std::vector<double> dofs, energy, trace;
      for (const auto &r : recs) {
        csv.row({double(r.iteration), double(r.dofs), r.estimator, r.oscillation, r.trace_error, r.energy_error},
                {true, true});
        dofs.push_back(double(r.dofs));
        energy.push_back(r.energy_error);
        trace.push_back(r.trace_error);
      }
      out.csv_files.push_back(path.string());
      finish_slope(out, c, dofs, c.fit_quantity == "energy" ? energy : trace, c.log_correct, c.s, summary);
      break;
    }
    case ExperimentKind::parabolic: {
      ParabolicConfig pc;
      pc.dim = c.dim;
      pc.s = c.s;
      pc.gamma = c.gamma;
      pc.final_time = c.final_time;
      pc.coarse_cells = c.coarse_cells;
      pc.refinements = c.refinements;
      pc.height = c.height;
      pc.u0 = c.dim == 1 ? sine_mode(1, 1, 1.0, 1) : sine_mode(2, 1, 1.0, 1, 1);
      if (c.data != DataKind::eig1)
        throw ConfigError("parabolic runs use u0 = phi_1 (data 'eig1')");
      if (c.forcing_amplitude != 0.0) {
        pc.f_space = c.dim == 1 ? sine_mode(1, c.forcing_mode, c.forcing_amplitude, c.forcing_mode)
                                : sine_mode(2, c.forcing_mode, c.forcing_amplitude, c.forcing_mode, 1);
        pc.f_time = [](double) { return 1.0; };
      }
      std::vector<double> taus, errors, ratios;
      FieldVector previous;
      bool stable = true;
      for (std::size_t i = 0; i < c.time_steps.size(); ++i) {
        const int k = c.time_steps[i];
        pc.steps = k;
        const ParabolicRun run = run_parabolic(pc);
        const fs::path path = dir / ("parabolic_K" + std::to_string(k) + ".csv");
        Csv csv(path, {"step", "t", "trace_l2", "energy", "ledger"});
        for (const auto &r : run.records)
          csv.row({double(r.step), r.t, r.trace_l2, r.energy, r.ledger}, {true});
        out.csv_files.push_back(path.string());
        stable = stable && run.stability.holds && run.residual_failures == 0;
        ratios.push_back(run.stability.worst_ratio);
        const double tau = c.final_time / k;
        if (c.time_error == "exact") {
          taus.push_back(tau);
          errors.push_back(run.rl_trace_error);
        } else if (!previous.empty()) {
          FieldVector d = previous;
          for (std::size_t q = 0; q < d.size(); ++q)
            d[q] -= run.final_state[q];
          // difference to the next finer run, attributed to the coarser step
          taus.push_back(c.final_time / c.time_steps[i - 1]);
          errors.push_back(std::sqrt(quadratic_form(run.op->trace_mass(), d, d)));
        }
        previous = run.final_state;
      }
      summary["stability_holds"] = stable;
      summary["stability_worst_ratio"] = ratios;
      summary["time_errors"] = errors;
      if (!stable)
        out.pass = false;
      const bool keep = out.pass;
      finish_slope(out, c, taus, errors, false, 0.0, summary);
      out.pass = out.pass && keep;
      break;
    }
    }
  } catch (const ConfigError &e) {
    out.exit_code = 2;
    out.message = e.what();
  } catch (const InvalidArgument &e) {
    out.exit_code = 2;
    out.message = e.what();
  } catch (const UnsupportedDimension &e) {
    out.exit_code = 2;
    out.message = e.what();
  } catch (const Error &e) {
    out.exit_code = 3;
    out.message = e.what();
  }
  if (out.exit_code != 0)
    out.pass = false;
  else if (!out.pass)
    out.exit_code = 1;
  if (c.expected_slope)
    summary["slope_tol"] = c.slope_tol;
  else
    summary["slope_tol"] = nullptr;
  summary["pass"] = out.pass;
  if (!out.message.empty())
    summary["message"] = out.message;
  const fs::path sp = dir / "summary.json";
  std::ofstream(sp) << summary.dump(2) << '\n';
  out.summary_file = sp.string();
  return out;
}

} // namespace fracext
