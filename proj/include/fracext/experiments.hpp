#pragma once

#include "fracext/error.hpp"
#include "fracext/mesh.hpp"
#include "fracext/solver.hpp"
#include "fracext/spectral.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fracext {

/// Malformed or inadmissible experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Least-squares line through (log x, log y).
struct RateFit {
  std::vector<double> x, y;
  double slope = 0.0;
  double intercept = 0.0;
  /// Root mean square of the log residuals.
  double residual = 0.0;
  bool log_corrected = false;
};

/// With log_correct, y is divided by |log x|^s before fitting. Needs >= 3 points, x > 1
/// when corrected, x > 0 and y > 0 otherwise.
RateFit fit_rate(const std::vector<double> &x, const std::vector<double> &y, bool log_correct = false,
                 double s = 0.0);

/// Ordinary least-squares line y = slope x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// max_i |y_i - fit_i| / |y_i|
  double relative_residual = 0.0;
};
LineFit fit_line(const std::vector<double> &x, const std::vector<double> &y);

/// Largest A-norm contraction of the symmetric V-cycle error propagator, by power iteration
/// from a fixed pseudo-random start.
double vcycle_contraction(const MeshHierarchy &h, const CycleOptions &opts, int iterations = 40);

enum class DataKind { eig1, constant_one, custom_sine };

/// Right-hand side and exact solution in the sine basis, plus what the error formulas need.
struct SpectralData {
  int dim = 1;
  double s = 0.5;
  SineExpansion f, u;
  SpatialFunction f_fn;
  /// <f, u> including the part beyond the cutoff when it is known.
  double fu = 0.0;
  /// H^s mass of u beyond the cutoff.
  double u_tail_sq = 0.0;
};

/// eig1: f = λ_1^s sin(πx) (n = 1) or λ_1^s sin(πx1) sin(πx2) (n = 2), u = f / λ_1^s.
/// constant_one: f = 1. custom_sine: f = Σ coeffs[k-1] φ_k (n = 1 only).
SpectralData make_spectral_data(DataKind kind, int dim, double s, int cutoff,
                                const std::vector<double> &coeffs = {});

/// One Galerkin solve with its error measures.
struct EllipticPoint {
  std::size_t dofs = 0;
  double h_base = 0.0;
  int levels = 0;
  double height = 0.0;
  double energy_error = 0.0;
  double trace_error = 0.0;
  bool cutoff_warning = false;
  /// Global AFEM indicator total (n = 1); negative otherwise.
  double estimator = -1.0;
  int iterations = 0;
};

/// Uniform base mesh with `cells` cells per side, M = cells interval cells graded with
/// `grading` on [0, height]; solved by MG-preconditioned CG.
EllipticPoint elliptic_point(const SpectralData &data, int cells, double grading, double height);

/// Iteration-table arrangement: PCG with one V(2,2) line-smoothed cycle, zero start,
/// ||r|| < 1e-8 ||b||, coarse mesh 2 x 2 cells, Y = 1.
struct MgBenchPoint {
  int cells = 0;
  double s = 0.0;
  std::size_t dofs = 0;
  int iterations = 0;
  /// Power-iteration contraction of the stationary cycle, negative when not requested.
  double delta = -1.0;
};
MgBenchPoint mg_bench_point(int dim, double s, int cells, bool measure_delta);
/// Load of the iteration table: (9π²)^s sin(3πx) for n = 1, (8π²)^s sin(2πx1) sin(2πx2) for n = 2.
SpatialFunction mg_bench_load(int dim, double s);

enum class ExperimentKind { elliptic, mg_bench, afem, parabolic };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::elliptic;
  int dim = 1;
  double s = 0.5;
  /// mg-bench sweep; defaults to {s}.
  std::vector<double> s_values;
  double gamma = 1.0;
  /// Base cells per side (elliptic, mg-bench).
  std::vector<int> ladder;
  bool graded = true;
  /// 0: default_grading(s).
  double mesh_grading = 0.0;
  /// 0: truncation_height(#cells).
  double height = 0.0;
  double theta = 0.5;
  int max_iterations = 10;
  std::size_t max_dofs = 1000000;
  int initial_cells = 4;
  /// Parabolic: number of time steps K per run, τ = T/K.
  std::vector<int> time_steps;
  double final_time = 1.0;
  int refinements = 5;
  int coarse_cells = 2;
  double forcing_amplitude = 0.0;
  int forcing_mode = 1;
  /// Parabolic error: "exact" (closed form, f = 0) or "self" (successive τ).
  std::string time_error = "exact";
  DataKind data = DataKind::eig1;
  std::vector<double> coeffs;
  /// Spectral cutoff for the trace error; 0 picks a default.
  int cutoff = 0;
  bool log_correct = false;
  std::optional<double> expected_slope;
  double slope_tol = 0.05;
  /// Error fitted for the slope: "energy" or "trace" (H^s).
  std::string fit_quantity = "energy";
  /// Points skipped at the start of the rate fit.
  int fit_skip = 0;
  /// mg-bench: expected iterations [s index][ladder index] and allowed deviation.
  std::vector<std::vector<int>> reference_iterations;
  int iteration_tol = 2;
  bool measure_delta = false;
  std::string name;
};

/// Parse a flat JSON document; unknown keys and inadmissible values raise ConfigError.
ExperimentConfig parse_config(const std::string &json_text);

struct ExperimentOutcome {
  /// 0 success, 1 acceptance failure, 3 numerical failure.
  int exit_code = 0;
  std::vector<std::string> csv_files;
  std::string summary_file;
  std::optional<double> slope;
  bool pass = true;
  std::string message;
};

/// Run the experiment and write CSV files plus summary.json into out_dir (created if missing).
/// `seed` is recorded in the summary only.
ExperimentOutcome run_experiment(const ExperimentConfig &config, const std::string &out_dir, int seed = 0);

/// Fixed-format float for CSV output: 17 significant digits.
std::string format_double(double v);

} // namespace fracext
