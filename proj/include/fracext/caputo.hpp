#pragma once

#include "fracext/mesh.hpp"
#include "fracext/solver.hpp"
#include "fracext/sparse.hpp"
#include "fracext/spectral.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace fracext {

/// L1 weights a_j = (j+1)^(1-gamma) - j^(1-gamma), j = 0..K-1, for a uniform step tau.
struct CaputoWeights {
  double gamma = 1.0;
  double tau = 1.0;
  std::vector<double> a;

  /// 1 / (Γ(2-gamma) tau^gamma), the factor in front of the newest value.
  double scale() const;
};

/// gamma = 1 gives a = [1, 0, 0, ...] (backward difference).
CaputoWeights caputo_weights(double gamma, double tau, int steps);

/// δ^γ of the last entry of history = {φ^0, ..., φ^{k+1}}, from the increment form
/// Σ_j a_j τ^(1-γ) (φ^{k+1-j} - φ^{k-j}) / (τ Γ(2-γ)).
FieldVector discrete_frac_derivative(const std::vector<FieldVector> &history, const CaputoWeights &w);

/// Σ_{j<k} (a_j - a_{j+1}) φ^{k-j} + a_k φ^0 over history = {φ^0, ..., φ^k};
/// then δ^γ φ^{k+1} = scale() (φ^{k+1} - memory_term).
FieldVector memory_term(const std::vector<FieldVector> &history, const CaputoWeights &w);

namespace serial {
FieldVector memory_term(const std::vector<FieldVector> &history, const CaputoWeights &w);
} // namespace serial

/// Discrete harmonic extension of the nodal interpolant of u0: trace DoFs fixed,
/// remaining DoFs from the weighted stiffness.
FieldVector initialize(const TensorMesh &mesh, const SpatialFunction &u0, double s);

/// State of the time march: V^0 .. V^k.
struct EvolutionState {
  std::vector<FieldVector> history;
  int k() const { return static_cast<int>(history.size()) - 1; }
};

/// Constant-step operator d_s scale M_tr + A and what is needed to solve with it.
class TimeOperator {
public:
  /// CG on the given mesh.
  TimeOperator(TensorMesh mesh, double s, CaputoWeights w, double tol = 1e-12);
  /// MG-preconditioned CG on the finest level of a hierarchy built from opts.
  TimeOperator(const HierarchyOptions &opts, double s, CaputoWeights w, double tol = 1e-12);
  ~TimeOperator();
  TimeOperator(TimeOperator &&) noexcept;

  const TensorMesh &mesh() const { return *mesh_; }
  double s() const { return s_; }
  const CaputoWeights &weights() const { return w_; }
  const CsrMatrix &stiffness() const { return *stiffness_; }
  const CsrMatrix &trace_mass() const { return *trace_mass_; }
  const CsrMatrix &system() const { return system_; }
  double tolerance() const { return tol_; }
  bool multigrid() const { return hierarchy_ != nullptr; }

  /// Solve system() x = b to ||r|| < tol ||b||.
  SolveResult solve(const FieldVector &b, const FieldVector *x0) const;

private:
  void finish();

  std::unique_ptr<MeshHierarchy> hierarchy_;
  std::optional<TensorMesh> own_mesh_;
  const TensorMesh *mesh_ = nullptr;
  double s_;
  CaputoWeights w_;
  double tol_;
  std::optional<CsrMatrix> own_stiffness_, own_trace_mass_;
  const CsrMatrix *stiffness_ = nullptr, *trace_mass_ = nullptr;
  CsrMatrix system_;
};

struct StepReport {
  int iterations = 0;
  /// ||b - S V^{k+1}|| / ||b||.
  double relative_residual = 0.0;
};

/// Advance by one step of (δ^γ tr V^{k+1}, tr W) + a(V^{k+1}, W)/d_s = <f^{k+1}, tr W>;
/// load holds <f^{k+1}, tr φ_i> (no d_s).
StepReport step(EvolutionState &state, const FieldVector &load, const TimeOperator &op);
/// (tr V^{k+1} - tr V^k, tr W)/τ + a(V^{k+1}, W)/d_s = <f^{k+1}, tr W>, written out separately.
StepReport backward_euler_step(EvolutionState &state, const FieldVector &load, const TimeOperator &op);

enum class RlRule {
  /// τ (T - t_{k-1/2})^(-γ) / Γ(1-γ)
  midpoint,
  /// ∫_{I_k} (T - r)^(-γ) dr / Γ(1-γ), exact for piecewise constant data
  exact,
};

/// Discrete I^{1-γ} at T = K τ of the values psi[k-1] on (t_{k-1}, t_k], k = 1..K.
/// gamma = 1 returns max_k psi (midpoint) or psi[K-1] (exact).
double rl_integral_ledger(const std::vector<double> &psi, double gamma, double tau, RlRule rule = RlRule::midpoint);

/// Discrete stability inequality at every horizon t_n:
///   I_n^{1-γ} ψ + Σ_{m<=n} τ E^m <= ψ^0 t_n^{1-γ}/Γ(2-γ) + Σ_{m<=n} τ F^m
/// with ψ = ||tr V||^2, E = a(V,V)/d_s, F = ||f||^2_{H^-s} and exact kernel integrals.
struct StabilityLedger {
  std::vector<double> lhs, rhs;
  /// max_n lhs/rhs (0 when every rhs vanishes and every lhs does too).
  double worst_ratio = 0.0;
  bool holds = true;
};

StabilityLedger stability_ledger(double psi0, const std::vector<double> &psi, const std::vector<double> &energy,
                                 const std::vector<double> &f_dual_sq, double gamma, double tau);

/// Trace coefficients of the solution with f = 0: E_γ(-λ_k^s t^γ) u0_k (exp for γ = 1).
SineExpansion free_decay(const SineExpansion &u0, double s, double gamma, double t);

/// ||u - tr V||_{L2(Omega)} for u a finite sine expansion, via Parseval and the trace mass.
double trace_l2_error(const TensorMesh &mesh, const CsrMatrix &trace_mass, const FieldVector &v,
                      const SineExpansion &u);

struct ParabolicConfig {
  int dim = 1;
  double s = 0.5;
  double gamma = 1.0;
  double final_time = 1.0;
  int steps = 16;
  /// Spatial mesh: coarse_cells * 2^refinements base cells per side, as many interval cells.
  int coarse_cells = 2;
  int refinements = 5;
  /// Non-positive: truncation_height(#cells).
  double height = 0.0;
  SineExpansion u0;
  /// f(x, t) = f_space(x) f_time(t); an empty f_space means f = 0.
  SineExpansion f_space;
  std::function<double(double)> f_time;
  bool multigrid = true;
  double tol = 1e-12;
  bool keep_history = false;
};

struct ParabolicRecord {
  int step = 0;
  double t = 0.0;
  double trace_l2 = 0.0;
  /// a(V, V) / d_s
  double energy = 0.0;
  /// Midpoint ledger of ||tr V||^2 over (0, t_k].
  double ledger = 0.0;
  int iterations = 0;
  double relative_residual = 0.0;
  /// ||u(t_k) - tr V^k||_{L2}, negative without a closed form.
  double trace_error = -1.0;
};

struct ParabolicRun {
  std::vector<ParabolicRecord> records;
  StabilityLedger stability;
  /// Steps whose relative residual exceeded 10 tol.
  int residual_failures = 0;
  /// Mesh and final state for post-processing.
  std::shared_ptr<const TimeOperator> op;
  FieldVector final_state;
  std::vector<FieldVector> history;
  /// [Σ exact-kernel weights ||u - tr V||^2]^{1/2} over the run, negative without a closed form.
  double rl_trace_error = -1.0;
};

ParabolicRun run_parabolic(const ParabolicConfig &config);

} // namespace fracext
