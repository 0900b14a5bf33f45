#include "fracext/caputo.hpp"

#include "fracext/assembly.hpp"
#include "fracext/error.hpp"
#include "fracext/special_functions.hpp"

#include <algorithm>
#include <cmath>

namespace fracext {

double CaputoWeights::scale() const { return 1.0 / (gamma_fn(2.0 - gamma) * std::pow(tau, gamma)); }

CaputoWeights caputo_weights(double gamma, double tau, int steps) {
  detail::require(gamma > 0.0 && gamma <= 1.0, "caputo_weights: gamma must lie in (0, 1]");
  detail::require(tau > 0.0, "caputo_weights: tau must be positive");
  detail::require(steps >= 1, "caputo_weights: need at least one step");
  CaputoWeights w{gamma, tau, std::vector<double>(steps, 0.0)};
  if (gamma == 1.0) {
    w.a[0] = 1.0;
    return w;
  }
  const double p = 1.0 - gamma;
  for (int j = 0; j < steps; ++j)
    w.a[j] = std::pow(j + 1.0, p) - std::pow(static_cast<double>(j), p);
  return w;
}

FieldVector discrete_frac_derivative(const std::vector<FieldVector> &history, const CaputoWeights &w) {
  detail::require(history.size() >= 2, "discrete_frac_derivative: need at least two history entries");
  const std::size_t k = history.size() - 2;
  detail::require(k < w.a.size(), "discrete_frac_derivative: history longer than the weight sequence");
  const std::size_t n = history.front().size();
  for (const auto &h : history)
    detail::require(h.size() == n, "discrete_frac_derivative: history entries differ in length");
  FieldVector out(n, 0.0);
  for (std::size_t j = 0; j <= k; ++j) {
    const FieldVector &hi = history[k + 1 - j], &lo = history[k - j];
    for (std::size_t i = 0; i < n; ++i)
      out[i] += w.a[j] * (hi[i] - lo[i]);
  }
  const double c = w.scale();
  for (double &v : out)
    v *= c;
  return out;
}

namespace {

void check_memory_args(const std::vector<FieldVector> &history, const CaputoWeights &w) {
  detail::require(!history.empty(), "memory_term: empty history");
  detail::require(history.size() <= w.a.size(), "memory_term: history longer than the weight sequence");
}

} // namespace

FieldVector memory_term(const std::vector<FieldVector> &history, const CaputoWeights &w) {
  check_memory_args(history, w);
  const std::size_t k = history.size() - 1, n = history.front().size();
  FieldVector out(n, 0.0);
  constexpr std::ptrdiff_t block = 2048;
  const std::ptrdiff_t blocks = (static_cast<std::ptrdiff_t>(n) + block - 1) / block;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * block, hi = std::min(n, lo + block);
    for (std::size_t j = 0; j < k; ++j) {
      const double c = w.a[j] - w.a[j + 1];
      const double *h = history[k - j].data();
      for (std::size_t i = lo; i < hi; ++i)
        out[i] += c * h[i];
    }
    for (std::size_t i = lo; i < hi; ++i)
      out[i] += w.a[k] * history[0][i];
  }
  return out;
}

namespace serial {
FieldVector memory_term(const std::vector<FieldVector> &history, const CaputoWeights &w) {
  check_memory_args(history, w);
  const std::size_t k = history.size() - 1, n = history.front().size();
  FieldVector out(n, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i)
      out[i] += (w.a[j] - w.a[j + 1]) * history[k - j][i];
  for (std::size_t i = 0; i < n; ++i)
    out[i] += w.a[k] * history[0][i];
  return out;
}
} // namespace serial

FieldVector initialize(const TensorMesh &mesh, const SpatialFunction &u0, double s) {
  const int m = mesh.levels();
  const FieldVector g = embed_trace(mesh, nodal_values(mesh.base(), u0));
  if (m == 1)
    return g;
  const CsrMatrix a = assemble_stiffness(mesh, 1.0 - 2.0 * s);
  // interior unknowns: every DoF off the y = 0 layer
  const std::size_t lines = mesh.num_lines(), ni = lines * (m - 1);
  auto inner = [m](std::size_t dof) { return static_cast<long>(dof / m) * (m - 1) + static_cast<long>(dof % m) - 1; };
  CsrBuilder b(ni, ni);
  FieldVector rhs(ni, 0.0);
  for (std::size_t row = 0; row < a.rows; ++row) {
    if (row % m == 0)
      continue;
    const long r = inner(row);
    for (std::size_t p = a.row_offsets[row]; p < a.row_offsets[row + 1]; ++p) {
      const std::size_t col = a.col_indices[p];
      if (col % m == 0)
        rhs[r] -= a.values[p] * g[col];
      else
        b.add(r, inner(col), a.values[p]);
    }
  }
  const FieldVector x = direct_solve(b.build(), rhs);
  FieldVector v = g;
  for (std::size_t f = 0; f < lines; ++f)
    for (int l = 1; l < m; ++l)
      v[f * m + l] = x[f * (m - 1) + l - 1];
  return v;
}

TimeOperator::TimeOperator(TensorMesh mesh, double s, CaputoWeights w, double tol)
    : own_mesh_(std::move(mesh)), s_(s), w_(std::move(w)), tol_(tol) {
  mesh_ = &*own_mesh_;
  own_stiffness_ = assemble_stiffness(*mesh_, 1.0 - 2.0 * s);
  own_trace_mass_ = assemble_trace_mass(*mesh_);
  stiffness_ = &*own_stiffness_;
  trace_mass_ = &*own_trace_mass_;
  system_ = add(1.0, *stiffness_, normalization_ds(s) * w_.scale(), *trace_mass_);
  finish();
}

TimeOperator::TimeOperator(const HierarchyOptions &opts, double s, CaputoWeights w, double tol)
    : s_(s), w_(std::move(w)), tol_(tol) {
  HierarchyOptions o = opts;
  o.alpha = 1.0 - 2.0 * s;
  hierarchy_ = std::make_unique<MeshHierarchy>(o);
  hierarchy_->set_operator(1.0, normalization_ds(s) * w_.scale());
  const HierarchyLevel &fine = hierarchy_->finest();
  mesh_ = &fine.mesh;
  stiffness_ = &fine.stiffness;
  trace_mass_ = &fine.trace_mass;
  system_ = fine.op;
  finish();
}

void TimeOperator::finish() {
  detail::require(s_ > 0.0 && s_ < 1.0, "TimeOperator: s must lie in (0, 1)");
  detail::require(tol_ > 0.0, "TimeOperator: tolerance must be positive");
}

TimeOperator::~TimeOperator() = default;
TimeOperator::TimeOperator(TimeOperator &&) noexcept = default;

SolveResult TimeOperator::solve(const FieldVector &b, const FieldVector *x0) const {
  const double nb = kernels::norm2(b);
  if (nb == 0.0)
    return {FieldVector(b.size(), 0.0), 0, 0.0};
  if (hierarchy_) {
    CycleOptions co;
    co.smoothing_steps = 2;
    return mg_pcg_solve(*hierarchy_, b, tol_ * nb, 500, co, x0);
  }
  return cg_solve(system_, b, tol_ * nb, 20 * static_cast<int>(b.size()) + 100, x0);
}

namespace {

StepReport solve_step(EvolutionState &state, const FieldVector &rhs, const TimeOperator &op) {
  SolveResult r = op.solve(rhs, &state.history.back());
  const double nb = kernels::norm2(rhs);
  FieldVector res(rhs.size());
  kernels::residual(op.system(), r.x, rhs, res);
  StepReport rep{r.iterations, nb > 0.0 ? kernels::norm2(res) / nb : kernels::norm2(res)};
  state.history.push_back(std::move(r.x));
  return rep;
}

void check_step_args(const EvolutionState &state, const FieldVector &load, const TimeOperator &op) {
  detail::require(!state.history.empty(), "step: state has no initial value");
  detail::require(load.size() == op.mesh().num_dofs(), "step: load does not match the mesh");
  detail::require(state.history.back().size() == op.mesh().num_dofs(), "step: state does not match the mesh");
}

} // namespace

StepReport step(EvolutionState &state, const FieldVector &load, const TimeOperator &op) {
  check_step_args(state, load, op);
  detail::require(static_cast<std::size_t>(state.k()) < op.weights().a.size(), "step: beyond the final step");
  const double ds = normalization_ds(op.s()), c = op.weights().scale();
  const FieldVector mem = memory_term(state.history, op.weights());
  FieldVector rhs(load.size());
  kernels::spmv(op.trace_mass(), mem, rhs);
  for (std::size_t i = 0; i < rhs.size(); ++i)
    rhs[i] = ds * (load[i] + c * rhs[i]);
  return solve_step(state, rhs, op);
}

StepReport backward_euler_step(EvolutionState &state, const FieldVector &load, const TimeOperator &op) {
  check_step_args(state, load, op);
  detail::require(op.weights().gamma == 1.0, "backward_euler_step: operator built for gamma != 1");
  const double ds = normalization_ds(op.s()), inv_tau = 1.0 / op.weights().tau;
  FieldVector rhs(load.size());
  kernels::spmv(op.trace_mass(), state.history.back(), rhs);
  for (std::size_t i = 0; i < rhs.size(); ++i)
    rhs[i] = ds * load[i] + ds * inv_tau * rhs[i];
  return solve_step(state, rhs, op);
}

double rl_integral_ledger(const std::vector<double> &psi, double gamma, double tau, RlRule rule) {
  detail::require(gamma > 0.0 && gamma <= 1.0, "rl_integral_ledger: gamma must lie in (0, 1]");
  if (psi.empty())
    return 0.0;
  const std::size_t n = psi.size();
  if (gamma == 1.0)
    return rule == RlRule::midpoint ? *std::max_element(psi.begin(), psi.end()) : psi.back();
  double sum = 0.0;
  if (rule == RlRule::midpoint) {
    const double c = tau / gamma_fn(1.0 - gamma);
    for (std::size_t k = 1; k <= n; ++k)
      sum += c * std::pow((n - k + 0.5) * tau, -gamma) * psi[k - 1];
  } else {
    const double p = 1.0 - gamma, c = std::pow(tau, p) / gamma_fn(2.0 - gamma);
    for (std::size_t k = 1; k <= n; ++k)
      sum += c * (std::pow(n - k + 1.0, p) - std::pow(static_cast<double>(n - k), p)) * psi[k - 1];
  }
  return sum;
}

StabilityLedger stability_ledger(double psi0, const std::vector<double> &psi, const std::vector<double> &energy,
                                 const std::vector<double> &f_dual_sq, double gamma, double tau) {
  const std::size_t n = psi.size();
  detail::require(energy.size() == n && f_dual_sq.size() == n, "stability_ledger: sequences differ in length");
  StabilityLedger out;
  out.lhs.resize(n);
  out.rhs.resize(n);
  const double g2 = gamma_fn(2.0 - gamma);
  double sum_e = 0.0, sum_f = 0.0;
  for (std::size_t h = 1; h <= n; ++h) {
    sum_e += tau * energy[h - 1];
    sum_f += tau * f_dual_sq[h - 1];
    const std::vector<double> prefix(psi.begin(), psi.begin() + h);
    out.lhs[h - 1] = rl_integral_ledger(prefix, gamma, tau, RlRule::exact) + sum_e;
    out.rhs[h - 1] = psi0 * std::pow(h * tau, 1.0 - gamma) / g2 + sum_f;
    const double l = out.lhs[h - 1], r = out.rhs[h - 1];
    if (r > 0.0)
      out.worst_ratio = std::max(out.worst_ratio, l / r);
    else if (l > 0.0)
      out.worst_ratio = INFINITY;
  }
  // rounding allowance only; the inequality is exact for the discrete scheme
  out.holds = out.worst_ratio <= 1.0 + 1e-10;
  return out;
}

SineExpansion free_decay(const SineExpansion &u0, double s, double gamma, double t) {
  SineExpansion u = u0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u.coeffs[i] == 0.0)
      continue;
    const double z = std::pow(u.eigenvalue(i), s) * std::pow(t, gamma);
    u.coeffs[i] *= gamma == 1.0 ? std::exp(-z) : mittag_leffler(gamma, -z);
  }
  return u;
}

double trace_l2_error(const TensorMesh &mesh, const CsrMatrix &trace_mass, const FieldVector &v,
                      const SineExpansion &u) {
  const SineExpansion vc = piecewise_linear_coefficients(mesh.base(), trace_values(mesh, v), u.cutoff);
  double uu = 0.0, uv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uu += u.coeffs[i] * u.coeffs[i];
    uv += u.coeffs[i] * vc.coeffs[i];
  }
  const double vv = quadratic_form(trace_mass, v, v);
  return std::sqrt(std::max(0.0, uu - 2.0 * uv + vv));
}

ParabolicRun run_parabolic(const ParabolicConfig &config) {
  detail::require(config.final_time > 0.0, "run_parabolic: final time must be positive");
  detail::require(config.steps >= 1, "run_parabolic: need at least one step");
  detail::require(config.u0.cutoff == 0 || config.u0.dim == config.dim, "run_parabolic: u0 dimension mismatch");
  const double s = config.s, tau = config.final_time / config.steps;
  const CaputoWeights w = caputo_weights(config.gamma, tau, config.steps);
  const int cells = config.coarse_cells << config.refinements;
  const double height = config.height > 0.0 ? config.height
                                            : truncation_height(static_cast<std::size_t>(
                                                  std::pow(static_cast<double>(cells), config.dim)));

  std::shared_ptr<TimeOperator> op;
  if (config.multigrid) {
    HierarchyOptions ho;
    ho.dim = config.dim;
    ho.coarse_cells = config.coarse_cells;
    ho.coarse_levels = config.coarse_cells;
    ho.refinements = config.refinements;
    ho.grading = default_grading(s);
    ho.height = height;
    op = std::make_shared<TimeOperator>(ho, s, w, config.tol);
  } else {
    op = std::make_shared<TimeOperator>(
        build_tensor(uniform_base(config.dim, cells), graded_points(cells, default_grading(s), height)), s, w,
        config.tol);
  }
  const TensorMesh &mesh = op->mesh();
  const double ds = normalization_ds(s);

  EvolutionState state;
  if (config.u0.cutoff > 0) {
    const SineExpansion &u0 = config.u0;
    state.history.push_back(initialize(mesh, [&u0](double x1, double x2) { return u0.evaluate(x1, x2); }, s));
  } else {
    state.history.emplace_back(mesh.num_dofs(), 0.0);
  }

  const bool forced = config.f_space.cutoff > 0;
  FieldVector moments(mesh.num_dofs(), 0.0);
  double f_dual = 0.0;
  if (forced) {
    const SineExpansion &fs = config.f_space;
    moments = trace_moments(mesh, [&fs](double x1, double x2) { return fs.evaluate(x1, x2); });
    f_dual = hs_norm(fs, -s);
  }
  const bool exact = !forced && config.u0.cutoff > 0;

  ParabolicRun run;
  run.op = op;
  const double psi0 = quadratic_form(op->trace_mass(), state.history[0], state.history[0]);
  std::vector<double> psi, energy, fsq, err_sq;
  bool have_error = exact;
  FieldVector load(mesh.num_dofs());
  for (int k = 0; k < config.steps; ++k) {
    const double t = (k + 1) * tau;
    const double ft = forced ? (config.f_time ? config.f_time(t) : 1.0) : 0.0;
    for (std::size_t i = 0; i < load.size(); ++i)
      load[i] = ft * moments[i];
    const StepReport rep = step(state, load, *op);
    const FieldVector &v = state.history.back();
    ParabolicRecord rec;
    rec.step = k + 1;
    rec.t = t;
    psi.push_back(quadratic_form(op->trace_mass(), v, v));
    energy.push_back(quadratic_form(op->stiffness(), v, v) / ds);
    fsq.push_back(ft * ft * f_dual * f_dual);
    rec.trace_l2 = std::sqrt(psi.back());
    rec.energy = energy.back();
    rec.ledger = rl_integral_ledger(psi, config.gamma, tau, RlRule::midpoint);
    rec.iterations = rep.iterations;
    rec.relative_residual = rep.relative_residual;
    if (rep.relative_residual > 10.0 * config.tol)
      ++run.residual_failures;
    if (have_error) {
      try {
        rec.trace_error = trace_l2_error(mesh, op->trace_mass(), v, free_decay(config.u0, s, config.gamma, t));
        err_sq.push_back(rec.trace_error * rec.trace_error);
      } catch (const DomainError &) {
        have_error = false;
      }
    }
    run.records.push_back(rec);
  }
  run.stability = stability_ledger(psi0, psi, energy, fsq, config.gamma, tau);
  if (have_error)
    run.rl_trace_error = std::sqrt(rl_integral_ledger(err_sq, config.gamma, tau, RlRule::exact));
  run.final_state = state.history.back();
  if (config.keep_history)
    run.history = std::move(state.history);
  return run;
}

} // namespace fracext
