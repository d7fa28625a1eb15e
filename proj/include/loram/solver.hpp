#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "loram/dense.hpp"
#include "loram/errors.hpp"
#include "loram/expm.hpp"
#include "loram/kernel.hpp"
#include "loram/sparse.hpp"

namespace loram {

/// min_{X,Y} h(X,Y) + (1/2λ)‖A_Ω(X,Y) − Z₀‖², followed by hard thresholding.
struct ProjectionProblem {
  SparseGraphMatrix z0;
  PatternPtr omega;
  SigmaMode sigma = SigmaMode::Abs;
  double lambda = 5.0;
  std::size_t rank = 40;
  double c0 = 0.1;
  double eps_star = 5e-2;
  bool relative_threshold = true;
  double delta_eps = 0.0;  // feasibility tolerance, reported against h − d only

  /// Problem on Ω = supp(Z₀) without its diagonal.
  static ProjectionProblem from_graph(SparseGraphMatrix z0, std::size_t rank, double lambda,
                                      SigmaMode sigma = SigmaMode::Abs) {
    ProjectionProblem p;
    p.omega = std::make_shared<CandidateSet>(candidate_set_from_support(z0));
    p.z0 = std::move(z0);
    p.rank = rank;
    p.lambda = lambda;
    p.sigma = sigma;
    return p;
  }

  void validate() const {
    if (!omega) throw InvalidArgument("problem has no candidate set");
    if (omega->dim() != z0.dim()) throw ShapeError("candidate set and Z0 differ in dimension");
    if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
    if (rank < 1) throw InvalidArgument("rank must be at least 1");
    if (!(c0 > 0.0)) throw InvalidArgument("c0 must be positive");
    if (eps_star < 0.0) throw InvalidArgument("eps_star must be nonnegative");
  }
};

struct SolverConfig {
  double grad_tol = 1e-4;  // relative to ‖∇F(x₀)‖
  std::size_t max_iters = 500;
  double s0 = 1e-3;
  double bb_fallback = 1e-3;
  // BB steps are clipped to step_cap/L̂ (see step_ceiling); 0 disables the clip.
  double step_cap = 1.0;
  KernelConfig kernel;
  bool exact_gradients = false;
  bool record_h = false;  // evaluate h at each iterate (costly)
  std::uint64_t seed = 0;
  std::size_t oracle_cap = kDefaultOracleCap;

  void validate() const {
    if (!(grad_tol > 0.0)) throw InvalidArgument("grad_tol must be positive");
    if (!(s0 > 0.0)) throw InvalidArgument("s0 must be positive");
    if (!(bb_fallback > 0.0)) throw InvalidArgument("bb_fallback must be positive");
    if (!(step_cap >= 0.0)) throw InvalidArgument("step_cap must be nonnegative");
    kernel.validate();
  }
};

struct IterationRecord {
  std::size_t iter = 0;
  double grad_norm = 0.0;
  double stepsize = 0.0;
  double data_fit = 0.0;
  double h_value = std::numeric_limits<double>::quiet_NaN();
  double elapsed_ms = 0.0;
};

struct PhaseTimes {
  double setup_ms = 0.0;
  double iterate_ms = 0.0;
  double finish_ms = 0.0;
};

struct SolveReport {
  LoramFactors x_star;
  SparseGraphMatrix a_omega_star;  // A_Ω(X*, Y*) in solver units
  SparseGraphMatrix a_star;        // thresholded, still in solver units
  std::vector<IterationRecord> history;
  PhaseTimes times;
  double rescale_factor = 1.0;
  bool converged = false;
  double final_grad_norm = 0.0;
  double data_fit = 0.0;
  double h_gap = std::numeric_limits<double>::quiet_NaN();  // h(X*,Y*) − d
  bool h_gap_exact = false;

  /// Thresholded solution mapped back to the scale of the input Z₀.
  SparseGraphMatrix a_star_input_scale() const { return a_star.scaled(1.0 / rescale_factor); }
};

/// Everything in a report except wall-clock measurements.
inline bool same_numerics(const SolveReport& a, const SolveReport& b) {
  if (!(a.x_star == b.x_star && a.a_omega_star == b.a_omega_star && a.a_star == b.a_star)) {
    return false;
  }
  if (a.history.size() != b.history.size()) return false;
  auto same = [](double u, double v) { return u == v || (std::isnan(u) && std::isnan(v)); };
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    const auto& p = a.history[k];
    const auto& q = b.history[k];
    if (p.iter != q.iter || !same(p.grad_norm, q.grad_norm) || !same(p.stepsize, q.stepsize) ||
        !same(p.data_fit, q.data_fit) || !same(p.h_value, q.h_value)) {
      return false;
    }
  }
  return a.rescale_factor == b.rescale_factor && a.converged == b.converged &&
         same(a.final_grad_norm, b.final_grad_norm) && same(a.data_fit, b.data_fit) &&
         same(a.h_gap, b.h_gap);
}

struct Rescaled {
  SparseGraphMatrix matrix;
  double factor = 1.0;
};

/// Z₀′ = (c₀ / 10‖Z₀‖_F)·Z₀, which places Z₀′ at Frobenius norm c₀/10.
inline Rescaled rescale_input(const SparseGraphMatrix& z0, double c0) {
  if (!(c0 > 0.0)) throw InvalidArgument("rescale_input: c0 must be positive");
  const double norm = z0.frobenius_norm();
  if (norm == 0.0) throw DegenerateInput("rescale_input: Z0 is the zero matrix");
  const double target = c0 / 10.0;
  const double factor = std::abs(norm - target) <= 1e-15 * target ? 1.0 : target / norm;
  return {z0.scaled(factor), factor};
}

/// Z₀ read on the positions of Ω (zero where Z₀ has no entry), plus the
/// squared mass of Z₀ outside Ω, which the data term can never fit.
struct TargetOnOmega {
  std::vector<double> values;
  double outside_sq = 0.0;
};

inline TargetOnOmega target_on_omega(const SparseGraphMatrix& z, const CandidateSet& omega) {
  TargetOnOmega t;
  t.values.resize(omega.size());
  for (std::size_t k = 0; k < z.nnz(); ++k) {
    if (auto s = omega.find(z.row(k), z.col(k))) {
      t.values[*s] = z.value(k);
    } else {
      t.outside_sq += z.value(k) * z.value(k);
    }
  }
  return t;
}

namespace detail {

struct Evaluation {
  GradPair grad;
  double data_fit = 0.0;
};

inline Evaluation evaluate(const FactorPair& x, const PatternPtr& omega, const TargetOnOmega& z,
                           SigmaMode sigma, double lambda, const SolverConfig& cfg) {
  const SparseGraphMatrix a = loram_assemble(x, omega);
  GradPair g = cfg.exact_gradients ? grad_h_exact(a, x, sigma, cfg.oracle_cap)
                                   : grad_h_approx(a, x, sigma, cfg.kernel);
  std::vector<double> resid(a.nnz());
  double fit = z.outside_sq;
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    resid[k] = a.value(k) - z.values[k];
    fit += resid[k] * resid[k];
  }
  const double inv_lambda = std::isinf(lambda) ? 0.0 : 1.0 / lambda;
  if (inv_lambda != 0.0) {
    const SparseGraphMatrix r = a.with_values(std::move(resid));
    g.x.axpy(inv_lambda, spmm(r, x.y));
    g.y.axpy(inv_lambda, spmm_transposed(r, x.x));
  }
  return {std::move(g), 0.5 * fit};
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// ∇F = ∇h + (1/λ)(R·Y, Rᵀ·X) with R = A_Ω(X,Y) − Z₀ on Ω. Z₀ is used as
/// given (no rescaling).
inline GradPair objective_grad(const LoramFactors& x, const ProjectionProblem& prob,
                               const SolverConfig& cfg) {
  prob.validate();
  if (x.x.rows() != prob.z0.dim() || !x.x.same_shape(x.y)) {
    throw ShapeError("objective_grad: factors do not match the problem dimension");
  }
  const auto z = target_on_omega(prob.z0, *prob.omega);
  return detail::evaluate(x, prob.omega, z, prob.sigma, prob.lambda, cfg).grad;
}

/// Penalty objective h(X,Y) + (1/2λ)‖A_Ω − Z₀‖². h uses the dense oracle when
/// d is within the cap and the truncated trace estimate otherwise.
inline double objective_value(const LoramFactors& x, const ProjectionProblem& prob,
                              std::size_t oracle_cap = kDefaultOracleCap,
                              const KernelConfig& kernel = {}) {
  const SparseGraphMatrix a = loram_assemble(x, prob.omega);
  const double h = prob.z0.dim() <= oracle_cap
                       ? h_exact(a, prob.sigma, oracle_cap)
                       : trace_exp_estimate(apply_sigma(a, prob.sigma), 32, 20240917, kernel);
  const auto z = target_on_omega(prob.z0, *prob.omega);
  double fit = z.outside_sq;
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    const double r = a.value(k) - z.values[k];
    fit += r * r;
  }
  return h + fit / (2.0 * prob.lambda);
}

/// Barzilai–Borwein step ‖z‖²/⟨z, w⟩, or the fallback when the curvature
/// estimate is nonpositive, negligible or non-finite.
inline double bb_stepsize(const FactorPair& z, const FactorPair& w, double fallback) {
  const double zz = z.squared_norm();
  const double zw = z.dot(w);
  if (!(zw > 1e-16 * std::sqrt(zz) * w.norm())) return fallback;
  const double s = zz / zw;
  if (!std::isfinite(s) || s <= 0.0) return fallback;
  return s;
}

/// Curvature bound L̂ = (1/λ + 1)·(max_i Σ_{j∈Ω_i} ‖y_j‖² + max_j Σ_{i∈Ω^j} ‖x_i‖²),
/// the squared Jacobian bound of (X,Y) ↦ A_Ω times an entrywise curvature
/// bound of the objective near the origin. Returns step_cap/L̂.
inline double step_ceiling(const LoramFactors& f, const CandidateSet& omega, double lambda,
                           double step_cap) {
  const std::size_t d = omega.dim();
  std::vector<double> yn(d, 0.0), xn(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (double v : f.y.row(i)) yn[i] += v * v;
    for (double v : f.x.row(i)) xn[i] += v * v;
  }
  std::vector<double> by_row(d, 0.0), by_col(d, 0.0);
  for (std::size_t k = 0; k < omega.size(); ++k) {
    by_row[omega.row(k)] += yn[omega.col(k)];
    by_col[omega.col(k)] += xn[omega.row(k)];
  }
  const double j2 = *std::max_element(by_row.begin(), by_row.end()) +
                    *std::max_element(by_col.begin(), by_col.end());
  const double inv_lambda = std::isinf(lambda) ? 0.0 : 1.0 / lambda;
  const double l_hat = (inv_lambda + 1.0) * j2;
  if (!(l_hat > 0.0)) return std::numeric_limits<double>::infinity();
  return step_cap / l_hat;
}

/// T_ε: keeps entries with |v| ≥ τ, where τ = ε·max|v| in relative mode and
/// τ = ε otherwise.
inline SparseGraphMatrix hard_threshold(const SparseGraphMatrix& a, double eps_star,
                                        bool relative = true) {
  if (eps_star < 0.0) throw InvalidArgument("hard_threshold: eps_star must be nonnegative");
  if (eps_star == 0.0) return a;
  const double tau = relative ? eps_star * a.max_abs() : eps_star;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> values;
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    if (std::abs(a.value(k)) >= tau && a.value(k) != 0.0) {
      pairs.emplace_back(a.row(k), a.col(k));
      values.push_back(a.value(k));
    }
  }
  return {std::make_shared<CandidateSet>(a.dim(), std::move(pairs)), std::move(values)};
}

/// Initial factors: standard normal entries scaled so that ‖A_Ω(X₀,Y₀)‖_F =
/// c₀/10, inside the region where the approximate gradient is reliable.
inline LoramFactors initial_factors(std::size_t d, std::size_t rank, const PatternPtr& omega,
                                    double c0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LoramFactors x{DenseThin::gaussian(d, rank, rng), DenseThin::gaussian(d, rank, rng)};
  const double norm = loram_assemble(x, omega).frobenius_norm();
  if (norm > 0.0) x *= std::sqrt((c0 / 10.0) / norm);
  return x;
}

/// Accelerated gradient descent with Barzilai–Borwein steps:
///   x₁ = x₀ − s₀∇F(x₀),  y₀ = x₀,  y₁ = x₁
///   s_t = ‖y_t − y_{t−1}‖² / ⟨y_t − y_{t−1}, ∇F(y_t) − ∇F(y_{t−1})⟩,
///         clipped to step_ceiling(y_t)
///   x_{t+1} = y_t − s_t∇F(y_t)
///   y_{t+1} = x_{t+1} + t/(t+3)·(x_{t+1} − x_t)
/// Z₀ is rescaled to norm c₀/10 first. The run stops once the gradient norm at
/// the current point falls to grad_tol times its value at x₀ (or is exactly
/// zero at x₀); that point is returned.
/// x0, when given, replaces the random initial factors.
inline SolveReport agd_solve(const ProjectionProblem& prob, const SolverConfig& cfg,
                             const std::optional<LoramFactors>& x0 = std::nullopt) {
  using clock = std::chrono::steady_clock;
  prob.validate();
  cfg.validate();
  const auto t_start = clock::now();

  SolveReport rep;
  const std::size_t d = prob.z0.dim();
  const Rescaled scaled = rescale_input(prob.z0, prob.c0);
  rep.rescale_factor = scaled.factor;
  const TargetOnOmega z = target_on_omega(scaled.matrix, *prob.omega);
  auto eval = [&](const FactorPair& p) {
    return detail::evaluate(p, prob.omega, z, prob.sigma, prob.lambda, cfg);
  };
  auto h_value = [&](const FactorPair& p) -> std::pair<double, bool> {
    const SparseGraphMatrix a = loram_assemble(p, prob.omega);
    if (d <= cfg.oracle_cap) return {h_exact(a, prob.sigma, cfg.oracle_cap), true};
    return {trace_exp_estimate(apply_sigma(a, prob.sigma), 32, 20240917, cfg.kernel), false};
  };

  if (x0 && (x0->dim() != d || x0->rank() != prob.rank || !x0->x.same_shape(x0->y))) {
    throw ShapeError("agd_solve: initial factors must be d x rank");
  }
  LoramFactors x_prev = x0 ? *x0 : initial_factors(d, prob.rank, prob.omega, prob.c0, cfg.seed);
  rep.times.setup_ms = detail::ms_since(t_start);
  const auto t_iter = clock::now();

  LoramFactors result = x_prev;
  if (cfg.max_iters > 0) {
    auto record = [&](std::size_t iter, const detail::Evaluation& ev, double step,
                      const FactorPair& at) {
      IterationRecord r;
      r.iter = iter;
      r.grad_norm = ev.grad.norm();
      r.stepsize = step;
      r.data_fit = ev.data_fit;
      if (cfg.record_h) r.h_value = h_value(at).first;
      r.elapsed_ms = detail::ms_since(t_iter);
      rep.history.push_back(r);
      if (!std::isfinite(r.grad_norm)) {
        throw DivergenceError("non-finite gradient at iteration " + std::to_string(iter), iter);
      }
      return r.grad_norm;
    };

    detail::Evaluation ev_prev = eval(x_prev);
    double gnorm = record(0, ev_prev, cfg.s0, x_prev);
    rep.final_grad_norm = gnorm;
    const double stop = cfg.grad_tol * gnorm;
    if (gnorm == 0.0) {
      rep.converged = true;
    } else {
      LoramFactors x_cur = x_prev;
      x_cur.axpy(-cfg.s0, ev_prev.grad);
      LoramFactors y_prev = x_prev;
      LoramFactors y_cur = x_cur;
      result = y_cur;
      for (std::size_t t = 1; t < cfg.max_iters; ++t) {
        detail::Evaluation ev = eval(y_cur);
        double step = bb_stepsize(y_cur - y_prev, ev.grad - ev_prev.grad, cfg.bb_fallback);
        if (cfg.step_cap > 0.0) {
          step = std::min(step, step_ceiling(y_cur, *prob.omega, prob.lambda, cfg.step_cap));
        }
        gnorm = record(t, ev, step, y_cur);
        rep.final_grad_norm = gnorm;
        result = y_cur;
        if (gnorm <= stop) {
          rep.converged = true;
          break;
        }
        LoramFactors x_next = y_cur;
        x_next.axpy(-step, ev.grad);
        LoramFactors y_next = x_next;
        y_next.axpy(static_cast<double>(t) / static_cast<double>(t + 3), x_next - x_cur);
        x_cur = std::move(x_next);
        y_prev = std::move(y_cur);
        y_cur = std::move(y_next);
        ev_prev = std::move(ev);
        if (!y_cur.all_finite()) {
          throw DivergenceError("non-finite iterate at iteration " + std::to_string(t), t);
        }
        result = y_cur;
      }
    }
  }
  rep.times.iterate_ms = detail::ms_since(t_iter);

  const auto t_finish = clock::now();
  rep.x_star = std::move(result);
  rep.a_omega_star = loram_assemble(rep.x_star, prob.omega);
  rep.a_star = hard_threshold(rep.a_omega_star, prob.eps_star, prob.relative_threshold);
  rep.data_fit = eval(rep.x_star).data_fit;
  if (d <= cfg.oracle_cap) {
    rep.h_gap = h_gap_exact(rep.a_omega_star, prob.sigma, cfg.oracle_cap);
    rep.h_gap_exact = true;
  } else if (cfg.record_h) {
    rep.h_gap = h_value(rep.x_star).first - static_cast<double>(d);
  }
  rep.times.finish_ms = detail::ms_since(t_finish);
  return rep;
}

struct LambdaRun {
  double lambda = 0.0;
  std::optional<SolveReport> report;
  double objective = std::numeric_limits<double>::infinity();
  std::string error;
};

struct SweepResult {
  double best_lambda = 0.0;
  std::size_t best_index = 0;
  std::vector<LambdaRun> runs;

  const SolveReport& best() const { return *runs[best_index].report; }
};

/// Solves once per λ and keeps the λ whose solution has the lowest penalty
/// objective (in solver units). Ties go to the smaller λ. A failing λ is
/// recorded and skipped.
inline SweepResult lambda_sweep(const ProjectionProblem& tmpl, const std::vector<double>& lambdas,
                                const SolverConfig& cfg) {
  if (lambdas.empty()) throw InvalidArgument("lambda_sweep: empty lambda set");
  SweepResult out;
  bool any = false;
  for (double lambda : lambdas) {
    LambdaRun run;
    run.lambda = lambda;
    try {
      ProjectionProblem p = tmpl;
      p.lambda = lambda;
      SolveReport rep = agd_solve(p, cfg);
      ProjectionProblem scaled = p;
      scaled.z0 = p.z0.scaled(rep.rescale_factor);
      run.objective = objective_value(rep.x_star, scaled, cfg.oracle_cap, cfg.kernel);
      run.report = std::move(rep);
    } catch (const Error& e) {
      run.error = e.kind() + ": " + e.what();
    }
    out.runs.push_back(std::move(run));
    const auto& cur = out.runs.back();
    if (!cur.report) continue;
    const auto& best = out.runs[out.best_index];
    if (!any || cur.objective < best.objective ||
        (cur.objective == best.objective && cur.lambda < best.lambda)) {
      out.best_index = out.runs.size() - 1;
      out.best_lambda = cur.lambda;
      any = true;
    }
  }
  if (!any) throw SweepError("lambda_sweep: every lambda failed");
  return out;
}

}  // namespace loram
