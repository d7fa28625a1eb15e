// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "loram/loram.hpp"

using namespace loram;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double ms_of(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median3(const std::function<void()>& fn) {
  std::vector<double> t{ms_of(fn), ms_of(fn), ms_of(fn)};
  std::sort(t.begin(), t.end());
  return t[1];
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Symmetric off-diagonal Ω from a random undirected graph with |Ω| ≈ ρd².
PatternPtr undirected_omega(std::size_t d, double rho, std::mt19937_64& rng) {
  const auto target = static_cast<std::size_t>(std::llround(rho * double(d) * double(d)));
  std::uniform_int_distribution<std::size_t> pick(0, d - 1);
  std::set<std::pair<std::size_t, std::size_t>> s;
  while (s.size() < target) {
    auto i = pick(rng), j = pick(rng);
    if (i == j) continue;
    s.emplace(i, j);
    s.emplace(j, i);
  }
  return std::make_shared<CandidateSet>(
      d, std::vector<std::pair<std::size_t, std::size_t>>(s.begin(), s.end()),
      DiagonalPolicy::Reject);
}

// Off-diagonal Ω with independent directed pairs.
PatternPtr directed_omega(std::size_t d, double rho, std::mt19937_64& rng) {
  const auto target = static_cast<std::size_t>(std::llround(rho * double(d) * double(d)));
  std::uniform_int_distribution<std::size_t> pick(0, d - 1);
  std::set<std::pair<std::size_t, std::size_t>> s;
  while (s.size() < target) {
    auto i = pick(rng), j = pick(rng);
    if (i != j) s.emplace(i, j);
  }
  return std::make_shared<CandidateSet>(
      d, std::vector<std::pair<std::size_t, std::size_t>>(s.begin(), s.end()),
      DiagonalPolicy::Reject);
}

LoramFactors factors_at_norm(std::size_t d, std::size_t r, const PatternPtr& om, double norm,
                             std::mt19937_64& rng) {
  LoramFactors f{DenseThin::gaussian(d, r, rng), DenseThin::gaussian(d, r, rng)};
  const double n = loram_assemble(f, om).frobenius_norm();
  if (n > 0.0) f *= std::sqrt(norm / n);
  return f;
}

// Instances whose thresholded outputs feed the hygiene criterion.
struct Solved {
  std::string label;
  SparseGraphMatrix a_star;
};
std::vector<Solved> g_solved;

struct Instance {
  GroundTruth gt;
  ProjectionProblem prob;
};

Instance make_case_b(std::size_t d, double rho, std::uint64_t seed, std::size_t rank,
                     double lambda) {
  GroundTruth gt = er_dag(d, rho, {}, seed);
  auto z0 = add_noise(gt, Reversal{0.4}, seed + 1000);
  return {gt, ProjectionProblem::from_graph(z0, rank, lambda)};
}

Instance make_case_a(std::size_t d, double rho, double sigma_e, double p, std::uint64_t seed) {
  GroundTruth gt = er_dag(d, rho, {}, seed);
  auto z0 = add_noise(gt, BernoulliGaussian{sigma_e, p}, seed + 1000);
  return {gt, ProjectionProblem::from_graph(z0, 40, 5.0)};
}

SolverConfig config_for(std::uint64_t seed) {
  SolverConfig cfg;
  cfg.seed = seed + 2000;
  return cfg;
}

// 1. h_exact separates DAGs from cyclic graphs.
Outcome criterion1() {
  Outcome o;
  double worst_dag = 0.0, least_cyclic = INFINITY;
  int dags = 0, cyclic = 0;
  for (std::uint64_t seed = 0; dags < 100; ++seed) {
    const std::size_t d = 20 + (seed * 37) % 181;
    auto gt = er_dag(d, d < 50 ? 0.05 : 0.01, {}, seed);
    const auto mode = seed % 2 ? SigmaMode::Abs : SigmaMode::Square;
    worst_dag = std::max(worst_dag, std::abs(h_exact(gt.a_star, mode) - double(d)));
    ++dags;
  }
  for (std::uint64_t seed = 0; cyclic < 100; ++seed) {
    const std::size_t d = 20 + (seed * 53) % 181;
    auto gt = er_dag(d, d < 50 ? 0.05 : 0.01, {}, 500 + seed);
    if (gt.a_star.nnz() == 0) continue;
    auto z = add_noise(gt, Reversal{0.4}, seed);
    const auto mode = seed % 2 ? SigmaMode::Abs : SigmaMode::Square;
    least_cyclic = std::min(least_cyclic, h_exact(z, mode) - double(d));
    ++cyclic;
  }
  o.pass = worst_dag <= 1e-8 && least_cyclic >= 1e-6;
  o.detail = "max |h-d| on 100 DAGs " + fmt(worst_dag) + ", min h-d on 100 cyclic graphs " +
             fmt(least_cyclic);
  return o;
}

// 2. Exact gradient against central finite differences of h - d.
Outcome criterion2() {
  Outcome o;
  double worst = 0.0;
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 10 + static_cast<std::size_t>(t) % 21;
    const std::size_t r = 1 + static_cast<std::size_t>(t) % 5;
    const auto mode = t % 2 ? SigmaMode::Abs : SigmaMode::Square;
    auto om = directed_omega(d, 0.15, rng);
    auto f = factors_at_norm(d, r, om, 0.1 * (0.2 + 0.8 * (t % 5) / 4.0), rng);
    auto g = grad_h_exact(f, om, mode);
    GradPair fd = zeros_like(f);
    LoramFactors p = f;
    const double step = 1e-5;
    for (int which = 0; which < 2; ++which) {
      DenseThin& m = which == 0 ? p.x : p.y;
      DenseThin& out = which == 0 ? fd.x : fd.y;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < r; ++k) {
          const double keep = m(i, k);
          m(i, k) = keep + step;
          const double up = h_gap_exact(loram_assemble(p, om), mode);
          m(i, k) = keep - step;
          const double dn = h_gap_exact(loram_assemble(p, om), mode);
          m(i, k) = keep;
          out(i, k) = (up - dn) / (2.0 * step);
        }
      }
    }
    worst = std::max(worst, relative_error(g, fd));
  }
  o.pass = worst <= 1e-5;
  o.detail = "max relative error over 20 instances " + fmt(worst);
  return o;
}

// 3. Approximate vs exact gradient over the (ρ, ‖A_Ω‖_F) grid.
Outcome criterion3() {
  Outcome o;
  const std::size_t d = 200, r = 40;
  double min_cos = 1.0, max_err = 0.0;
  std::string failures;
  for (double rho : {1e-3, 5e-3, 1e-2, 5e-2}) {
    for (double norm : {0.01, 0.05, 0.1}) {
      for (std::uint64_t trial = 0; trial < 5; ++trial) {
        std::mt19937_64 rng(3000 + trial);
        auto om = undirected_omega(d, rho, rng);
        auto f = factors_at_norm(d, r, om, norm, rng);
        for (auto mode : {SigmaMode::Abs, SigmaMode::Square}) {
          auto ge = grad_h_exact(f, om, mode);
          auto ga = grad_h_approx(f, om, mode);
          double c = -2.0;
          try {
            c = cosine_similarity(ga, ge);
          } catch (const UndefinedSimilarity&) {
          }
          const double e = relative_error(ga, ge);
          min_cos = std::min(min_cos, c);
          max_err = std::max(max_err, e);
          if (c < 0.99 || e > 0.05) {
            failures += " (rho=" + fmt(rho) + ",norm=" + fmt(norm) + ",trial=" +
                        std::to_string(trial) + ")";
          }
        }
      }
    }
  }
  o.pass = failures.empty();
  o.detail = "12 cells x 5 trials x 2 sigma modes: min cosine " + fmt(min_cos) +
             ", max relative error " + fmt(max_err) + failures;
  return o;
}

// 4. Case (b), σ_E = 0.4, (λ, r) = (5, 40).
Outcome criterion4() {
  Outcome o;
  std::ostringstream det;
  for (std::size_t d : {100, 200}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto inst = make_case_b(d, 1e-3, seed, 40, 5.0);
      auto rep = agd_solve(inst.prob, config_for(seed));
      auto s = score(rep.a_star, inst.gt.a_star);
      g_solved.push_back({"case-b d=" + std::to_string(d) + " seed=" + std::to_string(seed),
                          rep.a_star});
      const bool ok = d == 100 ? (s.shd == 0 && s.tpr == 1.0 && s.fdr == 0.0)
                               : (s.shd <= 2 && s.tpr >= 0.97);
      o.pass = o.pass && ok;
      det << " d=" << d << "/s" << seed << ":shd=" << s.shd << ",tpr=" << fmt(s.tpr)
          << ",fdr=" << fmt(s.fdr);
    }
  }
  o.detail = det.str();
  return o;
}

// 5. Case (a), σ_E = 0.1.
Outcome criterion5() {
  Outcome o;
  std::ostringstream det;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto inst = make_case_a(200, 1e-2, 0.1, 5e-4, seed);
    auto rep = agd_solve(inst.prob, config_for(seed));
    auto s = score(rep.a_star, inst.gt.a_star);
    g_solved.push_back({"case-a d=200 seed=" + std::to_string(seed), rep.a_star});
    o.pass = o.pass && s.tpr == 1.0 && s.fdr <= 2e-2;
    det << " d=200/s" << seed << ":tpr=" << fmt(s.tpr) << ",fdr=" << fmt(s.fdr)
        << ",shd=" << s.shd;
  }
  auto inst = make_case_a(500, 1e-2, 0.1, 5e-4, 1);
  auto rep = agd_solve(inst.prob, config_for(1));
  auto s = score(rep.a_star, inst.gt.a_star);
  g_solved.push_back({"case-a d=500 seed=1", rep.a_star});
  o.pass = o.pass && s.tpr == 1.0 && s.fdr <= 2e-2 && s.shd <= 50;
  det << " d=500:tpr=" << fmt(s.tpr) << ",fdr=" << fmt(s.fdr) << ",shd=" << s.shd;
  o.detail = det.str();
  return o;
}

// 6. Approximate gradient at d = 1000 against the exact one at d = 500.
Outcome criterion6() {
  Outcome o;
  std::mt19937_64 rng(6);
  auto om_big = directed_omega(1000, 1e-3, rng);
  auto f_big = factors_at_norm(1000, 40, om_big, 0.05, rng);
  auto om_mid = directed_omega(500, 1e-3, rng);
  auto f_mid = factors_at_norm(500, 40, om_mid, 0.05, rng);
  const double t_approx = median3([&] { (void)grad_h_approx(f_big, om_big, SigmaMode::Abs); });
  const double t_exact = median3([&] { (void)grad_h_exact(f_mid, om_mid, SigmaMode::Abs); });
  const double bound = t_exact * 8.0 / 10.0;
  o.pass = t_approx <= bound;
  o.detail = "t_approx(d=1000)=" + fmt(t_approx) + "ms, t_exact(d=500)=" + fmt(t_exact) +
             "ms, bound " + fmt(bound) + "ms";
  return o;
}

// 7. TPR stability over the rank sweep.
Outcome criterion7() {
  Outcome o;
  std::vector<double> tprs;
  std::ostringstream det;
  for (std::size_t r : {25, 30, 40, 50}) {
    auto inst = make_case_b(500, 5e-3, 1, r, 5.0);
    auto rep = agd_solve(inst.prob, config_for(1));
    auto s = score(rep.a_star, inst.gt.a_star);
    tprs.push_back(s.tpr);
    det << " r=" << r << ":tpr=" << fmt(s.tpr);
  }
  const double hi = *std::max_element(tprs.begin(), tprs.end());
  const double lo = *std::min_element(tprs.begin(), tprs.end());
  o.pass = hi - lo <= 0.05;
  det << " spread " << fmt(hi - lo);
  o.detail = det.str();
  return o;
}

// 8. Determinism and acyclicity of the outputs of criteria 4-5.
Outcome criterion8() {
  Outcome o;
  auto inst = make_case_b(200, 1e-3, 1, 40, 5.0);
  const bool same = same_numerics(agd_solve(inst.prob, config_for(1)),
                                  agd_solve(inst.prob, config_for(1)));
  auto inst_a = make_case_a(200, 1e-2, 0.1, 5e-4, 2);
  const bool same_a = same_numerics(agd_solve(inst_a.prob, config_for(2)),
                                    agd_solve(inst_a.prob, config_for(2)));
  std::string cyclic;
  for (const auto& s : g_solved)
    if (!is_acyclic(s.a_star)) cyclic += " [" + s.label + "]";
  o.pass = same && same_a && cyclic.empty();
  o.detail = std::string("repeat runs identical: ") + (same && same_a ? "yes" : "no") + "; " +
             std::to_string(g_solved.size()) + " outputs checked, cyclic:" +
             (cyclic.empty() ? " none" : cyclic);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"acyclicity characterization", criterion1},
      {"exact gradient vs finite differences", criterion2},
      {"approximate gradient fidelity grid", criterion3},
      {"case (b) recovery at d=100, 200", criterion4},
      {"case (a) recovery at d=200 and d=500", criterion5},
      {"approximate gradient cost vs exact", criterion6},
      {"rank sensitivity at d=500", criterion7},
      {"determinism and acyclic outputs", criterion8},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const double ms = ms_of([&] {
      try {
        o = criteria[k].second();
      } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
      }
    });
    failed += o.pass ? 0 : 1;
    o.detail.erase(0, o.detail.find_first_not_of(' '));
    std::printf("criterion %zu: %s  %s (%.1fs) -- %s\n", k + 1, o.pass ? "PASS" : "FAIL",
                criteria[k].first.c_str(), ms / 1000.0, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
