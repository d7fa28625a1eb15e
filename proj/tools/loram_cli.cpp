// loram: generate graphs, project onto the LoRAM DAG set, and run the
// benchmark sweeps. Every run writes manifest.json plus its CSV outputs into
// the output directory (--out, else $LORAM_OUT_DIR, else ./loram_out).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loram/loram.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace loram;

namespace {

constexpr const char* kOutEnv = "LORAM_OUT_DIR";

struct Params {
  std::vector<std::size_t> d;
  std::vector<std::size_t> rank;
  std::vector<double> rho;
  std::vector<double> scale;
  std::optional<double> sigma_e;
  double p = 5e-4;
  double lambda = 5.0;
  std::string noise_case = "b";
  std::string sigma_mode = "abs";
  std::string variant = "taylor";
  std::uint64_t seed = 1;
  std::string out;
  std::size_t oracle_cap = kDefaultOracleCap;
  double eps_star = 5e-2;
  bool relative_threshold = true;
  std::size_t max_iters = 500;
  double grad_tol = 1e-4;
  std::size_t jobs = 1;
  std::string input, truth, pred;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error("usage", what) {}
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

SigmaMode sigma_of(const Params& p) {
  return p.sigma_mode == "square" ? SigmaMode::Square : SigmaMode::Abs;
}

double sigma_e_of(const Params& p) {
  if (p.sigma_e) return *p.sigma_e;
  return p.noise_case == "a" ? 0.1 : 0.4;
}

NoiseModel noise_of(const Params& p) {
  if (p.noise_case == "a") return BernoulliGaussian{sigma_e_of(p), p.p};
  return Reversal{sigma_e_of(p)};
}

SolverConfig solver_of(const Params& p, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.seed = seed + 2000;
  cfg.max_iters = p.max_iters;
  cfg.grad_tol = p.grad_tol;
  cfg.oracle_cap = p.oracle_cap;
  cfg.kernel.variant = p.variant == "verbatim" ? KernelVariant::Verbatim : KernelVariant::TaylorSum;
  return cfg;
}

ProjectionProblem problem_of(const Params& p, SparseGraphMatrix z0, std::size_t rank,
                             double lambda) {
  auto prob = ProjectionProblem::from_graph(std::move(z0), rank, lambda, sigma_of(p));
  prob.eps_star = p.eps_star;
  prob.relative_threshold = p.relative_threshold;
  return prob;
}

struct Instance {
  GroundTruth gt;
  SparseGraphMatrix z0;
};

// Graph seed s, noise seed s + 1000, solver seed s + 2000.
Instance make_instance(const Params& p, std::size_t d, double rho, std::uint64_t seed) {
  GroundTruth gt = er_dag(d, rho, {}, seed);
  auto z0 = add_noise(gt, noise_of(p), seed + 1000);
  return {std::move(gt), std::move(z0)};
}

std::string cell(double v) { return io::format_double(v); }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(const std::optional<double>& v) { return v ? cell(*v) : ""; }
std::string cell(const std::optional<std::size_t>& v) { return v ? cell(*v) : ""; }

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error("io", "cannot open " + path.string() + " for writing");
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) out_ << (k ? "," : "") << fields[k];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// Runs fn(0..n-1) on up to `jobs` threads. Callers store results by index so
// output order never depends on scheduling.
void for_each_cell(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k; (k = next++) < n;) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

json manifest_of(const std::string& command, const Params& p) {
  json m;
  m["command"] = command;
  m["seed"] = p.seed;
  m["d"] = p.d;
  m["rank"] = p.rank;
  m["rho"] = p.rho;
  if (!p.scale.empty()) m["scale"] = p.scale;
  m["case"] = p.noise_case;
  m["sigma_e"] = sigma_e_of(p);
  m["p"] = p.p;
  m["lambda"] = p.lambda;
  m["sigma_mode"] = p.sigma_mode;
  m["variant"] = p.variant;
  m["oracle_cap"] = p.oracle_cap;
  m["eps_star"] = p.eps_star;
  m["relative_threshold"] = p.relative_threshold;
  m["max_iters"] = p.max_iters;
  m["grad_tol"] = p.grad_tol;
  m["jobs"] = p.jobs;
  if (!p.input.empty()) m["input"] = p.input;
  if (!p.truth.empty()) m["truth"] = p.truth;
  if (!p.pred.empty()) m["pred"] = p.pred;
  m["out"] = p.out;
  m["seed_offsets"] = {{"graph", 0}, {"noise", 1000}, {"solver", 2000}};
  return m;
}

void write_manifest(const fs::path& dir, json m, const std::vector<std::string>& outputs) {
  m["outputs"] = outputs;
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m["written_at"] = stamp;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("io", "cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

std::size_t single(const std::vector<std::size_t>& v, const char* flag) {
  if (v.size() != 1) throw UsageError(std::string(flag) + " takes one value for this command");
  return v.front();
}
double single(const std::vector<double>& v, const char* flag) {
  if (v.size() != 1) throw UsageError(std::string(flag) + " takes one value for this command");
  return v.front();
}

// ---- commands -------------------------------------------------------------

std::vector<std::string> run_generate(const Params& p, const fs::path& dir) {
  const std::size_t d = single(p.d, "--d");
  const double rho = single(p.rho, "--rho");
  auto inst = make_instance(p, d, rho, p.seed);
  io::save_sparse((dir / "a_star.txt").string(), inst.gt.a_star);
  io::save_sparse((dir / "z0.txt").string(), inst.z0);
  json side;
  side["d"] = d;
  side["density"] = rho;
  side["weights"] = {inst.gt.weights.low, inst.gt.weights.high};
  side["noise"] = describe(noise_of(p));
  side["nnz_a_star"] = inst.gt.a_star.nnz();
  side["nnz_z0"] = inst.z0.nnz();
  side["acyclic_a_star"] = is_acyclic(inst.gt.a_star);
  side["topological_order"] = inst.gt.order;
  std::ofstream(dir / "generation.json") << side.dump(2) << '\n';
  return {"a_star.txt", "z0.txt", "generation.json"};
}

std::vector<std::string> run_project(const Params& p, const fs::path& dir) {
  const std::size_t rank = single(p.rank, "--rank");
  SparseGraphMatrix z0;
  std::optional<SparseGraphMatrix> truth;
  if (!p.input.empty()) {
    z0 = io::load_sparse(p.input);
    if (!p.truth.empty()) truth = io::load_sparse(p.truth);
  } else {
    auto inst = make_instance(p, single(p.d, "--d"), single(p.rho, "--rho"), p.seed);
    z0 = std::move(inst.z0);
    truth = std::move(inst.gt.a_star);
  }
  auto prob = problem_of(p, z0, rank, p.lambda);
  const auto t0 = Clock::now();
  auto rep = agd_solve(prob, solver_of(p, p.seed));
  const double runtime = ms_since(t0);

  CsvWriter it(dir / "iterations.csv",
               {"iter", "grad_norm", "stepsize", "data_fit", "h_est", "elapsed_ms"});
  for (const auto& r : rep.history) {
    it.row({cell(r.iter), cell(r.grad_norm), cell(r.stepsize), cell(r.data_fit),
            std::isnan(r.h_value) ? "" : cell(r.h_value), cell(r.elapsed_ms)});
  }
  const auto a_out = rep.a_star_input_scale();
  io::save_sparse((dir / "a_star.txt").string(), a_out);

  std::optional<StructScores> s;
  if (truth) s = score(a_out, *truth);
  auto opt = [&](auto get) -> std::optional<double> {
    if (!s) return std::nullopt;
    return static_cast<double>(get(*s));
  };
  CsvWriter sum(dir / "summary.csv",
                {"d", "lambda", "rank", "iters", "converged", "final_grad_norm", "data_fit",
                 "h_gap", "h_gap_exact", "runtime_ms", "nnz", "acyclic", "tpr", "fdr", "fpr",
                 "shd"});
  sum.row({cell(z0.dim()), cell(p.lambda), cell(rank), cell(rep.history.size()),
           rep.converged ? "true" : "false", cell(rep.final_grad_norm), cell(rep.data_fit),
           std::isnan(rep.h_gap) ? "" : cell(rep.h_gap), rep.h_gap_exact ? "true" : "false",
           cell(runtime), cell(a_out.nnz()), is_acyclic(a_out) ? "true" : "false",
           cell(opt([](auto& x) { return x.tpr; })), cell(opt([](auto& x) { return x.fdr; })),
           cell(opt([](auto& x) { return x.fpr; })),
           cell(opt([](auto& x) { return double(x.shd); }))});
  return {"iterations.csv", "summary.csv", "a_star.txt"};
}

// Symmetric off-diagonal Ω from a random undirected graph with |Ω| ≈ ρd².
PatternPtr undirected_omega(std::size_t d, double rho, std::mt19937_64& rng) {
  const auto target = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(rho * double(d) * double(d))), d * (d - 1));
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

double median3(const std::function<void()>& fn) {
  std::vector<double> t(3);
  for (auto& v : t) {
    const auto t0 = Clock::now();
    fn();
    v = ms_since(t0);
  }
  std::sort(t.begin(), t.end());
  return t[1];
}

std::vector<std::string> run_grad_bench(const Params& p, const fs::path& dir) {
  const std::size_t r = single(p.rank, "--rank");
  struct Cell {
    std::size_t d;
    double rho, scale;
    double t_approx = 0.0;
    std::optional<double> t_exact, cosine, rel_err;
  };
  std::vector<Cell> cells;
  for (auto d : p.d)
    for (double rho : p.rho)
      for (double sc : p.scale) cells.push_back({d, rho, sc, 0.0, {}, {}, {}});
  const auto mode = sigma_of(p);
  KernelConfig kcfg = solver_of(p, p.seed).kernel;

  for_each_cell(cells.size(), p.jobs, [&](std::size_t k) {
    Cell& c = cells[k];
    std::mt19937_64 rng(p.seed * 1000003u + k);
    auto om = undirected_omega(c.d, c.rho, rng);
    LoramFactors f{DenseThin::gaussian(c.d, r, rng), DenseThin::gaussian(c.d, r, rng)};
    const double n = loram_assemble(f, om).frobenius_norm();
    if (n > 0.0) f *= std::sqrt(c.scale / n);
    GradPair ga;
    c.t_approx = median3([&] { ga = grad_h_approx(f, om, mode, kcfg); });
    if (c.d <= p.oracle_cap) {
      GradPair ge;
      c.t_exact = median3([&] { ge = grad_h_exact(f, om, mode, p.oracle_cap); });
      try {
        c.cosine = cosine_similarity(ga, ge);
      } catch (const UndefinedSimilarity&) {
      }
      if (ge.norm() > 0.0) c.rel_err = relative_error(ga, ge);
    }
  });

  CsvWriter w(dir / "grad_bench.csv",
              {"d", "rho", "scale", "t_exact_ms", "t_approx_ms", "cosine", "rel_err"});
  for (const auto& c : cells) {
    w.row({cell(c.d), cell(c.rho), cell(c.scale), cell(c.t_exact), cell(c.t_approx),
           cell(c.cosine), cell(c.rel_err)});
  }
  return {"grad_bench.csv"};
}

std::vector<std::string> run_rank_sweep(const Params& p, const fs::path& dir) {
  const std::size_t d = single(p.d, "--d");
  struct Cell {
    double rho;
    std::size_t r;
    StructScores s;
    std::optional<std::size_t> rank_solution;
  };
  std::vector<Cell> cells;
  for (double rho : p.rho)
    for (auto r : p.rank) cells.push_back({rho, r, {}, std::nullopt});
  for_each_cell(cells.size(), p.jobs, [&](std::size_t k) {
    Cell& c = cells[k];
    auto inst = make_instance(p, d, c.rho, p.seed);
    auto rep = agd_solve(problem_of(p, inst.z0, c.r, p.lambda), solver_of(p, p.seed));
    c.s = score(rep.a_star, inst.gt.a_star);
    if (d <= p.oracle_cap) c.rank_solution = numerical_rank(rep.a_star, 1e-6, p.oracle_cap);
  });
  CsvWriter w(dir / "rank_sweep.csv", {"rho_star", "r", "tpr", "fdr", "shd", "rank_solution"});
  for (const auto& c : cells) {
    w.row({cell(c.rho), cell(c.r), cell(c.s.tpr), cell(c.s.fdr), cell(c.s.shd),
           cell(c.rank_solution)});
  }
  return {"rank_sweep.csv"};
}

std::vector<std::string> run_scale_bench(const Params& p, const fs::path& dir) {
  const std::size_t r = single(p.rank, "--rank");
  const double rho = single(p.rho, "--rho");
  struct Cell {
    std::size_t d;
    double runtime = 0.0;
    StructScores s;
  };
  std::vector<Cell> cells;
  for (auto d : p.d) cells.push_back({d, 0.0, {}});
  // Timed solves stay sequential regardless of --jobs.
  for (auto& c : cells) {
    auto inst = make_instance(p, c.d, rho, p.seed);
    auto prob = problem_of(p, inst.z0, r, p.lambda);
    const auto cfg = solver_of(p, p.seed);
    const auto t0 = Clock::now();
    auto rep = agd_solve(prob, cfg);
    c.runtime = ms_since(t0);
    c.s = score(rep.a_star, inst.gt.a_star);
  }
  CsvWriter w(dir / "scale_bench.csv", {"d", "lambda", "r", "runtime_ms", "tpr", "fdr", "shd"});
  for (const auto& c : cells) {
    w.row({cell(c.d), cell(p.lambda), cell(r), cell(c.runtime), cell(c.s.tpr), cell(c.s.fdr),
           cell(c.s.shd)});
  }
  return {"scale_bench.csv"};
}

std::vector<std::string> run_score(const Params& p, const fs::path& dir) {
  if (p.pred.empty() || p.truth.empty()) throw UsageError("score needs --pred and --truth");
  const auto pred = io::load_sparse(p.pred);
  const auto truth = io::load_sparse(p.truth);
  const auto s = score(pred, truth);
  CsvWriter w(dir / "score.csv", {"d", "nnz_pred", "nnz_true", "tpr", "fdr", "fpr", "shd",
                                  "reversed", "acyclic_pred"});
  w.row({cell(pred.dim()), cell(s.nnz_pred), cell(s.nnz_true), cell(s.tpr), cell(s.fdr),
         cell(s.fpr), cell(s.shd), cell(s.reversed), is_acyclic(pred) ? "true" : "false"});
  return {"score.csv"};
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += (ch == '\n' || ch == '\r') ? ' ' : ch;
  }
  return out + "\"";
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << "error kind=" << kind << " message=" << quoted(message) << '\n';
  return code;
}

// Default lists per command when the corresponding flag is absent.
void fill_defaults(const std::string& cmd, Params& p) {
  auto set_d = [&](std::vector<std::size_t> v) { if (p.d.empty()) p.d = std::move(v); };
  auto set_rho = [&](std::vector<double> v) { if (p.rho.empty()) p.rho = std::move(v); };
  auto set_rank = [&](std::vector<std::size_t> v) { if (p.rank.empty()) p.rank = std::move(v); };
  if (cmd == "grad-bench") {
    set_d({100, 500, 1000, 2000, 3000, 5000});
    set_rho({1e-3, 5e-3, 1e-2, 5e-2});
    set_rank({40});
    if (p.scale.empty()) p.scale = {0.01, 0.05, 0.1};
  } else if (cmd == "rank-sweep") {
    set_d({500});
    set_rho({5e-3});
    set_rank({5, 10, 20, 25, 30, 40, 50});
  } else if (cmd == "scale-bench") {
    set_d({100, 200, 500, 1000});
    set_rho({1e-3});
    set_rank({40});
  } else {
    set_d({100});
    set_rho({1e-3});
    set_rank({40});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LoRAM projection onto acyclic graphs: generation, solves and benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();
  Params p;

  app.add_option("--d", p.d, "Dimension(s), comma separated")->delimiter(',');
  app.add_option("--rank", p.rank, "Factor rank(s) r")->delimiter(',');
  app.add_option("--rho", p.rho, "Density of the true graph, or of Ω for grad-bench")
      ->delimiter(',');
  app.add_option("--sigma-e", p.sigma_e, "Noise scale (default 0.1 for case a, 0.4 for case b)");
  app.add_option("--p", p.p, "Case (a) noise probability")->capture_default_str();
  app.add_option("--lambda", p.lambda, "Penalty weight λ")->capture_default_str();
  app.add_option("--case", p.noise_case, "Noise model")
      ->check(CLI::IsMember({"a", "b"}))
      ->capture_default_str();
  app.add_option("--sigma-mode", p.sigma_mode, "Entrywise map inside tr exp")
      ->check(CLI::IsMember({"square", "abs"}))
      ->capture_default_str();
  app.add_option("--variant", p.variant, "Gradient kernel variant")
      ->check(CLI::IsMember({"taylor", "verbatim"}))
      ->capture_default_str();
  app.add_option("--seed", p.seed, "Base seed")->capture_default_str();
  app.add_option("--out", p.out, std::string("Output directory (default $") + kOutEnv +
                                      " or ./loram_out)");
  app.add_option("--oracle-cap", p.oracle_cap, "Largest d for dense oracles")
      ->capture_default_str();
  app.add_option("--eps-star", p.eps_star, "Hard threshold")->capture_default_str();
  app.add_option("--relative-threshold", p.relative_threshold,
                 "Threshold relative to max |entry| (true|false)")
      ->capture_default_str();
  app.add_option("--max-iters", p.max_iters, "Solver iteration limit")->capture_default_str();
  app.add_option("--grad-tol", p.grad_tol, "Relative gradient-norm stop")->capture_default_str();
  app.add_option("--jobs", p.jobs, "Worker threads for independent cells")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* gen = app.add_subcommand("generate", "Sample A* and Z0 = A* + E");
  auto* proj = app.add_subcommand("project", "Solve the projection for one Z0");
  proj->add_option("--input", p.input, "Z0 in sparse text format (else generated)")
      ->check(CLI::ExistingFile);
  proj->add_option("--truth", p.truth, "A* for scoring when --input is given")
      ->check(CLI::ExistingFile);
  auto* gb = app.add_subcommand("grad-bench", "Approximate vs exact gradient timing and fidelity");
  gb->add_option("--scale", p.scale, "‖A_Ω‖_F values")->delimiter(',');
  auto* rs = app.add_subcommand("rank-sweep", "Recovery across factor ranks");
  auto* sb = app.add_subcommand("scale-bench", "Recovery and runtime across dimensions");
  auto* sc = app.add_subcommand("score", "Compare a predicted graph with the truth");
  sc->add_option("--pred", p.pred, "Predicted graph")->check(CLI::ExistingFile);
  sc->add_option("--truth", p.truth, "True graph")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  fill_defaults(cmd, p);
  if (p.out.empty()) {
    const char* env = std::getenv(kOutEnv);
    p.out = env && *env ? env : "loram_out";
  }

  try {
    const fs::path dir(p.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("io", "cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::string> outputs;
    if (gen->parsed()) outputs = run_generate(p, dir);
    else if (proj->parsed()) outputs = run_project(p, dir);
    else if (gb->parsed()) outputs = run_grad_bench(p, dir);
    else if (rs->parsed()) outputs = run_rank_sweep(p, dir);
    else if (sb->parsed()) outputs = run_scale_bench(p, dir);
    else if (sc->parsed()) outputs = run_score(p, dir);
    write_manifest(dir, manifest_of(cmd, p), outputs);
    std::cout << "ok command=" << cmd << " out=" << dir.string() << '\n';
  } catch (const UsageError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
