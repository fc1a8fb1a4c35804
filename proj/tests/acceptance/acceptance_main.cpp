// Acceptance suite: exercises every gate criterion end to end and prints one
// PASS/FAIL line per criterion. Exit code is the number of failed criteria.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "fusereg/fusereg.hpp"
#include "../test_helpers.hpp"

using namespace fusereg;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << " (" << name
            << "): " << detail << "\n";
  std::cout.flush();
  if (!pass) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

GroupedDataset standardized_instance(int K, int p, int n_k, std::uint64_t seed) {
  return standardize_by_group(test_helpers::random_dataset(K, p, n_k, seed)).data;
}

double group_lambda_max(const GroupedDataset& data) {
  double m = 0.0;
  for (const auto& g : data.groups()) m = std::max(m, lasso_zero_lambda(g.X, g.y));
  return m;
}

bool trace_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1] + 1e-10) return false;
  return true;
}

std::vector<std::vector<double>> collected_cd_traces;

// ---------------------------------------------------------------------------
// criterion 1: fit_cd and fit_augmented agree on seeded random instances
void criterion_solver_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const SolverOptions opts{20000, 1e-12, 0};
  double worst = 0.0;
  detail::Rng rng(20230401);
  for (int i = 0; i < 25; ++i) {
    const GroupedDataset data = standardized_instance(3, 10, 20, 1000 + i);
    const double lmax = group_lambda_max(data);
    const double lambda = lmax * std::exp(std::log(0.02) +
                                          rng.uniform() * (std::log(0.5) - std::log(0.02)));
    const double gamma =
        std::exp(std::log(0.05) + rng.uniform() * (std::log(20.0) - std::log(0.05)));
    const PenaltyConfig config{lambda, gamma, FusionNorm::L2, 1e-3};
    const FusionWeights tau = FusionWeights::uniform(3);
    const FitResult cd = fit_cd(data, config, tau, opts);
    const FitResult aug = fit_augmented(data, config, tau, opts);
    collected_cd_traces.push_back(cd.objective_trace);
    const double f_cd = objective_l2(data, cd.B, config, tau);
    const double f_aug = objective_l2(data, aug.B, config, tau);
    worst = std::max(worst, std::abs(f_cd - f_aug) / std::max(1.0, std::abs(f_aug)));
  }
  const double elapsed = seconds_since(t0);
  report(1, "solver equivalence", worst < 1e-4 && elapsed < 5.0,
         "max relative objective gap " + fmt(worst) + " over 25 instances, " +
             fmt(elapsed) + "s (budget 5s)");
}

// ---------------------------------------------------------------------------
// criterion 2: the L2-fusion solvers recover the classical lasso
void criterion_lasso_recovery() {
  const SolverOptions opts{20000, 1e-13, 0};
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const bool single_group = i < 5;
    const GroupedDataset data = single_group ? standardized_instance(1, 8, 30, 2000 + i)
                                             : standardized_instance(3, 8, 15, 2000 + i);
    const double lambda = 0.3 * group_lambda_max(data);
    const PenaltyConfig config{lambda, single_group ? 2.0 : 0.0, FusionNorm::L2, 1e-3};
    const FusionWeights tau = FusionWeights::uniform(data.K());

    double lasso_total = 0.0;
    for (const auto& g : data.groups())
      lasso_total += lasso_cd(g.X, g.y, lambda, opts).objective_trace.back();

    const FitResult cd = fit_cd(data, config, tau, opts);
    const FitResult aug = fit_augmented(data, config, tau, opts);
    collected_cd_traces.push_back(cd.objective_trace);
    for (const FitResult* fit : {&cd, &aug}) {
      const double f = objective_l2(data, fit->B, config, tau);
      worst = std::max(worst, std::abs(f - lasso_total) / std::max(1.0, lasso_total));
    }
  }
  report(2, "lasso recovery", worst < 1e-6,
         "max relative objective gap to the classical lasso " + fmt(worst) +
             " over 10 instances (5 with K=1, 5 with gamma=0)");
}

// ---------------------------------------------------------------------------
// criterion 3: gamma = 1e6 fuses the columns onto the pooled solution
void criterion_fusion_limit() {
  SimulationConfig sim;
  sim.K = 3;
  sim.K0 = 3;  // shared-truth data
  sim.p = 10;
  sim.n_total = 60;
  sim.group_proportions = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  sim.noise_sd = 0.5;
  sim.seed = 77;
  const GroupedDataset data = standardize_by_group(simulate_dataset(sim).first).data;

  const double lambda = 0.05 * group_lambda_max(data);
  const PenaltyConfig config{lambda, 1e6, FusionNorm::L2, 1e-3};
  const FusionWeights tau = FusionWeights::uniform(3);
  const SolverOptions opts{2000000, 1e-12, 0};
  const FitResult fused = fit_cd(data, config, tau, opts);
  collected_cd_traces.push_back(fused.objective_trace);

  double discrepancy = 0.0;
  for (int j = 0; j < sim.p; ++j)
    for (int k = 0; k < 3; ++k)
      for (int l = k + 1; l < 3; ++l)
        discrepancy = std::max(discrepancy, std::abs(fused.B(j, k) - fused.B(j, l)));

  // at the fused limit the common column minimizes the stacked problem with
  // an effective l1 weight of K * lambda
  const FitResult pooled = fit_pooled(data, 3.0 * lambda, SolverOptions{20000, 1e-13, 0});
  const double pooled_gap = (fused.B - pooled.B).lpNorm<Eigen::Infinity>();

  report(3, "fusion limit", discrepancy < 1e-3 && pooled_gap < 1e-2,
         "max column discrepancy " + fmt(discrepancy) + " (< 1e-3), gap to pooled " +
             fmt(pooled_gap) + " (< 1e-2), " + std::to_string(fused.iterations) + " sweeps");
}

// ---------------------------------------------------------------------------
// criterion 4: smoothed gradient against central finite differences
void criterion_smoothed_gradient() {
  double worst_rel = 0.0;
  bool gap_ok = true;
  for (int i = 0; i < 10; ++i) {
    const GroupedDataset data = standardized_instance(3, 8, 12, 3000 + i);
    const FusionWeights tau = FusionWeights::uniform(3);
    const double lambda = 0.7, gamma = 0.5;
    const FusionGraphMatrix C = build_C(3, lambda, gamma, tau);
    const double mu = 0.5 / (8.0 * 6.0);
    const PenaltyConfig config{lambda, gamma, FusionNorm::L1, 1e-3};

    const Matrix B = test_helpers::random_coefficients(8, 3, 4000 + i);
    const Matrix G = gradient(data, B, C, mu);
    Matrix G_fd(8, 3);
    const double h = 1e-5;
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 3; ++k) {
        Matrix Bp = B, Bm = B;
        Bp(j, k) += h;
        Bm(j, k) -= h;
        G_fd(j, k) = (smooth_objective(data, Bp, C, mu) -
                      smooth_objective(data, Bm, C, mu)) / (2.0 * h);
      }
    worst_rel = std::max(worst_rel, (G - G_fd).norm() / std::max(1.0, G.norm()));

    const double bound = mu * 8.0 * 6.0 / 2.0;
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix Bt = test_helpers::random_coefficients(8, 3, 5000 + 10 * i + trial);
      const double gap =
          objective_l1(data, Bt, config, tau) - smooth_objective(data, Bt, C, mu);
      gap_ok = gap_ok && gap >= -1e-10 && gap <= bound + 1e-10;
    }
  }
  report(4, "smoothed gradient", worst_rel < 1e-4 && gap_ok,
         "max relative finite-difference error " + fmt(worst_rel) +
             " over 10 instances; smoothing gap within [0, mu p (K+|E|)/2] at all points: " +
             (gap_ok ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// criterion 5: proximal solver reaches the brute-force optimum
namespace brute {

// derivative-free pattern search over the 4 coefficients, multi-start
double minimize(const GroupedDataset& data, const PenaltyConfig& config,
                const FusionWeights& tau) {
  std::vector<Matrix> starts;
  starts.push_back(Matrix::Zero(2, 2));
  Matrix ls(2, 2);
  for (int k = 0; k < 2; ++k) {
    const Group& g = data.group(k);
    ls.col(k) = (g.X.transpose() * g.X).ldlt().solve(g.X.transpose() * g.y);
  }
  starts.push_back(ls);
  Matrix mean = ls;
  mean.col(0) = mean.col(1) = 0.5 * (ls.col(0) + ls.col(1));
  starts.push_back(mean);

  double best = std::numeric_limits<double>::infinity();
  for (Matrix B : starts) {
    double f = objective_l1(data, B, config, tau);
    double step = 1.0;
    while (step > 1e-8) {
      bool improved = false;
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
          for (double dir : {step, -step}) {
            Matrix cand = B;
            cand(j, k) += dir;
            const double fc = objective_l1(data, cand, config, tau);
            if (fc < f) {
              f = fc;
              B = cand;
              improved = true;
            }
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::min(best, f);
  }
  return best;
}

}  // namespace brute

void criterion_l1_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  const double epsilon = 1e-3;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 5; ++i) {
    const GroupedDataset data = standardized_instance(2, 2, 10, 6000 + i);
    const double lambda = 0.2 * group_lambda_max(data);
    const PenaltyConfig config{lambda, 1.0, FusionNorm::L1, epsilon};
    const FusionWeights tau = FusionWeights::uniform(2);
    const FitResult fit = fit_proximal(data, config, tau, SolverOptions{60000, 1e-15, 0});
    const double f_prox = objective_l1(data, fit.B, config, tau);
    const double f_best = brute::minimize(data, config, tau);
    worst_excess = std::max(worst_excess, f_prox - f_best);
  }
  const double elapsed = seconds_since(t0);
  report(5, "l1-fusion accuracy", worst_excess <= epsilon + 1e-3 && elapsed < 10.0,
         "max objective excess over the brute-force oracle " + fmt(worst_excess) +
             " (allowed " + fmt(epsilon + 1e-3) + "), " + fmt(elapsed) + "s (budget 10s)");
}

// ---------------------------------------------------------------------------
// criterion 6: every coordinate-descent trace monotone; lasso KKT residuals
void criterion_monotonicity_kkt() {
  bool monotone = true;
  for (const auto& trace : collected_cd_traces) monotone = monotone && trace_monotone(trace);

  bool kkt_ok = true;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const GroupedDataset data = standardized_instance(1, 10, 25, 7000 + i);
    const Group& g = data.group(0);
    const double lambda = 0.3 * lasso_zero_lambda(g.X, g.y);
    const FitResult fit = lasso_cd(g.X, g.y, lambda, SolverOptions{20000, 1e-15, 0});
    const Vector r = g.y - g.X * fit.B.col(0);
    for (int j = 0; j < 10; ++j) {
      const double grad = 2.0 * g.X.col(j).dot(r);
      if (fit.B(j, 0) == 0.0) {
        kkt_ok = kkt_ok && std::abs(grad) <= lambda + 1e-6;
        worst = std::max(worst, std::abs(grad) - lambda);
      } else {
        const double resid = std::abs(grad - lambda * (fit.B(j, 0) > 0 ? 1.0 : -1.0));
        kkt_ok = kkt_ok && resid <= 1e-6;
        worst = std::max(worst, resid);
      }
    }
  }
  report(6, "monotonicity and KKT", monotone && kkt_ok,
         std::to_string(collected_cd_traces.size()) +
             " coordinate-descent traces non-increasing (1e-10 slack): " +
             (monotone ? "yes" : "no") + "; lasso KKT residual bound met: " +
             (kkt_ok ? "yes" : "no") + " (worst slack " + fmt(worst) + ")");
}

// ---------------------------------------------------------------------------
// criteria 7 and 8: simulation trend and AUROC ordering at desk scale
void criterion_simulation_trend() {
  const auto t0 = std::chrono::steady_clock::now();

  SimulationConfig sim;
  sim.K = 9;
  sim.p = 50;
  sim.n_total = 250;
  sim.noise_sd = 1.0;
  sim.sparsity = 0.1;
  sim.seed = 20260810;

  ComparisonSettings settings;
  settings.methods = {Method::FusedL2, Method::Pooled, Method::Subgroupwise};
  settings.replicates = 20;
  settings.folds = 5;
  settings.n_lambda = 10;
  settings.lambda_min_ratio = 0.01;
  settings.gamma_factors = {0.0, 0.01, 0.1, 1.0, 10.0};
  settings.solver = SolverOptions{400, 1e-7, 0};
  settings.threads = detail::default_threads();

  struct Point {
    int k0 = 0;
    std::vector<MethodSummary> summaries;
  };
  std::vector<Point> points;
  for (int k0 : {1, 5, 9}) {
    sim.K0 = k0;
    const ComparisonReport report_data = run_comparison(sim, settings);
    points.push_back({k0, summarize(report_data, settings.methods)});
  }
  const double elapsed = seconds_since(t0);

  auto find = [&](const Point& pt, Method m) -> const MethodSummary& {
    for (const auto& s : pt.summaries)
      if (s.method == m) return s;
    throw std::logic_error("method missing from summary");
  };

  const Point& at1 = points[0];
  const Point& at5 = points[1];
  const Point& at9 = points[2];

  const MethodSummary& fused5 = find(at5, Method::FusedL2);
  const MethodSummary& pooled5 = find(at5, Method::Pooled);
  const MethodSummary& solo5 = find(at5, Method::Subgroupwise);
  const bool mid_ok =
      fused5.mean_wrmse <= pooled5.mean_wrmse && fused5.mean_wrmse <= solo5.mean_wrmse;

  const MethodSummary& fused9 = find(at9, Method::FusedL2);
  const MethodSummary& pooled9 = find(at9, Method::Pooled);
  const bool high_ok = fused9.mean_wrmse <= pooled9.mean_wrmse + pooled9.sd_wrmse;

  const MethodSummary& fused1 = find(at1, Method::FusedL2);
  const MethodSummary& solo1 = find(at1, Method::Subgroupwise);
  const bool low_ok = fused1.mean_wrmse <= solo1.mean_wrmse + solo1.sd_wrmse;

  std::ostringstream detail;
  detail << "K0=5 wRMSE fused " << fmt(fused5.mean_wrmse) << " vs pooled "
         << fmt(pooled5.mean_wrmse) << " vs subgroupwise " << fmt(solo5.mean_wrmse)
         << "; K0=9 fused " << fmt(fused9.mean_wrmse) << " within 1 sd of pooled "
         << fmt(pooled9.mean_wrmse) << "+-" << fmt(pooled9.sd_wrmse) << "; K0=1 fused "
         << fmt(fused1.mean_wrmse) << " within 1 sd of subgroupwise "
         << fmt(solo1.mean_wrmse) << "+-" << fmt(solo1.sd_wrmse) << "; " << fmt(elapsed)
         << "s (budget 900s)";
  report(7, "simulation trend", mid_ok && high_ok && low_ok && elapsed < 900.0,
         detail.str());

  // criterion 8 uses the same runs
  const bool auroc_order = fused5.mean_auroc >= solo5.mean_auroc;
  bool auroc_range = true;
  for (const Point& pt : points)
    for (const auto& s : pt.summaries)
      auroc_range = auroc_range && s.mean_auroc >= 0.5 && s.mean_auroc <= 1.0;
  std::ostringstream detail8;
  detail8 << "K0=5 AUROC fused " << fmt(fused5.mean_auroc) << " >= subgroupwise "
          << fmt(solo5.mean_auroc) << "; all method means in [0.5, 1]: "
          << (auroc_range ? "yes" : "no");
  report(8, "active-set AUROC", auroc_order && auroc_range, detail8.str());
}

// ---------------------------------------------------------------------------
// criterion 9: symmetrized KL against a quadrature oracle; weight validity
void criterion_weighting() {
  double worst = 0.0;
  detail::Rng rng(9090);
  for (int i = 0; i < 10; ++i) {
    // univariate two-group data with assorted means and spreads
    const double m_shift = 2.0 * rng.normal();
    const double scale = 0.5 + 2.0 * rng.uniform();
    std::vector<Group> groups;
    for (int k = 0; k < 2; ++k) {
      Matrix X(40, 1);
      for (int r = 0; r < 40; ++r)
        X(r, 0) = (k == 0 ? 0.0 : m_shift) + (k == 0 ? 1.0 : scale) * rng.normal();
      groups.push_back(Group{"g" + std::to_string(k + 1), X, Vector::Zero(40)});
    }
    const GroupedDataset data(std::move(groups));
    const GroupedDataset std_data = standardize_globally(data);
    const auto models = fit_group_gaussians(std_data, 0.1);
    const double closed = symmetrized_kl(models[0], models[1]);
    const double quad =
        0.5 * (test_helpers::quadrature_kl_1d(models[0].mu(0), models[0].sigma(0, 0),
                                              models[1].mu(0), models[1].sigma(0, 0)) +
               test_helpers::quadrature_kl_1d(models[1].mu(0), models[1].sigma(0, 0),
                                              models[0].mu(0), models[0].sigma(0, 0)));
    worst = std::max(worst, std::abs(closed - quad));
  }

  bool valid = true;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const GroupedDataset data = test_helpers::random_dataset(4, 3, 9, seed);
    for (const FusionWeights& tau : {tau_mean_distance(data), tau_symmetrized_kl(data)}) {
      const Matrix& t = tau.tau();
      valid = valid && (t - t.transpose()).lpNorm<Eigen::Infinity>() == 0.0 &&
              t.diagonal().isZero(0.0) && t.minCoeff() >= 0.0 && t.maxCoeff() <= 1.0;
    }
  }
  report(9, "weighting correctness", worst < 1e-3 && valid,
         "max |closed-form - quadrature| symmetrized KL " + fmt(worst) +
             " over 10 univariate cases (< 1e-3); emitted weights valid: " +
             (valid ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// criterion 10: the compare command is byte-for-byte reproducible
void criterion_determinism() {
  const fs::path dir = fs::temp_directory_path() / "fusereg_acceptance_compare";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string args =
      " compare --K 3 --p 8 --n_total 48 --sparsity 0.4 --noise_sd 1 --seed 99"
      " --sweep k0 --k0_values 1,3 --replicates 2 --methods fused_l2,pooled"
      " --folds 3 --n_lambda 3 --lambda_min_ratio 0.05 --gamma_factors 0,1"
      " --max_iter 300 --tol 1e-6 --threads 2 --out_dir " + dir.string();
  auto run_once = [&](const std::string& log) {
    const std::string cmd = std::string(FUSEREG_CLI_PATH) + args + " > " +
                            (dir / log).string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  auto slurp = [&](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  };
  const int rc1 = run_once("run1.log");
  const std::string report1 = slurp(dir / "report.csv");
  const int rc2 = run_once("run2.log");
  const std::string report2 = slurp(dir / "report.csv");
  const bool pass = rc1 == 0 && rc2 == 0 && !report1.empty() && report1 == report2;
  report(10, "determinism", pass,
         std::string("two identical compare runs, exit codes ") + std::to_string(rc1) +
             "/" + std::to_string(rc2) + ", report CSVs byte-identical: " +
             (!report1.empty() && report1 == report2 ? "yes" : "no"));
}

}  // namespace

int main() {
  std::cout << "fusereg acceptance suite\n";
  criterion_solver_equivalence();
  criterion_lasso_recovery();
  criterion_fusion_limit();
  criterion_smoothed_gradient();
  criterion_l1_accuracy();
  criterion_monotonicity_kkt();
  criterion_simulation_trend();
  criterion_weighting();
  criterion_determinism();
  if (failures == 0)
    std::cout << "all criteria passed\n";
  else
    std::cout << failures << " criteria failed\n";
  return failures;
}
