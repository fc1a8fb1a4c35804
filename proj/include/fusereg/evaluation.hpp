#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/baselines.hpp"
#include "fusereg/detail/parallel.hpp"
#include "fusereg/detail/rng.hpp"
#include "fusereg/simulation.hpp"
#include "fusereg/solver_l1.hpp"
#include "fusereg/solver_l2.hpp"
#include "fusereg/standardize.hpp"
#include "fusereg/types.hpp"
#include "fusereg/weighting.hpp"

namespace fusereg {

/// Subgroup-size-weighted average of per-group RMSEs:
/// sum_k (n_k / n) * rmse_k.
inline double weighted_rmse(const std::vector<Vector>& predictions,
                            const std::vector<Vector>& actuals) {
  if (predictions.empty() || predictions.size() != actuals.size())
    throw ValidationError("weighted_rmse needs matching nonempty prediction/actual groups");
  double n_total = 0.0;
  for (const auto& a : actuals) {
    if (a.size() == 0) throw ValidationError("weighted_rmse: empty group");
    n_total += static_cast<double>(a.size());
  }
  double value = 0.0;
  for (std::size_t k = 0; k < actuals.size(); ++k) {
    if (predictions[k].size() != actuals[k].size())
      throw ValidationError("weighted_rmse: prediction/actual length mismatch");
    const double n_k = static_cast<double>(actuals[k].size());
    const double rmse = std::sqrt((predictions[k] - actuals[k]).squaredNorm() / n_k);
    value += (n_k / n_total) * rmse;
  }
  return value;
}

/// AUROC of score-ranked recovery of the true active set, all (j, k) cells
/// pooled, ties resolved by midranks.
inline double auroc_active(const Matrix& scores,
                           const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& truth) {
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols())
    throw ValidationError("auroc_active: score/truth shape mismatch");
  const Eigen::Index total = scores.size();
  std::vector<std::pair<double, bool>> cells;
  cells.reserve(static_cast<std::size_t>(total));
  for (Eigen::Index k = 0; k < scores.cols(); ++k)
    for (Eigen::Index j = 0; j < scores.rows(); ++j)
      cells.emplace_back(scores(j, k), truth(j, k));
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double positives = 0.0;
  for (const auto& c : cells) positives += c.second ? 1.0 : 0.0;
  const double negatives = static_cast<double>(total) - positives;
  if (positives == 0.0 || negatives == 0.0)
    throw ValidationError("auroc_active: degenerate truth (all positive or all negative)");

  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    while (j < cells.size() && cells[j].first == cells[i].first) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t)
      if (cells[t].second) rank_sum += midrank;
    i = j;
  }
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

/// Log-spaced lambda grid from the data-derived zero-solution threshold down
/// to min_ratio times it, descending.
inline std::vector<double> make_lambda_grid(const GroupedDataset& std_data, int count,
                                            double min_ratio) {
  if (count < 1) throw ValidationError("lambda grid needs at least one value");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0))
    throw ValidationError("lambda_min_ratio must be in (0, 1]");
  double lambda_max = 0.0;
  for (const auto& g : std_data.groups())
    lambda_max = std::max(lambda_max, lasso_zero_lambda(g.X, g.y));
  auto [X, y] = stack_groups(std_data);
  lambda_max = std::max(lambda_max, lasso_zero_lambda(X, y));
  if (lambda_max <= 0.0) return {0.0};
  if (count == 1) return {lambda_max};
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double log_max = std::log(lambda_max);
  const double log_min = std::log(lambda_max * min_ratio);
  for (int i = 0; i < count; ++i)
    grid[static_cast<std::size_t>(i)] =
        std::exp(log_max + (log_min - log_max) * static_cast<double>(i) /
                               static_cast<double>(count - 1));
  return grid;
}

/// {0, 0.01, 0.1, 1, 10} scaled by n / K.
inline std::vector<double> default_gamma_grid(int n, int K) {
  const double scale = static_cast<double>(n) / static_cast<double>(K);
  return {0.0, 0.01 * scale, 0.1 * scale, 1.0 * scale, 10.0 * scale};
}

struct CvGrid {
  std::vector<double> lambdas;  // positive, used in descending order
  std::vector<double> gammas;   // nonnegative
  int folds = 10;
  std::uint64_t seed = 0;
  bool stratify_by_group = true;
};

struct CvCell {
  double lambda = 0.0;
  double gamma = 0.0;
  std::vector<double> fold_rmse;
  double mean_rmse = 0.0;
};

struct CvResult {
  double best_lambda = 0.0;
  double best_gamma = 0.0;
  std::vector<CvCell> table;
};

namespace detail {

constexpr std::uint64_t kFoldStream = 71;
constexpr std::uint64_t kSplitStream = 89;
constexpr std::uint64_t kReplicateStream = 101;
constexpr std::uint64_t kCvStream = 131;

// Fold labels per group. Stratified: a per-group seeded shuffle dealt
// round-robin, so every fold receives at least one sample from every group
// whenever n_k >= folds. Unstratified: one global shuffle, so a fold may miss
// a group entirely.
inline std::vector<std::vector<int>> assign_folds(const GroupedDataset& data, int folds,
                                                  std::uint64_t seed, bool stratify = true) {
  if (folds < 2) throw ValidationError("cross-validation needs folds >= 2");
  std::vector<std::vector<int>> labels(static_cast<std::size_t>(data.K()));
  if (stratify) {
    for (int k = 0; k < data.K(); ++k) {
      const int n_k = data.n(k);
      if (n_k < folds)
        throw ValidationError("group '" + data.group(k).id +
                              "' has fewer samples than folds; a fold would lose the group");
      std::vector<int> order(static_cast<std::size_t>(n_k));
      for (int i = 0; i < n_k; ++i) order[static_cast<std::size_t>(i)] = i;
      Rng rng(derive_seed(seed, kFoldStream + static_cast<std::uint64_t>(k)));
      rng.shuffle(order);
      labels[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(n_k));
      for (int pos = 0; pos < n_k; ++pos)
        labels[static_cast<std::size_t>(k)][static_cast<std::size_t>(
            order[static_cast<std::size_t>(pos)])] = pos % folds;
    }
    return labels;
  }
  std::vector<std::pair<int, int>> cells;
  for (int k = 0; k < data.K(); ++k) {
    labels[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(data.n(k)));
    for (int i = 0; i < data.n(k); ++i) cells.emplace_back(k, i);
  }
  Rng rng(derive_seed(seed, kFoldStream));
  rng.shuffle(cells);
  for (std::size_t pos = 0; pos < cells.size(); ++pos)
    labels[static_cast<std::size_t>(cells[pos].first)][static_cast<std::size_t>(cells[pos].second)] =
        static_cast<int>(pos % static_cast<std::size_t>(folds));
  return labels;
}

// Rows of one fold (or its complement). Groups left empty are dropped when
// allowed, which only unstratified held-out folds may hit.
inline GroupedDataset subset_rows(const GroupedDataset& data,
                                  const std::vector<std::vector<int>>& labels, int fold,
                                  bool keep_fold, bool allow_missing_groups = false) {
  std::vector<Group> groups;
  groups.reserve(data.groups().size());
  for (int k = 0; k < data.K(); ++k) {
    const Group& g = data.group(k);
    std::vector<int> rows;
    for (int i = 0; i < data.n(k); ++i) {
      const bool in_fold = labels[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] == fold;
      if (in_fold == keep_fold) rows.push_back(i);
    }
    if (rows.empty()) {
      if (allow_missing_groups) continue;
      throw ValidationError("group '" + g.id + "' lost all samples in a fold");
    }
    Matrix X(rows.size(), data.p());
    Vector y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      X.row(static_cast<Eigen::Index>(i)) = g.X.row(rows[i]);
      y(static_cast<Eigen::Index>(i)) = g.y(rows[i]);
    }
    groups.push_back(Group{g.id, std::move(X), std::move(y)});
  }
  return GroupedDataset(std::move(groups), data.covariate_names());
}

}  // namespace detail

/// Dispatch to the solver behind a method name, on standardized data.
inline FitResult fit_method(Method method, const GroupedDataset& std_data, double lambda,
                            double gamma, const FusionWeights& tau,
                            const SolverOptions& opts, double epsilon = 1e-3,
                            const Matrix* B_init = nullptr) {
  switch (method) {
    case Method::FusedL2: {
      PenaltyConfig config{lambda, gamma, FusionNorm::L2, epsilon};
      return fit_cd(std_data, config, tau, opts, B_init);
    }
    case Method::FusedL1: {
      PenaltyConfig config{lambda, gamma, FusionNorm::L1, epsilon};
      return fit_proximal(std_data, config, tau, opts, B_init);
    }
    case Method::Pooled: {
      Vector init;
      const Vector* init_ptr = nullptr;
      if (B_init) {
        init = B_init->col(0);
        init_ptr = &init;
      }
      return fit_pooled(std_data, lambda, opts, init_ptr);
    }
    case Method::Subgroupwise:
      return fit_subgroupwise(std_data, lambda, opts, B_init);
  }
  throw ValidationError("unknown method");
}

/// Stratified k-fold cross-validation over the (lambda, gamma) grid. Each fold
/// standardizes its own training portion; held-out error is the weighted RMSE
/// of raw-scale predictions. Fits are warm-started along the descending lambda
/// path. Ties are broken toward the sparser setting (larger lambda, then
/// larger gamma). Methods without a fusion term are evaluated once per lambda
/// and the result is replicated across the gamma axis.
inline CvResult kfold_cv(const GroupedDataset& data, Method method, const CvGrid& grid,
                         const FusionWeights& tau, const SolverOptions& opts,
                         double epsilon = 1e-3, int threads = 1) {
  if (grid.lambdas.empty()) throw ValidationError("lambda grid is empty");
  std::vector<double> lambdas = grid.lambdas;
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  std::vector<double> gammas = grid.gammas.empty() ? std::vector<double>{0.0} : grid.gammas;
  std::sort(gammas.begin(), gammas.end());
  for (double l : lambdas)
    if (!(l >= 0.0)) throw ValidationError("lambda grid values must be >= 0");
  for (double g : gammas)
    if (!(g >= 0.0)) throw ValidationError("gamma grid values must be >= 0");

  const auto labels =
      detail::assign_folds(data, grid.folds, grid.seed, grid.stratify_by_group);
  const bool uses_gamma = method == Method::FusedL2 || method == Method::FusedL1;
  const std::size_t n_gamma_chains = uses_gamma ? gammas.size() : 1;

  const std::size_t n_lambda = lambdas.size();
  const std::size_t n_gamma = gammas.size();
  // rmse[(gamma_chain * n_lambda + lambda) * folds + fold]
  std::vector<double> rmse(n_gamma_chains * n_lambda * static_cast<std::size_t>(grid.folds),
                           std::numeric_limits<double>::quiet_NaN());

  const int n_tasks = static_cast<int>(n_gamma_chains) * grid.folds;
  detail::parallel_for(n_tasks, threads, [&](int task) {
    const int fold = task % grid.folds;
    const std::size_t gi = static_cast<std::size_t>(task / grid.folds);
    const double gamma = uses_gamma ? gammas[gi] : 0.0;

    const GroupedDataset train = detail::subset_rows(data, labels, fold, false);
    const GroupedDataset heldout = detail::subset_rows(data, labels, fold, true, true);
    const StandardizedData std_train = standardize_by_group(train);

    std::vector<Vector> actuals;
    actuals.reserve(heldout.groups().size());
    for (const auto& g : heldout.groups()) actuals.push_back(g.y);

    Matrix warm;
    bool have_warm = false;
    for (std::size_t li = 0; li < n_lambda; ++li) {
      const FitResult fit =
          fit_method(method, std_train.data, lambdas[li], gamma, tau, opts, epsilon,
                     have_warm ? &warm : nullptr);
      warm = fit.B;
      have_warm = true;
      // unstratified folds may hold out fewer groups than were trained on
      Matrix B_sub(data.p(), heldout.K());
      for (int kh = 0; kh < heldout.K(); ++kh)
        B_sub.col(kh) = fit.B.col(train.index_of(heldout.group(kh).id));
      const std::vector<Vector> preds = predict(heldout, B_sub, std_train.record);
      rmse[(gi * n_lambda + li) * static_cast<std::size_t>(grid.folds) +
           static_cast<std::size_t>(fold)] = weighted_rmse(preds, actuals);
    }
  });

  CvResult result;
  result.table.reserve(n_gamma * n_lambda);
  for (std::size_t gi = 0; gi < n_gamma; ++gi) {
    const std::size_t chain = uses_gamma ? gi : 0;
    for (std::size_t li = 0; li < n_lambda; ++li) {
      CvCell cell;
      cell.lambda = lambdas[li];
      cell.gamma = gammas[gi];
      cell.fold_rmse.resize(static_cast<std::size_t>(grid.folds));
      double sum = 0.0;
      for (int f = 0; f < grid.folds; ++f) {
        const double v =
            rmse[(chain * n_lambda + li) * static_cast<std::size_t>(grid.folds) +
                 static_cast<std::size_t>(f)];
        cell.fold_rmse[static_cast<std::size_t>(f)] = v;
        sum += v;
      }
      cell.mean_rmse = sum / static_cast<double>(grid.folds);
      result.table.push_back(std::move(cell));
    }
  }

  const CvCell* best = nullptr;
  for (const auto& cell : result.table) {
    if (!std::isfinite(cell.mean_rmse)) continue;
    if (!best || cell.mean_rmse < best->mean_rmse ||
        (cell.mean_rmse == best->mean_rmse &&
         (cell.lambda > best->lambda ||
          (cell.lambda == best->lambda && cell.gamma > best->gamma))))
      best = &cell;
  }
  if (!best) throw NumericalError("cross-validation produced no finite error");
  result.best_lambda = best->lambda;
  result.best_gamma = best->gamma;
  return result;
}

enum class TauScheme { Uniform, MeanDistance, SymmetrizedKl };

inline TauScheme parse_tau_scheme(const std::string& s) {
  if (s == "uniform") return TauScheme::Uniform;
  if (s == "mean") return TauScheme::MeanDistance;
  if (s == "kl") return TauScheme::SymmetrizedKl;
  throw ValidationError("unknown tau scheme '" + s + "'");
}

inline FusionWeights compute_tau(TauScheme scheme, const GroupedDataset& data,
                                 double alpha = 0.1) {
  switch (scheme) {
    case TauScheme::Uniform: return FusionWeights::uniform(data.K());
    case TauScheme::MeanDistance: return tau_mean_distance(data);
    case TauScheme::SymmetrizedKl: return tau_symmetrized_kl(data, alpha);
  }
  throw ValidationError("unknown tau scheme");
}

struct ComparisonSettings {
  std::vector<Method> methods{Method::FusedL2, Method::Pooled, Method::Subgroupwise};
  int replicates = 20;
  double train_fraction = 0.8;
  int folds = 10;
  int n_lambda = 30;
  double lambda_min_ratio = 1e-3;
  std::vector<double> gamma_factors{0.0, 0.01, 0.1, 1.0, 10.0};
  TauScheme tau_scheme = TauScheme::Uniform;
  double tau_alpha = 0.1;
  double epsilon = 1e-3;
  SolverOptions solver{500, 1e-7, 0};
  int threads = 1;
};

struct ReplicateRecord {
  int replicate = 0;
  Method method = Method::Pooled;
  bool ok = false;
  std::string error;
  double weighted_rmse = std::numeric_limits<double>::quiet_NaN();
  double auroc = std::numeric_limits<double>::quiet_NaN();
  double runtime_sec = std::numeric_limits<double>::quiet_NaN();
  double selected_lambda = std::numeric_limits<double>::quiet_NaN();
  double selected_gamma = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> subgroup_rmse;  // aligned with ComparisonReport::group_ids
};

struct ComparisonReport {
  std::vector<std::string> group_ids;
  std::vector<ReplicateRecord> rows;  // replicate-major, then method order
};

struct MethodSummary {
  Method method = Method::Pooled;
  int n_ok = 0;
  double mean_wrmse = 0.0, sd_wrmse = 0.0;
  double mean_auroc = 0.0, sd_auroc = 0.0;
  double mean_runtime = 0.0;
};

inline std::vector<MethodSummary> summarize(const ComparisonReport& report,
                                            const std::vector<Method>& methods) {
  std::vector<MethodSummary> out;
  for (Method m : methods) {
    MethodSummary s;
    s.method = m;
    std::vector<double> wr, au;
    double rt = 0.0;
    for (const auto& row : report.rows) {
      if (row.method != m || !row.ok) continue;
      wr.push_back(row.weighted_rmse);
      au.push_back(row.auroc);
      rt += row.runtime_sec;
    }
    s.n_ok = static_cast<int>(wr.size());
    auto mean_sd = [](const std::vector<double>& v) -> std::pair<double, double> {
      if (v.empty()) return {0.0, 0.0};
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      if (v.size() < 2) return {mean, 0.0};
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
    };
    std::tie(s.mean_wrmse, s.sd_wrmse) = mean_sd(wr);
    std::tie(s.mean_auroc, s.sd_auroc) = mean_sd(au);
    s.mean_runtime = s.n_ok > 0 ? rt / s.n_ok : 0.0;
    out.push_back(s);
  }
  return out;
}

/// Per replicate: simulate, split train/test (stratified), tune by CV on the
/// training portion, refit, and score the held-out test set. A failed
/// replicate is recorded in its row rather than aborting the run. The report
/// is a deterministic function of the configuration seeds.
inline ComparisonReport run_comparison(const SimulationConfig& sim_config,
                                       const ComparisonSettings& settings) {
  sim_config.validate();
  if (settings.replicates < 1) throw ValidationError("replicates must be >= 1");
  if (!(settings.train_fraction > 0.0 && settings.train_fraction < 1.0))
    throw ValidationError("train_fraction must be in (0, 1)");

  const int n_methods = static_cast<int>(settings.methods.size());
  ComparisonReport report;
  report.rows.resize(static_cast<std::size_t>(settings.replicates) *
                     static_cast<std::size_t>(n_methods));
  for (int k = 0; k < sim_config.K; ++k)
    report.group_ids.push_back("g" + std::to_string(k + 1));

  detail::parallel_for(settings.replicates, settings.threads, [&](int r) {
    SimulationConfig rep_config = sim_config;
    rep_config.seed = detail::derive_seed(sim_config.seed,
                                          detail::kReplicateStream + static_cast<std::uint64_t>(r));
    auto [data, truth] = simulate_dataset(rep_config);

    // stratified train/test split
    std::vector<Group> train_groups, test_groups;
    for (int k = 0; k < data.K(); ++k) {
      const Group& g = data.group(k);
      const int n_k = data.n(k);
      std::vector<int> order(static_cast<std::size_t>(n_k));
      for (int i = 0; i < n_k; ++i) order[static_cast<std::size_t>(i)] = i;
      detail::Rng rng(detail::derive_seed(rep_config.seed,
                                          detail::kSplitStream + static_cast<std::uint64_t>(k)));
      rng.shuffle(order);
      int n_train = static_cast<int>(std::lround(settings.train_fraction * n_k));
      n_train = std::max(2, std::min(n_k - 1, n_train));
      std::vector<int> train_rows(order.begin(), order.begin() + n_train);
      std::vector<int> test_rows(order.begin() + n_train, order.end());
      std::sort(train_rows.begin(), train_rows.end());
      std::sort(test_rows.begin(), test_rows.end());
      auto take = [&](const std::vector<int>& rows) {
        Matrix X(rows.size(), data.p());
        Vector y(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          X.row(static_cast<Eigen::Index>(i)) = g.X.row(rows[i]);
          y(static_cast<Eigen::Index>(i)) = g.y(rows[i]);
        }
        return Group{g.id, std::move(X), std::move(y)};
      };
      train_groups.push_back(take(train_rows));
      test_groups.push_back(take(test_rows));
    }
    const GroupedDataset train(std::move(train_groups), data.covariate_names());
    const GroupedDataset test(std::move(test_groups), data.covariate_names());

    for (int mi = 0; mi < n_methods; ++mi) {
      ReplicateRecord& row =
          report.rows[static_cast<std::size_t>(r) * static_cast<std::size_t>(n_methods) +
                      static_cast<std::size_t>(mi)];
      row.replicate = r;
      row.method = settings.methods[static_cast<std::size_t>(mi)];
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const FusionWeights tau = compute_tau(settings.tau_scheme, train, settings.tau_alpha);
        const StandardizedData std_train = standardize_by_group(train);

        CvGrid grid;
        grid.lambdas = make_lambda_grid(std_train.data, settings.n_lambda,
                                        settings.lambda_min_ratio);
        const double gamma_scale =
            static_cast<double>(train.total_n()) / static_cast<double>(train.K());
        for (double f : settings.gamma_factors) grid.gammas.push_back(f * gamma_scale);
        grid.folds = settings.folds;
        grid.seed = detail::derive_seed(rep_config.seed, detail::kCvStream);

        const CvResult cv = kfold_cv(train, row.method, grid, tau, settings.solver,
                                     settings.epsilon, 1);
        const FitResult fit = fit_method(row.method, std_train.data, cv.best_lambda,
                                         cv.best_gamma, tau, settings.solver,
                                         settings.epsilon);
        row.runtime_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.selected_lambda = cv.best_lambda;
        row.selected_gamma = cv.best_gamma;

        const std::vector<Vector> preds = predict(test, fit.B, std_train.record);
        std::vector<Vector> actuals;
        for (const auto& g : test.groups()) actuals.push_back(g.y);
        row.weighted_rmse = weighted_rmse(preds, actuals);
        row.auroc = auroc_active(fit.B.cwiseAbs(), truth.active);
        row.subgroup_rmse.resize(actuals.size());
        for (std::size_t k = 0; k < actuals.size(); ++k)
          row.subgroup_rmse[k] = std::sqrt((preds[k] - actuals[k]).squaredNorm() /
                                           static_cast<double>(actuals[k].size()));
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  });
  return report;
}

}  // namespace fusereg
