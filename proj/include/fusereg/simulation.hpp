#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/detail/rng.hpp"
#include "fusereg/types.hpp"
#include "fusereg/weighting.hpp"

namespace fusereg {

struct GroupModel {
  Vector mu;
  Matrix sigma;
};

struct SimulationConfig {
  int K = 9;
  int K0 = 1;
  int p = 200;
  int n_total = 250;
  std::vector<double> group_proportions;  // empty: skewed default
  double sparsity = 0.1;
  double trunc_halfwidth = 0.1;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
  std::vector<GroupModel> group_models;  // empty: synthesized from seed

  void validate() const {
    if (K < 1) throw ValidationError("K must be >= 1");
    if (K0 < 1 || K0 > K) throw ValidationError("K0 must satisfy 1 <= K0 <= K");
    if (p < 1) throw ValidationError("p must be >= 1");
    if (n_total < 2 * K) throw ValidationError("n_total too small for K groups");
    if (!(sparsity > 0.0 && sparsity <= 1.0))
      throw ValidationError("sparsity must be in (0, 1]");
    if (!(trunc_halfwidth >= 0.0)) throw ValidationError("trunc_halfwidth must be >= 0");
    if (!(noise_sd >= 0.0)) throw ValidationError("noise_sd must be >= 0");
  }
};

struct GroundTruth {
  Matrix B_true;                                        // p x K
  std::vector<int> V0;                                  // sorted group indices
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> active;  // nonzero pattern
};

namespace detail {

constexpr std::uint64_t kModelStream = 11;
constexpr std::uint64_t kCoefficientStream = 23;
constexpr std::uint64_t kCovariateStream = 37;
constexpr std::uint64_t kNoiseStream = 53;

}  // namespace detail

/// One large group followed by a tapering tail, mimicking cohort data where
/// a dominant subgroup coexists with several small ones.
inline std::vector<double> default_group_proportions(int K) {
  if (K < 1) throw ValidationError("K must be >= 1");
  if (K == 1) return {1.0};
  std::vector<double> w(static_cast<std::size_t>(K));
  w[0] = 3.0;
  for (int k = 1; k < K; ++k)
    w[static_cast<std::size_t>(k)] =
        1.4 - 0.6 * static_cast<double>(k - 1) / std::max(1, K - 2);
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

/// Rounds n_total * proportion_k to integers that sum exactly to n_total
/// (largest remainder; ties to the lower index).
inline std::vector<int> largest_remainder_sizes(int n_total,
                                                const std::vector<double>& proportions) {
  double total = 0.0;
  for (double v : proportions) {
    if (!(v >= 0.0)) throw ValidationError("group proportions must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw ValidationError("group proportions must sum to 1");
  const int K = static_cast<int>(proportions.size());
  std::vector<int> sizes(static_cast<std::size_t>(K));
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int k = 0; k < K; ++k) {
    const double exact = static_cast<double>(n_total) * proportions[static_cast<std::size_t>(k)];
    sizes[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(exact));
    assigned += sizes[static_cast<std::size_t>(k)];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < n_total - assigned; ++i)
    ++sizes[static_cast<std::size_t>(remainders[static_cast<std::size_t>(i)].second)];
  for (int k = 0; k < K; ++k)
    if (sizes[static_cast<std::size_t>(k)] < 2)
      throw ValidationError("group " + std::to_string(k + 1) +
                            " would have fewer than 2 samples");
  return sizes;
}

/// Stand-in generative models when estimated ones are not supplied: means
/// N(0, 0.5 I), covariances W W' / p + 0.1 I with W standard normal.
inline std::vector<GroupModel> synthesize_group_models(int K, int p, std::uint64_t seed) {
  std::vector<GroupModel> models;
  models.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    detail::Rng rng(detail::derive_seed(seed, detail::kModelStream + static_cast<std::uint64_t>(k)));
    GroupModel m;
    m.mu.resize(p);
    for (int j = 0; j < p; ++j) m.mu(j) = std::sqrt(0.5) * rng.normal();
    Matrix W(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) W(i, j) = rng.normal();
    m.sigma = W * W.transpose() / static_cast<double>(p);
    m.sigma += 0.1 * Matrix::Identity(p, p);
    models.push_back(std::move(m));
  }
  return models;
}

/// The size-K0 subset of groups minimizing the sum of pairwise symmetrized KL
/// divergences between the generative models; exhaustive search, ties broken
/// lexicographically. K0 = 1 returns {0} by convention.
inline std::vector<int> select_shared_subset(const std::vector<GroupModel>& models, int K0) {
  const int K = static_cast<int>(models.size());
  if (K0 < 1 || K0 > K) throw ValidationError("K0 must satisfy 1 <= K0 <= K");
  if (K > 12) throw ValidationError("exhaustive subset search supports K <= 12");
  if (K0 == 1) return {0};

  Matrix d = Matrix::Zero(K, K);
  for (int k = 0; k < K; ++k)
    for (int l = k + 1; l < K; ++l)
      d(k, l) = d(l, k) =
          0.5 * (gaussian_kl(models[static_cast<std::size_t>(k)].mu, models[static_cast<std::size_t>(k)].sigma,
                             models[static_cast<std::size_t>(l)].mu, models[static_cast<std::size_t>(l)].sigma) +
                 gaussian_kl(models[static_cast<std::size_t>(l)].mu, models[static_cast<std::size_t>(l)].sigma,
                             models[static_cast<std::size_t>(k)].mu, models[static_cast<std::size_t>(k)].sigma));

  std::vector<int> subset(static_cast<std::size_t>(K0));
  for (int i = 0; i < K0; ++i) subset[static_cast<std::size_t>(i)] = i;
  std::vector<int> best = subset;
  double best_cost = std::numeric_limits<double>::infinity();
  for (;;) {
    double cost = 0.0;
    for (int a = 0; a < K0; ++a)
      for (int b = a + 1; b < K0; ++b)
        cost += d(subset[static_cast<std::size_t>(a)], subset[static_cast<std::size_t>(b)]);
    if (cost < best_cost) {
      best_cost = cost;
      best = subset;
    }
    // next combination in lexicographic order
    int i = K0 - 1;
    while (i >= 0 && subset[static_cast<std::size_t>(i)] == K - K0 + i) --i;
    if (i < 0) break;
    ++subset[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < K0; ++j)
      subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

/// One sparse coefficient column: support Bernoulli(sparsity), nonzero values
/// standard normal resampled until outside (-halfwidth, halfwidth).
inline Vector draw_sparse_column(int p, double sparsity, double halfwidth,
                                 detail::Rng& rng) {
  Vector beta = Vector::Zero(p);
  for (int j = 0; j < p; ++j) {
    if (rng.uniform() < sparsity) {
      double z = rng.normal();
      while (std::abs(z) < halfwidth) z = rng.normal();
      beta(j) = z;
    }
  }
  return beta;
}

/// Shared column for every group in V0, independent columns elsewhere.
inline GroundTruth draw_coefficients(const SimulationConfig& config,
                                     const std::vector<int>& V0) {
  config.validate();
  detail::Rng rng(detail::derive_seed(config.seed, detail::kCoefficientStream));
  GroundTruth truth;
  truth.V0 = V0;
  std::sort(truth.V0.begin(), truth.V0.end());
  truth.B_true.resize(config.p, config.K);

  const Vector shared =
      draw_sparse_column(config.p, config.sparsity, config.trunc_halfwidth, rng);
  std::vector<bool> in_v0(static_cast<std::size_t>(config.K), false);
  for (int k : truth.V0) {
    if (k < 0 || k >= config.K) throw ValidationError("V0 index out of range");
    in_v0[static_cast<std::size_t>(k)] = true;
  }
  for (int k = 0; k < config.K; ++k) {
    if (in_v0[static_cast<std::size_t>(k)])
      truth.B_true.col(k) = shared;
    else
      truth.B_true.col(k) =
          draw_sparse_column(config.p, config.sparsity, config.trunc_halfwidth, rng);
  }
  truth.active = truth.B_true.array() != 0.0;
  return truth;
}

/// Per-group multivariate normal draws; responses left zero.
inline GroupedDataset generate_covariates(const SimulationConfig& config,
                                          const std::vector<GroupModel>& models) {
  config.validate();
  if (static_cast<int>(models.size()) != config.K)
    throw ValidationError("group model count does not match K");
  const std::vector<double> props =
      config.group_proportions.empty() ? default_group_proportions(config.K)
                                       : config.group_proportions;
  if (static_cast<int>(props.size()) != config.K)
    throw ValidationError("group proportion count does not match K");
  const std::vector<int> sizes = largest_remainder_sizes(config.n_total, props);

  std::vector<Group> groups;
  groups.reserve(static_cast<std::size_t>(config.K));
  for (int k = 0; k < config.K; ++k) {
    const GroupModel& m = models[static_cast<std::size_t>(k)];
    if (m.mu.size() != config.p || m.sigma.rows() != config.p || m.sigma.cols() != config.p)
      throw ValidationError("group model dimensions do not match p");
    const Eigen::LLT<Matrix> llt(m.sigma);
    if (llt.info() != Eigen::Success)
      throw NumericalError("group model covariance not positive definite");
    const Matrix L = llt.matrixL();
    detail::Rng rng(detail::derive_seed(config.seed,
                                        detail::kCovariateStream + static_cast<std::uint64_t>(k)));
    const int n_k = sizes[static_cast<std::size_t>(k)];
    Matrix X(n_k, config.p);
    Vector z(config.p);
    for (int i = 0; i < n_k; ++i) {
      for (int j = 0; j < config.p; ++j) z(j) = rng.normal();
      X.row(i) = (m.mu + L * z).transpose();
    }
    groups.push_back(Group{"g" + std::to_string(k + 1), std::move(X),
                           Vector::Zero(n_k)});
  }
  return GroupedDataset(std::move(groups));
}

/// y_k = X_k b_k + noise, noise i.i.d. N(0, noise_sd^2).
inline GroupedDataset generate_responses(const GroupedDataset& covariates,
                                         const GroundTruth& truth, double noise_sd,
                                         std::uint64_t seed) {
  if (truth.B_true.rows() != covariates.p() || truth.B_true.cols() != covariates.K())
    throw ValidationError("ground truth dimensions do not match covariates");
  detail::Rng rng(detail::derive_seed(seed, detail::kNoiseStream));
  std::vector<Group> groups;
  groups.reserve(covariates.groups().size());
  for (int k = 0; k < covariates.K(); ++k) {
    const Group& g = covariates.group(k);
    Vector y = g.X * truth.B_true.col(k);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise_sd * rng.normal();
    groups.push_back(Group{g.id, g.X, std::move(y)});
  }
  return GroupedDataset(std::move(groups), covariates.covariate_names());
}

/// Full pipeline: models, shared subset, coefficients, covariates, responses.
/// A pure function of the configuration (all randomness flows from its seed).
inline std::pair<GroupedDataset, GroundTruth> simulate_dataset(const SimulationConfig& config) {
  config.validate();
  const std::vector<GroupModel> models =
      config.group_models.empty()
          ? synthesize_group_models(config.K, config.p, config.seed)
          : config.group_models;
  const std::vector<int> v0 = select_shared_subset(models, config.K0);
  GroundTruth truth = draw_coefficients(config, v0);
  const GroupedDataset covariates = generate_covariates(config, models);
  GroupedDataset data = generate_responses(covariates, truth, config.noise_sd, config.seed);
  return {std::move(data), std::move(truth)};
}

}  // namespace fusereg
