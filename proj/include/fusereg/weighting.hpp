#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "fusereg/standardize.hpp"
#include "fusereg/types.hpp"

namespace fusereg {

/// Gaussian model of a group's covariate distribution with a ridge-regularized
/// covariance estimate, Sigma = S + alpha I, so the smallest eigenvalue is at
/// least alpha.
struct GroupGaussianModel {
  std::string id;
  Vector mu;
  Matrix sigma;
};

/// KL( N(mu0, s0) || N(mu1, s1) ), closed form, log-determinants taken from
/// the Cholesky factor of the regularized covariances.
inline double gaussian_kl(const Vector& mu0, const Matrix& s0, const Vector& mu1,
                          const Matrix& s1) {
  const Eigen::Index p = mu0.size();
  const Eigen::LLT<Matrix> llt1(s1);
  if (llt1.info() != Eigen::Success)
    throw NumericalError("covariance not positive definite in KL computation");
  const Eigen::LLT<Matrix> llt0(s0);
  if (llt0.info() != Eigen::Success)
    throw NumericalError("covariance not positive definite in KL computation");

  auto log_det = [p](const Eigen::LLT<Matrix>& llt) {
    double s = 0.0;
    const auto& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < p; ++i) s += std::log(L(i, i));
    return 2.0 * s;
  };

  const double trace = llt1.solve(s0).trace();
  const Vector diff = mu1 - mu0;
  const double quad = diff.dot(llt1.solve(diff));
  return 0.5 * (trace + quad - static_cast<double>(p) + log_det(llt1) - log_det(llt0));
}

inline double symmetrized_kl(const GroupGaussianModel& a, const GroupGaussianModel& b) {
  return 0.5 * (gaussian_kl(a.mu, a.sigma, b.mu, b.sigma) +
                gaussian_kl(b.mu, b.sigma, a.mu, a.sigma));
}

inline std::vector<GroupGaussianModel> fit_group_gaussians(const GroupedDataset& data,
                                                           double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("covariance ridge alpha must be > 0");
  std::vector<GroupGaussianModel> models;
  models.reserve(data.groups().size());
  for (const auto& g : data.groups()) {
    if (g.n() < 2)
      throw ValidationError("group '" + g.id + "': insufficient samples for covariance estimation");
    GroupGaussianModel m;
    m.id = g.id;
    m.mu = g.X.colwise().mean().transpose();
    const Matrix centered = g.X.rowwise() - m.mu.transpose();
    m.sigma = centered.transpose() * centered / static_cast<double>(g.n() - 1);
    m.sigma += alpha * Matrix::Identity(data.p(), data.p());
    models.push_back(std::move(m));
  }
  return models;
}

inline Matrix pairwise_symmetrized_kl(const std::vector<GroupGaussianModel>& models) {
  const int K = static_cast<int>(models.size());
  Matrix d = Matrix::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      const double v = symmetrized_kl(models[k], models[l]);
      if (!std::isfinite(v))
        throw NumericalError("non-finite KL divergence between groups '" + models[k].id +
                             "' and '" + models[l].id + "'");
      d(k, l) = d(l, k) = v;
    }
  }
  return d;
}

/// tau = 1 - d / d_max, which puts every weight in [0, 1] and zeroes the most
/// distant pair. When all pairwise distances coincide (including all-zero),
/// the rule is degenerate and unweighted fusion (tau = 1) is used instead.
inline FusionWeights tau_from_distances(const Matrix& d) {
  const int K = static_cast<int>(d.rows());
  if (d.rows() != d.cols() || K < 2)
    throw ValidationError("distance matrix must be square with K >= 2");
  double d_max = 0.0;
  double d_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      const double v = d(k, l);
      if (!std::isfinite(v) || v < 0.0)
        throw ValidationError("distances must be finite and nonnegative");
      d_max = std::max(d_max, v);
      d_min = std::min(d_min, v);
    }
  }
  if (d_max <= 0.0 || d_max - d_min <= 1e-12 * d_max) return FusionWeights::uniform(K);
  Matrix tau = Matrix::Zero(K, K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l)
      if (k != l) tau(k, l) = 1.0 - d(k, l) / d_max;
  return FusionWeights::from_matrix(std::move(tau));
}

/// Distances d(k,k') = || mean_k - mean_k' ||_2 over globally standardized
/// covariates, mapped through tau_from_distances.
inline FusionWeights tau_mean_distance(const GroupedDataset& data) {
  if (data.K() < 2) throw ValidationError("fusion weighting requires K >= 2");
  const GroupedDataset std_data = standardize_globally(data);
  std::vector<Vector> means;
  means.reserve(std_data.groups().size());
  for (const auto& g : std_data.groups()) means.push_back(g.X.colwise().mean().transpose());
  Matrix d = Matrix::Zero(data.K(), data.K());
  for (int k = 0; k < data.K(); ++k)
    for (int l = k + 1; l < data.K(); ++l) d(k, l) = d(l, k) = (means[k] - means[l]).norm();
  return tau_from_distances(d);
}

/// Distances are symmetrized KL divergences between per-group Gaussian models
/// fitted on globally standardized covariates.
inline FusionWeights tau_symmetrized_kl(const GroupedDataset& data, double alpha = 0.1) {
  if (data.K() < 2) throw ValidationError("fusion weighting requires K >= 2");
  const GroupedDataset std_data = standardize_globally(data);
  const auto models = fit_group_gaussians(std_data, alpha);
  return tau_from_distances(pairwise_symmetrized_kl(models));
}

/// Explicit weights for named pairs; unspecified pairs default to 1
/// (unweighted fusion).
inline FusionWeights tau_manual(
    const std::vector<std::string>& group_ids,
    const std::vector<std::tuple<std::string, std::string, double>>& entries) {
  const int K = static_cast<int>(group_ids.size());
  if (K < 1) throw ValidationError("tau_manual requires at least one group");
  auto index_of = [&](const std::string& id) {
    for (int k = 0; k < K; ++k)
      if (group_ids[static_cast<std::size_t>(k)] == id) return k;
    throw ValidationError("unknown group id '" + id + "' in manual fusion weights");
  };
  Matrix tau = Matrix::Ones(K, K);
  tau.diagonal().setZero();
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(K, K);
  for (const auto& [a, b, v] : entries) {
    const int ka = index_of(a);
    const int kb = index_of(b);
    if (ka == kb) throw ValidationError("manual fusion weight pairs must be distinct groups");
    if (seen(ka, kb)) throw ValidationError("duplicate manual fusion weight for pair (" + a + ", " + b + ")");
    if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v))
      throw ValidationError("manual fusion weight out of range [0, 1]");
    tau(ka, kb) = tau(kb, ka) = v;
    seen(ka, kb) = seen(kb, ka) = 1;
  }
  return FusionWeights::from_matrix(std::move(tau));
}

}  // namespace fusereg
