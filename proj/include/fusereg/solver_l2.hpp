#pragma once

#include <Eigen/SparseCore>
#include <cmath>
#include <utility>
#include <vector>

#include "fusereg/lasso.hpp"
#include "fusereg/objective.hpp"
#include "fusereg/types.hpp"

namespace fusereg {

/// Unpenalized coordinate update for the L2-fusion objective,
///   [ x_j'(y_k - X_{-j} b_{-j}) + 2 g sum_{k' != k} tau b_{j,k'} ]
///   / [ x_j'x_j + 2 g sum_{k' != k} tau ]
/// with g = config.gamma. A zero denominator (zero column, no fusion) yields
/// 0 and sets *degenerate when provided.
inline double cd_update(const GroupedDataset& data, const Matrix& B, int j, int k,
                        const PenaltyConfig& config, const FusionWeights& tau,
                        bool* degenerate = nullptr) {
  detail::validate_fusion_inputs(data, B, tau);
  if (degenerate) *degenerate = false;
  const Group& g = data.group(k);
  const auto x_j = g.X.col(j);
  const double col_sq = x_j.squaredNorm();

  double fusion_dot = 0.0;
  double fusion_total = 0.0;
  for (int l = 0; l < data.K(); ++l) {
    if (l == k) continue;
    fusion_dot += tau(k, l) * B(j, l);
    fusion_total += tau(k, l);
  }
  fusion_dot *= 2.0 * config.gamma;
  fusion_total *= 2.0 * config.gamma;

  const double den = col_sq + fusion_total;
  if (den <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  // x_j'(y_k - X_{-j} b_{-j}) = x_j'(y_k - X_k b_k) + x_j'x_j b_{j,k}
  const double xr = x_j.dot(g.y - g.X * B.col(k)) + col_sq * B(j, k);
  return (xr + fusion_dot) / den;
}

/// Block coordinate descent for the L2-fusion objective. Rows j are swept
/// cyclically and coordinates within a row are updated in sequence, each by
/// its exact minimizer: the quadratic coefficient of b_{j,k} is
/// x_j'x_j + g * sum_{k' != k} tau, so the soft threshold is
/// lambda / (2 * denominator), which keeps the objective trace non-increasing.
inline FitResult fit_cd(const GroupedDataset& data, const PenaltyConfig& config,
                        const FusionWeights& tau, const SolverOptions& opts,
                        const Matrix* B_init = nullptr) {
  config.validate();
  opts.validate();
  if (config.fusion_norm != FusionNorm::L2)
    throw ValidationError("fit_cd requires fusion_norm = L2");
  if (tau.K() != data.K())
    throw ValidationError("fusion weight dimension does not match group count");

  const int p = data.p();
  const int K = data.K();
  Matrix B = B_init ? *B_init : Matrix::Zero(p, K);
  validate_coefficients(data, B);

  std::vector<Vector> col_sq(static_cast<std::size_t>(K));
  std::vector<Vector> resid(static_cast<std::size_t>(K));
  Vector fusion_row(K);  // g * sum_{k'} tau(k, k')
  for (int k = 0; k < K; ++k) {
    const Group& g = data.group(k);
    col_sq[k].resize(p);
    for (int j = 0; j < p; ++j) col_sq[k](j) = g.X.col(j).squaredNorm();
    fusion_row(k) = config.gamma * tau.tau().row(k).sum();
  }

  FitResult result;
  double prev = objective_l2(data, B, config, tau);
  result.objective_trace.push_back(prev);
  const double half_lambda = 0.5 * config.lambda;

  for (int sweep = 0; sweep < opts.max_iter; ++sweep) {
    for (int k = 0; k < K; ++k) resid[k] = data.group(k).y - data.group(k).X * B.col(k);
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < K; ++k) {
        const double den = col_sq[k](j) + fusion_row(k);
        if (den <= 0.0) {
          B(j, k) = 0.0;
          continue;
        }
        double fusion_dot = 0.0;
        if (config.gamma > 0.0)
          for (int l = 0; l < K; ++l)
            if (l != k) fusion_dot += tau(k, l) * B(j, l);
        fusion_dot *= config.gamma;
        const double xr =
            data.group(k).X.col(j).dot(resid[k]) + col_sq[k](j) * B(j, k);
        const double next = soft_threshold(xr + fusion_dot, half_lambda) / den;
        const double delta = next - B(j, k);
        if (delta != 0.0) {
          resid[k] -= delta * data.group(k).X.col(j);
          B(j, k) = next;
        }
      }
    }
    const double f = objective_l2(data, B, config, tau);
    if (!std::isfinite(f)) throw NumericalError("fit_cd diverged");
    result.objective_trace.push_back(f);
    result.iterations = sweep + 1;
    if (std::abs(f - prev) / std::max(1.0, std::abs(prev)) < opts.tol) {
      result.converged = true;
      prev = f;
      break;
    }
    prev = f;
  }

  result.B = std::move(B);
  return result;
}

/// The L2-fusion problem rewritten as one classical lasso: block-diagonal
/// design stacked over fusion rows Gamma, with
///   || Gamma b ||^2 = gamma * sum_{k<k'} tau_{k,k'} || b_k - b_{k'} ||^2.
struct AugmentedSystem {
  Eigen::SparseMatrix<double> X_aug;  // (n + p * #active pairs) x (p K)
  Vector y_aug;
  int p = 0;
  int K = 0;
  int fusion_rows = 0;

  int flat_index(int j, int k) const { return k * p + j; }
  std::pair<int, int> coord_of(int flat) const { return {flat % p, flat / p}; }
};

/// Builds the augmented design. Gamma rows are ordered by pair (k, k') in
/// lexicographic order, covariates in index order; each row carries
/// +s and -s with s = sqrt(gamma * tau_{k,k'}). Pairs with tau = 0 (or
/// gamma = 0) contribute no rows.
inline AugmentedSystem build_augmented_system(const GroupedDataset& data,
                                              const PenaltyConfig& config,
                                              const FusionWeights& tau) {
  config.validate();
  if (tau.K() != data.K())
    throw ValidationError("fusion weight dimension does not match group count");
  const int p = data.p();
  const int K = data.K();
  const int n = data.total_n();

  int active_pairs = 0;
  for (int k = 0; k < K; ++k)
    for (int l = k + 1; l < K; ++l)
      if (config.gamma * tau(k, l) > 0.0) ++active_pairs;

  AugmentedSystem sys;
  sys.p = p;
  sys.K = K;
  sys.fusion_rows = active_pairs * p;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(p) +
                   2u * static_cast<std::size_t>(sys.fusion_rows));
  sys.y_aug = Vector::Zero(n + sys.fusion_rows);

  int row = 0;
  for (int k = 0; k < K; ++k) {
    const Group& g = data.group(k);
    for (Eigen::Index i = 0; i < g.n(); ++i) {
      for (int j = 0; j < p; ++j) {
        const double v = g.X(i, j);
        if (v != 0.0) triplets.emplace_back(row, sys.flat_index(j, k), v);
      }
      sys.y_aug(row) = g.y(i);
      ++row;
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      const double w = config.gamma * tau(k, l);
      if (w <= 0.0) continue;
      const double s = std::sqrt(w);
      for (int m = 0; m < p; ++m) {
        triplets.emplace_back(row, sys.flat_index(m, k), s);
        triplets.emplace_back(row, sys.flat_index(m, l), -s);
        ++row;
      }
    }
  }

  sys.X_aug.resize(n + sys.fusion_rows, p * K);
  sys.X_aug.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

/// Solves the L2-fusion problem through the augmented classical lasso and
/// unflattens the solution back into a p x K matrix. The recorded objective
/// trace equals the L2-fusion objective by construction.
inline FitResult fit_augmented(const GroupedDataset& data, const PenaltyConfig& config,
                               const FusionWeights& tau, const SolverOptions& opts,
                               const Matrix* B_init = nullptr) {
  if (config.fusion_norm != FusionNorm::L2)
    throw ValidationError("fit_augmented requires fusion_norm = L2");
  const AugmentedSystem sys = build_augmented_system(data, config, tau);

  Vector b_init;
  const Vector* init_ptr = nullptr;
  if (B_init) {
    validate_coefficients(data, *B_init);
    b_init.resize(sys.p * sys.K);
    for (int k = 0; k < sys.K; ++k)
      for (int j = 0; j < sys.p; ++j) b_init(sys.flat_index(j, k)) = (*B_init)(j, k);
    init_ptr = &b_init;
  }

  FitResult flat = lasso_cd(sys.X_aug, sys.y_aug, config.lambda, opts, init_ptr);

  FitResult result;
  result.B.resize(sys.p, sys.K);
  for (int k = 0; k < sys.K; ++k)
    for (int j = 0; j < sys.p; ++j) result.B(j, k) = flat.B(sys.flat_index(j, k), 0);
  result.objective_trace = std::move(flat.objective_trace);
  result.iterations = flat.iterations;
  result.converged = flat.converged;
  return result;
}

}  // namespace fusereg
