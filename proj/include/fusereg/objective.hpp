#pragma once

#include <cmath>

#include "fusereg/types.hpp"

namespace fusereg {

/// sign(z) * max(|z| - t, 0), the proximal operator of t * |.|.
inline double soft_threshold(double z, double t) {
  const double m = std::abs(z) - t;
  if (m <= 0.0) return 0.0;
  return z > 0.0 ? m : -m;
}

namespace detail {

inline double residual_sum_of_squares(const GroupedDataset& data, const Matrix& B) {
  double rss = 0.0;
  for (int k = 0; k < data.K(); ++k) {
    const Group& g = data.group(k);
    rss += (g.y - g.X * B.col(k)).squaredNorm();
  }
  return rss;
}

inline void validate_fusion_inputs(const GroupedDataset& data, const Matrix& B,
                                   const FusionWeights& tau) {
  validate_coefficients(data, B);
  if (tau.K() != data.K())
    throw ValidationError("fusion weight dimension does not match group count");
}

}  // namespace detail

/// sum_k { ||y_k - X_k b_k||^2 + lambda ||b_k||_1 }
///   + gamma * sum_{k<k'} tau_{k,k'} ||b_k - b_{k'}||_2^2
/// Each unordered pair contributes once.
inline double objective_l2(const GroupedDataset& data, const Matrix& B,
                           const PenaltyConfig& config, const FusionWeights& tau) {
  detail::validate_fusion_inputs(data, B, tau);
  double value = detail::residual_sum_of_squares(data, B);
  value += config.lambda * B.array().abs().sum();
  for (int k = 0; k < data.K(); ++k)
    for (int l = k + 1; l < data.K(); ++l)
      value += config.gamma * tau(k, l) * (B.col(k) - B.col(l)).squaredNorm();
  return value;
}

/// As objective_l2 but with an L1 fusion term:
///   gamma * sum_{k<k'} tau_{k,k'} ||b_k - b_{k'}||_1
inline double objective_l1(const GroupedDataset& data, const Matrix& B,
                           const PenaltyConfig& config, const FusionWeights& tau) {
  detail::validate_fusion_inputs(data, B, tau);
  double value = detail::residual_sum_of_squares(data, B);
  value += config.lambda * B.array().abs().sum();
  for (int k = 0; k < data.K(); ++k)
    for (int l = k + 1; l < data.K(); ++l)
      value += config.gamma * tau(k, l) * (B.col(k) - B.col(l)).template lpNorm<1>();
  return value;
}

inline double objective(const GroupedDataset& data, const Matrix& B,
                        const PenaltyConfig& config, const FusionWeights& tau) {
  return config.fusion_norm == FusionNorm::L2 ? objective_l2(data, B, config, tau)
                                              : objective_l1(data, B, config, tau);
}

}  // namespace fusereg
