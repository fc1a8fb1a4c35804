#pragma once

#include <utility>

#include "fusereg/lasso.hpp"
#include "fusereg/types.hpp"

namespace fusereg {

/// All groups stacked into a single design, in group order.
inline std::pair<Matrix, Vector> stack_groups(const GroupedDataset& data) {
  const int p = data.p();
  const int n = data.total_n();
  Matrix X(n, p);
  Vector y(n);
  Eigen::Index row = 0;
  for (const auto& g : data.groups()) {
    X.middleRows(row, g.n()) = g.X;
    y.segment(row, g.n()) = g.y;
    row += g.n();
  }
  return {std::move(X), std::move(y)};
}

/// One lasso on the pooled data; the single coefficient vector is replicated
/// across all K columns.
inline FitResult fit_pooled(const GroupedDataset& data, double lambda,
                            const SolverOptions& opts,
                            const Vector* beta_init = nullptr) {
  auto [X, y] = stack_groups(data);
  FitResult pooled = lasso_cd(X, y, lambda, opts, beta_init);
  FitResult result;
  result.B = pooled.B.col(0).replicate(1, data.K());
  result.objective_trace = std::move(pooled.objective_trace);
  result.iterations = pooled.iterations;
  result.converged = pooled.converged;
  return result;
}

/// Independent lasso per group, one shared lambda. The trace holds the final
/// total objective (sum of per-group lasso objectives).
inline FitResult fit_subgroupwise(const GroupedDataset& data, double lambda,
                                  const SolverOptions& opts,
                                  const Matrix* B_init = nullptr) {
  FitResult result;
  result.B.resize(data.p(), data.K());
  result.converged = true;
  double total = 0.0;
  for (int k = 0; k < data.K(); ++k) {
    const Group& g = data.group(k);
    Vector init;
    const Vector* init_ptr = nullptr;
    if (B_init) {
      init = B_init->col(k);
      init_ptr = &init;
    }
    FitResult fit = lasso_cd(g.X, g.y, lambda, opts, init_ptr);
    result.B.col(k) = fit.B.col(0);
    result.iterations = std::max(result.iterations, fit.iterations);
    result.converged = result.converged && fit.converged;
    total += fit.objective_trace.back();
  }
  result.objective_trace.push_back(total);
  return result;
}

}  // namespace fusereg
