#pragma once

#include <cmath>
#include <vector>

#include "fusereg/objective.hpp"
#include "fusereg/types.hpp"

namespace fusereg {

/// A single classical lasso instance.
template <typename MatrixT = Matrix>
struct LassoProblem {
  MatrixT X;
  Vector y;
  double lambda = 0.0;
};

/// Smallest lambda for which the lasso solution on (X, y) is exactly zero:
/// 2 * max_j |x_j' y|.
template <typename MatrixT>
double lasso_zero_lambda(const MatrixT& X, const Vector& y) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    m = std::max(m, std::abs(X.col(j).dot(y)));
  return 2.0 * m;
}

/// Cyclic coordinate descent for  min_b ||y - X b||^2 + lambda ||b||_1.
/// Residuals are maintained incrementally within a sweep and recomputed at
/// sweep boundaries; the objective trace is recorded once per sweep and is
/// non-increasing. Works for dense and column-major sparse X.
template <typename MatrixT>
FitResult lasso_cd(const MatrixT& X, const Vector& y, double lambda,
                   const SolverOptions& opts, const Vector* beta_init = nullptr) {
  opts.validate();
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (X.rows() != y.size()) throw ValidationError("X rows and y length differ");
  const Eigen::Index p = X.cols();

  Vector beta = Vector::Zero(p);
  if (beta_init) {
    if (beta_init->size() != p) throw ValidationError("beta_init length does not match p");
    beta = *beta_init;
  }

  Vector col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j) col_sq(j) = X.col(j).squaredNorm();

  FitResult result;
  Vector r = y - X * beta;
  double prev = r.squaredNorm() + lambda * beta.template lpNorm<1>();
  result.objective_trace.push_back(prev);

  const double half_lambda = 0.5 * lambda;
  for (int sweep = 0; sweep < opts.max_iter; ++sweep) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) <= 0.0) {
        if (beta(j) != 0.0) {
          beta(j) = 0.0;  // degenerate column carries no signal
        }
        continue;
      }
      const double old = beta(j);
      const double u = X.col(j).dot(r) + col_sq(j) * old;
      const double next = soft_threshold(u, half_lambda) / col_sq(j);
      const double delta = next - old;
      if (delta != 0.0) {
        r -= delta * X.col(j);
        beta(j) = next;
      }
    }
    r = y - X * beta;
    const double f = r.squaredNorm() + lambda * beta.template lpNorm<1>();
    if (!std::isfinite(f)) throw NumericalError("lasso coordinate descent diverged");
    result.objective_trace.push_back(f);
    result.iterations = sweep + 1;
    if (std::abs(f - prev) / std::max(1.0, std::abs(prev)) < opts.tol) {
      result.converged = true;
      prev = f;
      break;
    }
    prev = f;
  }

  result.B = beta;
  return result;
}

template <typename MatrixT>
FitResult lasso_cd(const LassoProblem<MatrixT>& problem, const SolverOptions& opts,
                   const Vector* beta_init = nullptr) {
  return lasso_cd(problem.X, problem.y, problem.lambda, opts, beta_init);
}

}  // namespace fusereg
