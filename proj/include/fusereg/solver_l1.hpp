#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>
#include <vector>

#include "fusereg/detail/rng.hpp"
#include "fusereg/objective.hpp"
#include "fusereg/types.hpp"

namespace fusereg {

/// C = (lambda I_K, gamma H) where H is the signed incidence matrix of the
/// complete fusion graph scaled by tau: column e = (m, l), m < l, carries
/// +tau_{m,l} in row m and -tau_{m,l} in row l. For every B,
/// ||B C||_1 = lambda ||B||_1 + gamma sum_{m<l} tau_{m,l} ||b_m - b_l||_1.
struct FusionGraphMatrix {
  Matrix C;                                // K x (K + |E|)
  std::vector<std::pair<int, int>> edges;  // lexicographic, |E| = K(K-1)/2
};

inline FusionGraphMatrix build_C(int K, double lambda, double gamma,
                                 const FusionWeights& tau) {
  if (K < 1) throw ValidationError("build_C requires K >= 1");
  if (tau.K() != K) throw ValidationError("fusion weight dimension does not match K");
  FusionGraphMatrix out;
  const int n_edges = K * (K - 1) / 2;
  out.C = Matrix::Zero(K, K + n_edges);
  out.C.topLeftCorner(K, K) = lambda * Matrix::Identity(K, K);
  int e = 0;
  for (int m = 0; m < K; ++m) {
    for (int l = m + 1; l < K; ++l) {
      out.C(m, K + e) = gamma * tau(m, l);
      out.C(l, K + e) = -gamma * tau(m, l);
      out.edges.emplace_back(m, l);
      ++e;
    }
  }
  return out;
}

/// Maximizer of <A, BC> - mu/2 ||A||_F^2 over ||A||_inf <= 1: BC/mu with
/// every entry clamped to [-1, 1].
inline Matrix optimal_A(const Matrix& B, const FusionGraphMatrix& C, double mu) {
  if (!(mu > 0.0)) throw ValidationError("mu must be > 0");
  return ((B * C.C) / mu).cwiseMax(-1.0).cwiseMin(1.0);
}

/// Smooth surrogate of the L1-fusion objective:
///   sum_k ||y_k - X_k b_k||^2 + <A*, BC> - mu/2 ||A*||_F^2.
/// Lies within [objective_l1 - mu p (K+|E|)/2, objective_l1].
inline double smooth_objective(const GroupedDataset& data, const Matrix& B,
                               const FusionGraphMatrix& C, double mu) {
  validate_coefficients(data, B);
  const Matrix BC = B * C.C;
  const Matrix A = (BC / mu).cwiseMax(-1.0).cwiseMin(1.0);
  return detail::residual_sum_of_squares(data, B) + (A.array() * BC.array()).sum() -
         0.5 * mu * A.squaredNorm();
}

/// Gradient of the smooth surrogate: per-column data term
/// 2 X_k'(X_k b_k - y_k) plus A* C'.
inline Matrix gradient(const GroupedDataset& data, const Matrix& B,
                       const FusionGraphMatrix& C, double mu) {
  validate_coefficients(data, B);
  Matrix grad(data.p(), data.K());
  for (int k = 0; k < data.K(); ++k) {
    const Group& g = data.group(k);
    grad.col(k) = 2.0 * (g.X.transpose() * (g.X * B.col(k) - g.y));
  }
  grad += optimal_A(B, C, mu) * C.C.transpose();
  return grad;
}

/// Largest eigenvalue of a symmetric PSD matrix: exact solve for small
/// matrices, seeded power iteration (<= 200 steps, 1e-8 relative) otherwise.
inline double largest_eigenvalue(const Matrix& M, std::uint64_t seed = 0) {
  const Eigen::Index n = M.rows();
  if (n == 0) return 0.0;
  if (n <= 100) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  detail::Rng rng(detail::derive_seed(seed, 0x9a37));
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  v.normalize();
  double value = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    Vector w = M * v;
    const double norm = w.norm();
    if (norm <= 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - value) <= 1e-8 * std::max(1.0, std::abs(next))) {
      value = next;
      break;
    }
    value = next;
  }
  return value;
}

/// Step-size bound for the smoothed problem:
///   2 max_k eig_max(X_k'X_k) + (lambda^2 + 2 gamma^2 max_k d_k) / mu,
/// d_k = sum_{k'} tau_{k,k'}. The data term carries the factor 2 because the
/// fidelity term is unhalved.
inline double lipschitz_bound(const GroupedDataset& data, const FusionWeights& tau,
                              double lambda, double gamma, double mu,
                              std::uint64_t seed = 0) {
  if (!(mu > 0.0)) throw ValidationError("mu must be > 0");
  double eig = 0.0;
  for (int k = 0; k < data.K(); ++k) {
    const Group& g = data.group(k);
    eig = std::max(eig, largest_eigenvalue(g.X.transpose() * g.X, seed + static_cast<std::uint64_t>(k)));
  }
  const double max_degree = tau.tau().rowwise().sum().maxCoeff();
  return 2.0 * eig + (lambda * lambda + 2.0 * gamma * gamma * max_degree) / mu;
}

struct SmoothingState {
  double mu = 0.0;
  double L_U = 0.0;
};

/// mu = epsilon / (p (K + |E|)), the setting that makes the uniform smoothing
/// gap at most epsilon / 2 ... epsilon.
inline SmoothingState make_smoothing_state(const GroupedDataset& data,
                                           const PenaltyConfig& config,
                                           const FusionWeights& tau) {
  config.validate();
  const int K = data.K();
  const int n_edges = K * (K - 1) / 2;
  SmoothingState s;
  s.mu = config.epsilon / (static_cast<double>(data.p()) * static_cast<double>(K + n_edges));
  s.L_U = lipschitz_bound(data, tau, config.lambda, config.gamma, s.mu);
  return s;
}

/// Nesterov's accelerated scheme on the smoothed objective. Iterates may
/// oscillate, so the iterate with the best true L1-fusion objective is
/// returned, and convergence is declared on the true objective.
inline FitResult fit_proximal(const GroupedDataset& data, const PenaltyConfig& config,
                              const FusionWeights& tau, const SolverOptions& opts,
                              const Matrix* B_init = nullptr) {
  config.validate();
  opts.validate();
  if (config.fusion_norm != FusionNorm::L1)
    throw ValidationError("fit_proximal requires fusion_norm = L1");
  if (tau.K() != data.K())
    throw ValidationError("fusion weight dimension does not match group count");

  const int p = data.p();
  const int K = data.K();
  const FusionGraphMatrix C = build_C(K, config.lambda, config.gamma, tau);
  const SmoothingState smoothing = make_smoothing_state(data, config, tau);
  const double L = smoothing.L_U;
  if (!(L > 0.0)) throw NumericalError("fit_proximal: nonpositive Lipschitz bound");

  // Gram form of the data gradient, 2 (X'X w - X'y) per column.
  std::vector<Matrix> gram(static_cast<std::size_t>(K));
  std::vector<Vector> xty(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const Group& g = data.group(k);
    gram[k] = g.X.transpose() * g.X;
    xty[k] = g.X.transpose() * g.y;
  }
  auto smooth_grad = [&](const Matrix& W) {
    Matrix grad(p, K);
    for (int k = 0; k < K; ++k)
      grad.col(k) = 2.0 * (gram[k] * W.col(k) - xty[k]);
    grad += ((W * C.C) / smoothing.mu).cwiseMax(-1.0).cwiseMin(1.0) * C.C.transpose();
    return grad;
  };

  Matrix W = B_init ? *B_init : Matrix::Zero(p, K);
  validate_coefficients(data, W);
  Matrix grad_sum = Matrix::Zero(p, K);

  FitResult result;
  Matrix best_B = W;
  double best_f = objective_l1(data, W, config, tau);
  result.objective_trace.push_back(best_f);
  double prev_f = best_f;

  for (int i = 0; i < opts.max_iter; ++i) {
    const Matrix G = smooth_grad(W);
    if (!G.allFinite()) throw NumericalError("fit_proximal diverged; check L_U");
    const Matrix B_i = W - G / L;
    grad_sum += (static_cast<double>(i + 1) / 2.0) * G;
    const Matrix Z = -grad_sum / L;
    W = (static_cast<double>(i + 1) * B_i + 2.0 * Z) / static_cast<double>(i + 3);

    const double f = objective_l1(data, B_i, config, tau);
    if (!std::isfinite(f)) throw NumericalError("fit_proximal diverged; check L_U");
    result.objective_trace.push_back(f);
    result.iterations = i + 1;
    if (f < best_f) {
      best_f = f;
      best_B = B_i;
    }
    if (std::abs(f - prev_f) / std::max(1.0, std::abs(prev_f)) < opts.tol) {
      result.converged = true;
      break;
    }
    prev_f = f;
  }

  result.B = std::move(best_B);
  return result;
}

}  // namespace fusereg
