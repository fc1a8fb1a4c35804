#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/errors.hpp"

namespace fusereg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One subgroup of observations: n_k responses and an n_k x p feature matrix.
struct Group {
  std::string id;
  Matrix X;
  Vector y;

  Eigen::Index n() const { return X.rows(); }
};

/// An ordered collection of subgroups sharing the same covariate set.
/// Immutable after construction; group iteration order is the construction
/// order and is stable.
class GroupedDataset {
 public:
  GroupedDataset() = default;

  explicit GroupedDataset(std::vector<Group> groups,
                          std::vector<std::string> covariate_names = {})
      : groups_(std::move(groups)), covariate_names_(std::move(covariate_names)) {
    if (groups_.empty()) throw ValidationError("dataset needs at least one group");
    const Eigen::Index p = groups_.front().X.cols();
    for (const auto& g : groups_) {
      if (g.X.cols() != p)
        throw ValidationError("group '" + g.id + "': covariate count differs across groups");
      if (g.X.rows() != g.y.size())
        throw ValidationError("group '" + g.id + "': X rows and y length differ");
      if (g.X.rows() < 1)
        throw ValidationError("group '" + g.id + "': empty group");
    }
    for (std::size_t a = 0; a < groups_.size(); ++a)
      for (std::size_t b = a + 1; b < groups_.size(); ++b)
        if (groups_[a].id == groups_[b].id)
          throw ValidationError("duplicate group id '" + groups_[a].id + "'");
    if (covariate_names_.empty()) {
      covariate_names_.reserve(static_cast<std::size_t>(p));
      for (Eigen::Index j = 0; j < p; ++j)
        covariate_names_.push_back("x" + std::to_string(j + 1));
    }
    if (covariate_names_.size() != static_cast<std::size_t>(p))
      throw ValidationError("covariate name count does not match p");
  }

  int K() const { return static_cast<int>(groups_.size()); }
  int p() const { return static_cast<int>(groups_.front().X.cols()); }
  int n(int k) const { return static_cast<int>(groups_.at(static_cast<std::size_t>(k)).n()); }
  int total_n() const {
    int n = 0;
    for (const auto& g : groups_) n += static_cast<int>(g.n());
    return n;
  }
  const Group& group(int k) const { return groups_.at(static_cast<std::size_t>(k)); }
  const std::vector<Group>& groups() const { return groups_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  int index_of(const std::string& id) const {
    for (std::size_t k = 0; k < groups_.size(); ++k)
      if (groups_[k].id == id) return static_cast<int>(k);
    return -1;
  }

 private:
  std::vector<Group> groups_;
  std::vector<std::string> covariate_names_;
};

/// Symmetric K x K matrix of pairwise fusion strengths in [0, 1], zero diagonal.
class FusionWeights {
 public:
  static FusionWeights uniform(int K) {
    if (K < 1) throw ValidationError("fusion weights need K >= 1");
    Matrix t = Matrix::Ones(K, K);
    t.diagonal().setZero();
    return FusionWeights(std::move(t));
  }

  static FusionWeights from_matrix(Matrix t) {
    if (t.rows() != t.cols() || t.rows() < 1)
      throw ValidationError("fusion weight matrix must be square");
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      if (t(i, i) != 0.0) throw ValidationError("fusion weight diagonal must be zero");
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        const double v = t(i, j);
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
          throw ValidationError("fusion weights must be finite and in [0, 1]");
        if (std::abs(v - t(j, i)) != 0.0)
          throw ValidationError("fusion weight matrix must be symmetric");
      }
    }
    return FusionWeights(std::move(t));
  }

  int K() const { return static_cast<int>(tau_.rows()); }
  const Matrix& tau() const { return tau_; }
  double operator()(int k, int l) const { return tau_(k, l); }

 private:
  explicit FusionWeights(Matrix t) : tau_(std::move(t)) {}
  Matrix tau_;
};

enum class FusionNorm { L2, L1 };

/// Penalty strengths for the joint objective. epsilon is the smoothing
/// accuracy target used by the L1-fusion solver only.
struct PenaltyConfig {
  double lambda = 0.0;
  double gamma = 0.0;
  FusionNorm fusion_norm = FusionNorm::L2;
  double epsilon = 1e-3;

  void validate() const {
    if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
    if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  }
};

struct SolverOptions {
  int max_iter = 1000;
  double tol = 1e-8;  // relative objective-change threshold
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
    if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
  }
};

struct FitResult {
  Matrix B;  // p x K
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
};

enum class Method { FusedL2, FusedL1, Pooled, Subgroupwise };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::FusedL2: return "fused_l2";
    case Method::FusedL1: return "fused_l1";
    case Method::Pooled: return "pooled";
    case Method::Subgroupwise: return "subgroupwise";
  }
  return "unknown";
}

inline Method parse_method(const std::string& s) {
  if (s == "fused_l2") return Method::FusedL2;
  if (s == "fused_l1") return Method::FusedL1;
  if (s == "pooled") return Method::Pooled;
  if (s == "subgroupwise") return Method::Subgroupwise;
  throw ValidationError("unknown method '" + s + "'");
}

/// Checks that a coefficient matrix is usable with the given dataset.
inline void validate_coefficients(const GroupedDataset& data, const Matrix& B) {
  if (B.rows() != data.p() || B.cols() != data.K())
    throw ValidationError("coefficient matrix dimensions do not match dataset");
  if (!B.allFinite()) throw ValidationError("coefficient matrix has non-finite entries");
}

}  // namespace fusereg
