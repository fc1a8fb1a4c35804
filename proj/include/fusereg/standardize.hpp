#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/types.hpp"

namespace fusereg {

/// Per-group centering/scaling parameters, kept so that model output can be
/// mapped back to the units of the original data.
struct StandardizationRecord {
  struct GroupScale {
    std::string id;
    Vector x_mean;   // p
    Vector x_scale;  // p, constant columns recorded as 1
    double y_mean = 0.0;
    double y_scale = 1.0;
  };
  std::vector<GroupScale> groups;

  const GroupScale& find(const std::string& id) const {
    for (const auto& g : groups)
      if (g.id == id) return g;
    throw ValidationError("unknown group id '" + id + "' in standardization record");
  }
};

struct StandardizedData {
  GroupedDataset data;
  StandardizationRecord record;
};

namespace detail {

// Unbiased (n-1) standard deviation of a column; 0 for constant columns.
inline double column_sd(const Vector& v) {
  const Eigen::Index n = v.size();
  if (n < 2) return 0.0;
  const double mean = v.mean();
  const double ss = (v.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace detail

/// Centers and scales every covariate column and the response within each
/// group. Constant columns are centered and left unscaled (scale recorded
/// as 1), so they become all-zero columns.
inline StandardizedData standardize_by_group(const GroupedDataset& data) {
  std::vector<Group> out;
  StandardizationRecord record;
  out.reserve(data.groups().size());
  for (const auto& g : data.groups()) {
    if (g.n() < 2)
      throw ValidationError("group '" + g.id + "': insufficient samples for standardization");
    StandardizationRecord::GroupScale s;
    s.id = g.id;
    s.x_mean.resize(g.X.cols());
    s.x_scale.resize(g.X.cols());
    Matrix X = g.X;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double mean = X.col(j).mean();
      double sd = detail::column_sd(X.col(j));
      if (sd <= 0.0) sd = 1.0;
      X.col(j) = (X.col(j).array() - mean) / sd;
      s.x_mean(j) = mean;
      s.x_scale(j) = sd;
    }
    Vector y = g.y;
    s.y_mean = y.mean();
    double ysd = detail::column_sd(y);
    if (ysd <= 0.0) ysd = 1.0;
    s.y_scale = ysd;
    y = (y.array() - s.y_mean) / s.y_scale;
    out.push_back(Group{g.id, std::move(X), std::move(y)});
    record.groups.push_back(std::move(s));
  }
  return StandardizedData{GroupedDataset(std::move(out), data.covariate_names()),
                          std::move(record)};
}

/// Centers and scales covariate columns over all groups pooled. Used before
/// computing between-group distances so scale differences do not dominate.
inline GroupedDataset standardize_globally(const GroupedDataset& data) {
  const int p = data.p();
  const int n = data.total_n();
  Vector mean = Vector::Zero(p);
  for (const auto& g : data.groups())
    mean += g.X.colwise().sum().transpose();
  mean /= static_cast<double>(n);
  Vector scale = Vector::Ones(p);
  if (n >= 2) {
    Vector ss = Vector::Zero(p);
    for (const auto& g : data.groups())
      ss += (g.X.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    for (int j = 0; j < p; ++j) {
      const double sd = std::sqrt(ss(j) / static_cast<double>(n - 1));
      if (sd > 0.0) scale(j) = sd;
    }
  }
  std::vector<Group> out;
  out.reserve(data.groups().size());
  for (const auto& g : data.groups()) {
    Matrix X = (g.X.rowwise() - mean.transpose()).array().rowwise() /
               scale.transpose().array();
    out.push_back(Group{g.id, std::move(X), g.y});
  }
  return GroupedDataset(std::move(out), data.covariate_names());
}

/// Predictions in original response units for data given in original units:
/// covariates are standardized with the recorded per-group parameters, the
/// linear predictor is formed with the group's coefficient column, and the
/// result is mapped back through the recorded response scale.
inline std::vector<Vector> predict(const GroupedDataset& data, const Matrix& B,
                                   const StandardizationRecord& record) {
  validate_coefficients(data, B);
  std::vector<Vector> out;
  out.reserve(data.groups().size());
  for (int k = 0; k < data.K(); ++k) {
    const Group& g = data.group(k);
    const auto& s = record.find(g.id);
    if (s.x_mean.size() != g.X.cols())
      throw ValidationError("standardization record does not match covariate count");
    Matrix X = (g.X.rowwise() - s.x_mean.transpose()).array().rowwise() /
               s.x_scale.transpose().array();
    Vector yhat = (s.y_mean + s.y_scale * (X * B.col(k)).array()).matrix();
    out.push_back(std::move(yhat));
  }
  return out;
}

}  // namespace fusereg
