#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fusereg/evaluation.hpp"
#include "fusereg/types.hpp"

namespace fusereg {

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ValidationError(context + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace detail

/// Writes the whole file through a temporary sibling plus rename, so readers
/// never observe a partially written file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot write '" + path + "': " + ec.message());
  }
}

/// Data file contract: header "group,y,<name>..."; one observation per row,
/// group id first, then the response, then covariate values. Group order is
/// the order of first appearance.
inline GroupedDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path + " line 1: missing header");
  line = detail::strip_cr(line);
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "group" || header[1] != "y")
    throw ValidationError(path + " line 1: header must be 'group,y,<covariates...>'");
  const std::size_t p = header.size() - 2;
  std::vector<std::string> names(header.begin() + 2, header.end());

  std::vector<std::string> group_order;
  std::map<std::string, std::vector<std::vector<double>>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw ValidationError(path + " line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    const std::string& id = fields[0];
    if (id.empty())
      throw ValidationError(path + " line " + std::to_string(line_no) + ": empty group id");
    std::vector<double> row(p + 1);
    for (std::size_t i = 1; i < fields.size(); ++i)
      row[i - 1] = parse_double(fields[i], path + " line " + std::to_string(line_no));
    if (rows.find(id) == rows.end()) group_order.push_back(id);
    rows[id].push_back(std::move(row));
  }
  if (group_order.empty()) throw ValidationError(path + ": no data rows");

  std::vector<Group> groups;
  groups.reserve(group_order.size());
  for (const auto& id : group_order) {
    const auto& r = rows[id];
    Matrix X(r.size(), p);
    Vector y(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = r[i][0];
      for (std::size_t j = 0; j < p; ++j)
        X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j + 1];
    }
    groups.push_back(Group{id, std::move(X), std::move(y)});
  }
  return GroupedDataset(std::move(groups), std::move(names));
}

inline void write_dataset_csv(const GroupedDataset& data, const std::string& path) {
  std::string out = "group,y";
  for (const auto& name : data.covariate_names()) out += "," + name;
  out += "\n";
  for (const auto& g : data.groups()) {
    for (Eigen::Index i = 0; i < g.n(); ++i) {
      out += g.id;
      out += ",";
      out += format_double(g.y(i));
      for (Eigen::Index j = 0; j < g.X.cols(); ++j) {
        out += ",";
        out += format_double(g.X(i, j));
      }
      out += "\n";
    }
  }
  write_file_atomic(path, out);
}

/// Coefficient (and ground-truth) file contract: "covariate,group,beta",
/// covariate-major row order.
inline void write_coefficients_csv(const std::vector<std::string>& covariate_names,
                                   const std::vector<std::string>& group_ids,
                                   const Matrix& B, const std::string& path) {
  std::string out = "covariate,group,beta\n";
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index k = 0; k < B.cols(); ++k) {
      out += covariate_names[static_cast<std::size_t>(j)];
      out += ",";
      out += group_ids[static_cast<std::size_t>(k)];
      out += ",";
      out += format_double(B(j, k));
      out += "\n";
    }
  }
  write_file_atomic(path, out);
}

inline Matrix read_coefficients_csv(const std::string& path,
                                    const std::vector<std::string>& covariate_names,
                                    const std::vector<std::string>& group_ids) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path + " line 1: missing header");
  if (detail::strip_cr(line) != "covariate,group,beta")
    throw ValidationError(path + " line 1: header must be 'covariate,group,beta'");
  auto index_in = [&](const std::vector<std::string>& names, const std::string& v,
                      int line_no) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == v) return static_cast<Eigen::Index>(i);
    throw ValidationError(path + " line " + std::to_string(line_no) + ": unknown name '" + v + "'");
  };
  Matrix B = Matrix::Zero(static_cast<Eigen::Index>(covariate_names.size()),
                          static_cast<Eigen::Index>(group_ids.size()));
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3)
      throw ValidationError(path + " line " + std::to_string(line_no) + ": expected 3 fields");
    const Eigen::Index j = index_in(covariate_names, fields[0], line_no);
    const Eigen::Index k = index_in(group_ids, fields[1], line_no);
    B(j, k) = parse_double(fields[2], path + " line " + std::to_string(line_no));
  }
  return B;
}

inline void write_tau_csv(const std::vector<std::string>& group_ids, const Matrix& tau,
                          const std::string& path) {
  std::string out = "group";
  for (const auto& id : group_ids) out += "," + id;
  out += "\n";
  for (Eigen::Index k = 0; k < tau.rows(); ++k) {
    out += group_ids[static_cast<std::size_t>(k)];
    for (Eigen::Index l = 0; l < tau.cols(); ++l) {
      out += ",";
      out += format_double(tau(k, l));
    }
    out += "\n";
  }
  write_file_atomic(path, out);
}

/// Triples (group_a, group_b, value) with a header row.
inline std::vector<std::tuple<std::string, std::string, double>> read_pair_entries_csv(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path + " line 1: missing header");
  if (detail::strip_cr(line) != "group_a,group_b,value")
    throw ValidationError(path + " line 1: header must be 'group_a,group_b,value'");
  std::vector<std::tuple<std::string, std::string, double>> entries;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3)
      throw ValidationError(path + " line " + std::to_string(line_no) + ": expected 3 fields");
    entries.emplace_back(fields[0], fields[1],
                         parse_double(fields[2], path + " line " + std::to_string(line_no)));
  }
  return entries;
}

inline void write_cv_table_csv(const CvResult& cv, const std::string& path) {
  std::string out = "lambda,gamma,fold,weighted_rmse\n";
  for (const auto& cell : cv.table) {
    for (std::size_t f = 0; f < cell.fold_rmse.size(); ++f) {
      out += format_double(cell.lambda);
      out += ",";
      out += format_double(cell.gamma);
      out += ",";
      out += std::to_string(f + 1);
      out += ",";
      out += format_double(cell.fold_rmse[f]);
      out += "\n";
    }
  }
  write_file_atomic(path, out);
}

/// Long-format report: sweep,replicate,method,metric,subgroup,value.
/// Overall metrics use subgroup "all". Runtime rows are optional because they
/// are not reproducible across runs.
inline void write_report_csv(
    const std::vector<std::pair<std::string, ComparisonReport>>& sweeps,
    const std::string& path, bool include_runtime = false) {
  std::string out = "sweep,replicate,method,metric,subgroup,value\n";
  for (const auto& [label, report] : sweeps) {
    for (const auto& row : report.rows) {
      const std::string prefix =
          label + "," + std::to_string(row.replicate + 1) + "," + method_name(row.method);
      if (!row.ok) {
        out += prefix + ",failed,all,1\n";
        continue;
      }
      out += prefix + ",weighted_rmse,all," + format_double(row.weighted_rmse) + "\n";
      out += prefix + ",auroc,all," + format_double(row.auroc) + "\n";
      for (std::size_t k = 0; k < row.subgroup_rmse.size(); ++k)
        out += prefix + ",rmse," + report.group_ids[k] + "," +
               format_double(row.subgroup_rmse[k]) + "\n";
      if (include_runtime)
        out += prefix + ",runtime_seconds,all," + format_double(row.runtime_sec) + "\n";
    }
  }
  write_file_atomic(path, out);
}

}  // namespace fusereg
