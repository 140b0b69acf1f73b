#pragma once

// Brute-force reference computations on nested std::vector storage. Nothing
// here goes through Eigen products or the library's operators.

#include "twoinf/linear_op.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows to_rows(const twoinf::DenseMatrix<double>& a) {
  Rows out(static_cast<std::size_t>(a.rows()), std::vector<double>(static_cast<std::size_t>(a.cols())));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j)
      out[i][j] = a(static_cast<twoinf::Index>(i), static_cast<twoinf::Index>(j));
  return out;
}

inline Rows to_rows(const twoinf::Matrix<double>& a) {
  Rows out(static_cast<std::size_t>(a.rows()), std::vector<double>(static_cast<std::size_t>(a.cols())));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j)
      out[i][j] = a(static_cast<twoinf::Index>(i), static_cast<twoinf::Index>(j));
  return out;
}

inline Rows gram(const Rows& a) {
  const std::size_t d = a.size();
  Rows b(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a[i].size(); ++k) s += a[i][k] * a[j][k];
      b[i][j] = s;
    }
  return b;
}

inline std::vector<double> matvec(const Rows& a, const std::vector<double>& x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < x.size(); ++k) y[i] += a[i][k] * x[k];
  return y;
}

inline std::vector<double> row_sq_norms(const Rows& a) {
  std::vector<double> out;
  for (const auto& row : a) {
    double s = 0;
    for (double v : row) s += v * v;
    out.push_back(s);
  }
  return out;
}

inline double max_row_norm(const Rows& a) {
  double best = 0;
  for (double s : row_sq_norms(a)) best = std::max(best, std::sqrt(s));
  return best;
}

inline double max_col_norm(const Rows& a) {
  double best = 0;
  if (a.empty()) return 0;
  for (std::size_t j = 0; j < a[0].size(); ++j) {
    double s = 0;
    for (const auto& row : a) s += row[j] * row[j];
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

/// diag(A A^T Q Q^T)_i = sum_j (A A^T)_{ij} (Q Q^T)_{ji}
inline std::vector<double> lowrank_diag(const Rows& a, const Rows& q) {
  const Rows b = gram(a);
  const std::size_t d = a.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double p = 0;
      for (std::size_t k = 0; k < q[j].size(); ++k) p += q[j][k] * q[i][k];
      out[i] += b[i][j] * p;
    }
  return out;
}

struct Gap {
  double max_sq;
  double gap;
  std::vector<std::size_t> argmax;
};

inline Gap gap(const Rows& a, double tie_tol = 1e-12) {
  const auto sq = row_sq_norms(a);
  double m = -1;
  for (double s : sq) m = std::max(m, s);
  const double band = tie_tol * std::max(1.0, m);
  Gap g{m, std::numeric_limits<double>::infinity(), {}};
  double second = -1;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (m - sq[i] <= band) g.argmax.push_back(i);
    else second = std::max(second, sq[i]);
  }
  if (second >= 0) g.gap = m - second;
  return g;
}

/// Sum over j != i of B_ij^2: per-entry variance of a single-sample
/// Hutchinson estimate of diag(B).
inline std::vector<double> hutchinson_variance(const Rows& b) {
  std::vector<double> out(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (j != i) out[i] += b[i][j] * b[i][j];
  return out;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace oracle
