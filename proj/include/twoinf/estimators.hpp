#pragma once

// Two-to-infinity norm estimators and the exact/analytic helpers used to
// check them.

#include "twoinf/linear_op.hpp"
#include "twoinf/rng.hpp"
#include "twoinf/sketch.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace twoinf {

template <typename Scalar>
struct NormEstimate {
  Scalar value = Scalar(0);
  std::optional<Index> selected_row;
  std::uint64_t matvecs_used = 0;
  // Set when an iterative method hit a zero iterate and stopped early.
  bool degenerate = false;
};

template <typename Scalar>
struct GapReport {
  Scalar max_sq_norm = Scalar(0);
  // +infinity when every row ties with the maximum.
  Scalar gap = Scalar(0);
  std::vector<Index> argmax_set;

  bool all_tie() const { return std::isinf(gap); }
};

enum class Method { twinest, twinest_pp, rademacher_averaging, adaptive_power };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::twinest: return "twinest";
    case Method::twinest_pp: return "twinest_pp";
    case Method::rademacher_averaging: return "rademacher_averaging";
    case Method::adaptive_power: return "adaptive_power";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  for (Method m : {Method::twinest, Method::twinest_pp,
                   Method::rademacher_averaging, Method::adaptive_power})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

enum class DualNorm { two, infinity };

namespace detail {

// First index attaining the maximum.
template <typename Derived>
Index first_argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Evaluates ||A_j|| through one transpose matvec with e_j.
template <typename Scalar>
Scalar selected_row_norm(const LinearOp<Scalar>& a, Index j) {
  Vector<Scalar> e = Vector<Scalar>::Zero(a.rows());
  e[j] = Scalar(1);
  return a.apply_transpose(e).norm();
}

inline void require_samples(std::uint64_t m, std::uint64_t min, const char* who) {
  if (m < min)
    throw std::invalid_argument(std::string(who) + ": m must be >= " +
                                std::to_string(min) + ", got " + std::to_string(m));
}

}  // namespace detail

/// Max row l2 norm read directly from the entries. Ties go to the smallest
/// row index; no matvecs.
template <typename Derived>
NormEstimate<typename Derived::Scalar> exact_two_to_inf(
    const Eigen::MatrixBase<Derived>& mat) {
  using Scalar = typename Derived::Scalar;
  if (!mat.allFinite()) throw std::invalid_argument("exact_two_to_inf: non-finite entries");
  if (mat.rows() == 0) return {Scalar(0), std::nullopt, 0, false};
  const Vector<Scalar> norms = mat.rowwise().norm();
  const Index j = detail::first_argmax(norms);
  return {norms[j], j, 0, false};
}

/// TwINEst: Hutchinson estimate of diag(A A^T) from m Rademacher samples,
/// pick its argmax row j, return ||A_j||. Costs 2m + 1 matvecs.
template <typename Scalar>
NormEstimate<Scalar> twinest(const LinearOp<Scalar>& a, std::uint64_t m,
                             RngStream& rng) {
  detail::require_samples(m, 1, "twinest");
  const GramOp<Scalar> gram(a);
  const DiagEstimate<Scalar> diag = hutchinson_diag<Scalar>(gram, m, rng);
  const Index j = detail::first_argmax(diag.values);
  return {detail::selected_row_norm(a, j), j, 2 * m + 1, false};
}

/// TwINEst++: as twinest, with the diagonal from hutchpp_diag. Costs 2m + 1.
template <typename Scalar>
NormEstimate<Scalar> twinest_pp(const LinearOp<Scalar>& a, std::uint64_t m,
                                RngStream& rng) {
  detail::require_samples(m, 3, "twinest_pp");
  const DiagEstimate<Scalar> diag = hutchpp_diag<Scalar>(a, m, rng);
  const Index j = detail::first_argmax(diag.values);
  return {detail::selected_row_norm(a, j), j, 2 * m + 1, false};
}

/// Ablation baseline: sqrt(max(0, max_i D_i)) with D the Hutchinson estimate.
/// Costs 2m matvecs.
template <typename Scalar>
NormEstimate<Scalar> rademacher_averaging(const LinearOp<Scalar>& a,
                                          std::uint64_t m, RngStream& rng) {
  detail::require_samples(m, 1, "rademacher_averaging");
  const GramOp<Scalar> gram(a);
  const DiagEstimate<Scalar> diag = hutchinson_diag<Scalar>(gram, m, rng);
  const Scalar top = diag.values.maxCoeff();
  return {std::sqrt(std::max(Scalar(0), top)), std::nullopt, 2 * m, false};
}

/// dual_2(x) = x / ||x||_2; dual_inf(x) spreads sign(x) uniformly over the
/// coordinates with |x_i| == ||x||_inf (exact comparison).
template <typename Derived>
Vector<typename Derived::Scalar> dual_vector(const Eigen::MatrixBase<Derived>& x,
                                             DualNorm p) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0 || (x.array() == Scalar(0)).all())
    throw std::invalid_argument("dual_vector: dual of the zero vector is undefined");
  if (p == DualNorm::two) return x / x.norm();

  const Scalar top = x.cwiseAbs().maxCoeff();
  Vector<Scalar> out = Vector<Scalar>::Zero(x.size());
  Index ties = 0;
  for (Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) == top) {
      out[i] = x[i] > Scalar(0) ? Scalar(1) : Scalar(-1);
      ++ties;
    }
  }
  return out / static_cast<Scalar>(ties);
}

/// Adaptive power method baseline: X^0 ~ N(0, I_n), then
/// Y^i = dual_inf(A X^{i-1}), X^i = dual_2(A^T Y^i); returns ||A X^m||_inf.
/// Costs 2m + 1 matvecs. A zero iterate stops early with `degenerate` set.
template <typename Scalar>
NormEstimate<Scalar> adaptive_power(const LinearOp<Scalar>& a, std::uint64_t m,
                                    RngStream& rng) {
  detail::require_samples(m, 1, "adaptive_power");
  Vector<Scalar> x(a.cols());
  for (Index i = 0; i < x.size(); ++i) x[i] = static_cast<Scalar>(rng.normal());

  std::uint64_t used = 0;
  auto stop = [&](Scalar best) {
    return NormEstimate<Scalar>{best, std::nullopt, used, true};
  };

  for (std::uint64_t it = 0; it < m; ++it) {
    const Vector<Scalar> ax = a.apply(x);
    ++used;
    const Scalar current = ax.size() ? ax.cwiseAbs().maxCoeff() : Scalar(0);
    if (current == Scalar(0)) return stop(Scalar(0));
    const Vector<Scalar> y = dual_vector(ax, DualNorm::infinity);
    const Vector<Scalar> aty = a.apply_transpose(y);
    ++used;
    if ((aty.array() == Scalar(0)).all()) return stop(current);
    x = dual_vector(aty, DualNorm::two);
  }
  const Vector<Scalar> ax = a.apply(x);
  ++used;
  return {ax.size() ? ax.cwiseAbs().maxCoeff() : Scalar(0), std::nullopt, used, false};
}

/// Dispatches to one of the estimators with sample parameter m.
template <typename Scalar>
NormEstimate<Scalar> estimate_two_to_inf(const LinearOp<Scalar>& a, Method method,
                                         std::uint64_t m, RngStream& rng) {
  switch (method) {
    case Method::twinest: return twinest(a, m, rng);
    case Method::twinest_pp: return twinest_pp(a, m, rng);
    case Method::rademacher_averaging: return rademacher_averaging(a, m, rng);
    case Method::adaptive_power: return adaptive_power(a, m, rng);
  }
  throw std::invalid_argument("estimate_two_to_inf: bad method");
}

/// ||A||_{1->2} = ||A^T||_{2->inf}: runs the estimator on the transposed
/// operator. selected_row, when present, indexes a column of A.
template <typename Scalar>
NormEstimate<Scalar> estimate_one_to_two(const LinearOp<Scalar>& a, Method method,
                                         std::uint64_t m, RngStream& rng) {
  const TransposeOp<Scalar> at(a);
  return estimate_two_to_inf(at, method, m, rng);
}

/// Largest squared row norm M, the rows tying with it (within
/// tie_tol * max(1, M)), and the gap to the next distinct squared norm.
template <typename Derived>
GapReport<typename Derived::Scalar> compute_gap(const Eigen::MatrixBase<Derived>& mat,
                                                double tie_tol = 1e-12) {
  using Scalar = typename Derived::Scalar;
  if (mat.rows() == 0) throw std::invalid_argument("compute_gap: matrix has no rows");
  if (tie_tol < 0) throw std::invalid_argument("compute_gap: tie_tol must be >= 0");

  const Vector<Scalar> sq = mat.rowwise().squaredNorm();
  GapReport<Scalar> report;
  report.max_sq_norm = sq.maxCoeff();
  const Scalar band =
      static_cast<Scalar>(tie_tol) * std::max(Scalar(1), report.max_sq_norm);
  const Scalar floor = report.max_sq_norm - band;

  std::optional<Scalar> runner_up;
  for (Index i = 0; i < sq.size(); ++i) {
    if (sq[i] >= floor) {
      report.argmax_set.push_back(i);
    } else if (!runner_up || sq[i] > *runner_up) {
      runner_up = sq[i];
    }
  }
  report.gap = runner_up ? report.max_sq_norm - *runner_up
                         : std::numeric_limits<Scalar>::infinity();
  return report;
}

/// Off-diagonal part of A A^T, measured in the two-to-infinity norm. Dense,
/// test-scale only.
template <typename Derived>
typename Derived::Scalar offdiag_gram_two_to_inf(const Eigen::MatrixBase<Derived>& mat) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> b = mat * mat.transpose();
  b.diagonal().setZero();
  return b.rowwise().norm().maxCoeff();
}

/// Smallest m strictly above 8 log(2d/delta) / gap^2 * ||AA^T - diag(AA^T)||^2_{2->inf},
/// the sample count that guarantees exact recovery by twinest with
/// probability at least 1 - delta.
template <typename Derived>
std::uint64_t sufficient_m_twinest(const Eigen::MatrixBase<Derived>& mat, double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("sufficient_m_twinest: delta must lie in (0, 1]");
  const auto report = compute_gap(mat);
  if (report.all_tie() || !(report.gap > 0))
    throw std::invalid_argument(
        "sufficient_m_twinest: gap is zero (all rows tie), the bound is undefined");

  const double d = static_cast<double>(mat.rows());
  const double off = static_cast<double>(offdiag_gram_two_to_inf(mat));
  const double gap = static_cast<double>(report.gap);
  const double bound = 8.0 * std::log(2.0 * d / delta) / (gap * gap) * off * off;
  if (!(bound < 0x1.0p62))
    throw std::overflow_error("sufficient_m_twinest: bound exceeds 2^62 samples");
  return static_cast<std::uint64_t>(std::floor(bound)) + 1;
}

}  // namespace twoinf
