#pragma once

// Random sketching primitives: Rademacher sampling, the Hutchinson diagonal
// estimator, thin QR, and the deflated (Hutch++-style) diagonal estimator.

#include "twoinf/linear_op.hpp"
#include "twoinf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace twoinf {

template <typename Scalar>
struct DiagEstimate {
  Vector<Scalar> values;
  std::uint64_t samples_used = 0;
};

/// Vector of i.i.d. +-1 entries. Consumes ceil(dim / 64) words of the stream,
/// one bit per entry, so a sequence of draws does not depend on how callers
/// batch them.
template <typename Scalar = double>
Vector<Scalar> rademacher_vector(Index dim, RngStream& rng) {
  if (dim <= 0) throw std::invalid_argument("rademacher_vector: dim must be >= 1");
  Vector<Scalar> out(dim);
  Index i = 0;
  while (i < dim) {
    std::uint64_t word = rng.next_u64();
    const Index end = std::min<Index>(dim, i + 64);
    for (; i < end; ++i, word >>= 1)
      out[i] = (word & 1U) ? Scalar(1) : Scalar(-1);
  }
  return out;
}

/// dim x count block whose columns are successive rademacher_vector draws.
template <typename Scalar = double>
Matrix<Scalar> rademacher_matrix(Index dim, Index count, RngStream& rng) {
  Matrix<Scalar> out(dim, count);
  for (Index k = 0; k < count; ++k) out.col(k) = rademacher_vector<Scalar>(dim, rng);
  return out;
}

namespace detail {
// Samples are drawn and applied in blocks of this many columns.
inline constexpr Index kSampleBlock = 256;
}  // namespace detail

/// D^m = (1/m) sum_i X^i .* (op X^i) for Rademacher X^i. Exactly m operator
/// applications.
template <typename Scalar>
DiagEstimate<Scalar> hutchinson_diag(const LinearOp<Scalar>& op,
                                     std::uint64_t m, RngStream& rng) {
  if (!op.is_square())
    throw std::invalid_argument("hutchinson_diag: operator must be square, got " +
                                std::to_string(op.rows()) + "x" +
                                std::to_string(op.cols()));
  if (m == 0) throw std::invalid_argument("hutchinson_diag: m must be >= 1");

  const Index d = op.rows();
  Vector<Scalar> sum = Vector<Scalar>::Zero(d);
  std::uint64_t done = 0;
  while (done < m) {
    const auto block = static_cast<Index>(
        std::min<std::uint64_t>(m - done, detail::kSampleBlock));
    const Matrix<Scalar> x = rademacher_matrix<Scalar>(d, block, rng);
    const Matrix<Scalar> y = op.apply_block(x);
    sum += x.cwiseProduct(y).rowwise().sum();
    done += static_cast<std::uint64_t>(block);
  }
  return {sum / static_cast<Scalar>(m), m};
}

/// Orthonormal basis Q (d x r) with range(Q) containing range(mat).
///
/// Classical Gram-Schmidt with a second orthogonalization pass. A column whose
/// residual drops below 1e-12 of its original norm is replaced by a random
/// direction from a fixed-seed stream, so the result is a deterministic
/// function of the input and always has r orthonormal columns.
template <typename Derived>
Matrix<typename Derived::Scalar> thin_qr(const Eigen::MatrixBase<Derived>& mat) {
  using Scalar = typename Derived::Scalar;
  const Index d = mat.rows();
  const Index r = mat.cols();
  if (r > d)
    throw std::invalid_argument("thin_qr: more columns (" + std::to_string(r) +
                                ") than rows (" + std::to_string(d) + ")");
  if (!mat.allFinite()) throw std::invalid_argument("thin_qr: non-finite input");

  constexpr Scalar kRankTol = Scalar(1e-12);
  Matrix<Scalar> q(d, r);

  auto orthogonalize = [&](Vector<Scalar>& v, Index k) {
    for (int pass = 0; pass < 2; ++pass) {
      if (k > 0) v.noalias() -= q.leftCols(k) * (q.leftCols(k).transpose() * v);
    }
  };

  for (Index k = 0; k < r; ++k) {
    Vector<Scalar> v = mat.col(k);
    const Scalar original = v.norm();
    orthogonalize(v, k);
    Scalar norm = v.norm();
    if (!(original > Scalar(0)) || norm <= kRankTol * original) {
      RngStream completion = RngStream(kQrCompletionTag).derive(static_cast<std::uint64_t>(k));
      do {
        v = rademacher_vector<Scalar>(d, completion);
        const Scalar start = v.norm();
        orthogonalize(v, k);
        norm = v.norm();
        if (norm > Scalar(1e-6) * start) break;
      } while (true);
    }
    q.col(k) = v / norm;
  }
  return q;
}

/// diag(A A^T Q Q^T), computed as the row-wise inner products of A (A^T Q)
/// with Q. Costs 2r matvecs.
template <typename Scalar>
Vector<Scalar> lowrank_diag(const LinearOp<Scalar>& a,
                            const Eigen::Ref<const Matrix<Scalar>>& q) {
  check_dimension("lowrank_diag basis rows", a.rows(), q.rows());
  if (q.cols() == 0) return Vector<Scalar>::Zero(a.rows());
  const Matrix<Scalar> w = a.apply_transpose_block(q);
  const Matrix<Scalar> z = a.apply_block(w);
  return z.cwiseProduct(q).rowwise().sum();
}

/// Sketch/residual split used by hutchpp_diag for a budget m on a d-row A.
struct HutchppSplit {
  std::uint64_t sketch_columns;
  std::uint64_t residual_samples;
};

inline HutchppSplit hutchpp_split(std::uint64_t m, Index d) {
  if (m < 3) throw std::invalid_argument("hutchpp_diag: m must be >= 3");
  std::uint64_t r = m / 3;
  r = std::min<std::uint64_t>(r, static_cast<std::uint64_t>(d));
  return {r, m - 2 * r};
}

/// Diagonal of A A^T from a budget of m sketch/sample vectors: a basis Q of
/// A A^T S (floor(m/3) Rademacher columns) gives the low-rank part exactly,
/// the rest of the budget goes to Hutchinson on A A^T (I - Q Q^T).
/// Costs 2m matvecs on A and A^T.
template <typename Scalar>
DiagEstimate<Scalar> hutchpp_diag(const LinearOp<Scalar>& a, std::uint64_t m,
                                  RngStream& rng) {
  const Index d = a.rows();
  const HutchppSplit split = hutchpp_split(m, d);
  const auto r = static_cast<Index>(split.sketch_columns);

  const GramOp<Scalar> gram(a);
  const Matrix<Scalar> s = rademacher_matrix<Scalar>(d, r, rng);
  const Matrix<Scalar> q = thin_qr(gram.apply_block(s));

  Vector<Scalar> values = lowrank_diag<Scalar>(a, q);
  const DeflatedGramOp<Scalar> residual(a, q);
  values += hutchinson_diag<Scalar>(residual, split.residual_samples, rng).values;
  return {std::move(values), m};
}

}  // namespace twoinf
