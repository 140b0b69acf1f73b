#pragma once

// Matrix-free operator contract and the concrete operators the estimators
// consume. Every estimator touches a matrix only through LinearOp; each
// apply/apply_transpose of a single vector counts as one matvec, a block
// application counts one matvec per column.

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace twoinf {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Column-major dense block, used for sketches and bases.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Row-major storage: row extraction is the hot exact step.
template <typename Scalar>
using DenseMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& what, Index expected, Index got)
      : std::invalid_argument(what + ": expected dimension " +
                              std::to_string(expected) + ", got " +
                              std::to_string(got)),
        expected_(expected),
        got_(got) {}

  Index expected() const noexcept { return expected_; }
  Index got() const noexcept { return got_; }

 private:
  Index expected_;
  Index got_;
};

inline void check_dimension(const char* what, Index expected, Index got) {
  if (expected != got) throw DimensionError(what, expected, got);
}

template <typename Scalar>
class LinearOp {
 public:
  using scalar_type = Scalar;
  using vector_type = Vector<Scalar>;
  using block_type = Matrix<Scalar>;

  virtual ~LinearOp() = default;

  LinearOp(const LinearOp&) = delete;
  LinearOp& operator=(const LinearOp&) = delete;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;

  /// x -> A x
  vector_type apply(const Eigen::Ref<const vector_type>& x) const {
    check_dimension("LinearOp::apply input", cols(), x.size());
    count(1);
    return do_apply(x);
  }

  /// y -> A^T y
  vector_type apply_transpose(const Eigen::Ref<const vector_type>& y) const {
    check_dimension("LinearOp::apply_transpose input", rows(), y.size());
    count(1);
    return do_apply_transpose(y);
  }

  /// Applies A to every column of x; costs x.cols() matvecs.
  block_type apply_block(const Eigen::Ref<const block_type>& x) const {
    check_dimension("LinearOp::apply_block input rows", cols(), x.rows());
    count(static_cast<std::uint64_t>(x.cols()));
    return do_apply_block(x);
  }

  block_type apply_transpose_block(const Eigen::Ref<const block_type>& y) const {
    check_dimension("LinearOp::apply_transpose_block input rows", rows(),
                    y.rows());
    count(static_cast<std::uint64_t>(y.cols()));
    return do_apply_transpose_block(y);
  }

  /// Number of oracle calls made on this operator so far.
  std::uint64_t matvecs() const noexcept {
    return matvecs_.load(std::memory_order_relaxed);
  }

  bool is_square() const { return rows() == cols(); }

 protected:
  LinearOp() = default;

  virtual vector_type do_apply(const Eigen::Ref<const vector_type>& x) const = 0;
  virtual vector_type do_apply_transpose(
      const Eigen::Ref<const vector_type>& y) const = 0;

  // Column-by-column fallback; dense backends override with a GEMM.
  virtual block_type do_apply_block(const Eigen::Ref<const block_type>& x) const {
    block_type out(rows(), x.cols());
    for (Index k = 0; k < x.cols(); ++k) out.col(k) = do_apply(x.col(k));
    return out;
  }

  virtual block_type do_apply_transpose_block(
      const Eigen::Ref<const block_type>& y) const {
    block_type out(cols(), y.cols());
    for (Index k = 0; k < y.cols(); ++k) out.col(k) = do_apply_transpose(y.col(k));
    return out;
  }

 private:
  void count(std::uint64_t n) const {
    matvecs_.fetch_add(n, std::memory_order_relaxed);
  }

  mutable std::atomic<std::uint64_t> matvecs_{0};
};

/// Operator backed by an explicit row-major matrix. The matrix is shared
/// read-only, so several DenseOps (one per worker) can wrap the same data
/// while keeping separate counters.
template <typename Scalar>
class DenseOp final : public LinearOp<Scalar> {
 public:
  using typename LinearOp<Scalar>::vector_type;
  using typename LinearOp<Scalar>::block_type;

  explicit DenseOp(DenseMatrix<Scalar> mat)
      : mat_(std::make_shared<const DenseMatrix<Scalar>>(std::move(mat))) {
    validate();
  }

  explicit DenseOp(std::shared_ptr<const DenseMatrix<Scalar>> mat)
      : mat_(std::move(mat)) {
    if (!mat_) throw std::invalid_argument("DenseOp: null matrix");
    validate();
  }

  Index rows() const override { return mat_->rows(); }
  Index cols() const override { return mat_->cols(); }

  const DenseMatrix<Scalar>& matrix() const noexcept { return *mat_; }
  const std::shared_ptr<const DenseMatrix<Scalar>>& shared_matrix() const noexcept {
    return mat_;
  }

 protected:
  vector_type do_apply(const Eigen::Ref<const vector_type>& x) const override {
    return (*mat_) * x;
  }
  vector_type do_apply_transpose(
      const Eigen::Ref<const vector_type>& y) const override {
    return mat_->transpose() * y;
  }
  block_type do_apply_block(const Eigen::Ref<const block_type>& x) const override {
    return (*mat_) * x;
  }
  block_type do_apply_transpose_block(
      const Eigen::Ref<const block_type>& y) const override {
    return mat_->transpose() * y;
  }

 private:
  void validate() const {
    if (!mat_->allFinite())
      throw std::invalid_argument("DenseOp: matrix has non-finite entries");
  }

  std::shared_ptr<const DenseMatrix<Scalar>> mat_;
};

/// Convenience: A x for a dense-backed operator.
template <typename Scalar, typename Derived>
Vector<Scalar> dense_apply(const DenseOp<Scalar>& op,
                           const Eigen::MatrixBase<Derived>& x) {
  return op.apply(x);
}

/// A^T viewed as an operator; calls are forwarded to (and counted on) the
/// wrapped operator as well.
template <typename Scalar>
class TransposeOp final : public LinearOp<Scalar> {
 public:
  using typename LinearOp<Scalar>::vector_type;
  using typename LinearOp<Scalar>::block_type;

  explicit TransposeOp(const LinearOp<Scalar>& inner) : inner_(inner) {}

  Index rows() const override { return inner_.cols(); }
  Index cols() const override { return inner_.rows(); }

 protected:
  vector_type do_apply(const Eigen::Ref<const vector_type>& x) const override {
    return inner_.apply_transpose(x);
  }
  vector_type do_apply_transpose(
      const Eigen::Ref<const vector_type>& y) const override {
    return inner_.apply(y);
  }
  block_type do_apply_block(const Eigen::Ref<const block_type>& x) const override {
    return inner_.apply_transpose_block(x);
  }
  block_type do_apply_transpose_block(
      const Eigen::Ref<const block_type>& y) const override {
    return inner_.apply_block(y);
  }

 private:
  const LinearOp<Scalar>& inner_;
};

/// B = A A^T. One application costs two matvecs on the inner operator.
template <typename Scalar>
class GramOp final : public LinearOp<Scalar> {
 public:
  using typename LinearOp<Scalar>::vector_type;
  using typename LinearOp<Scalar>::block_type;

  explicit GramOp(const LinearOp<Scalar>& inner) : inner_(inner) {}

  Index rows() const override { return inner_.rows(); }
  Index cols() const override { return inner_.rows(); }

  const LinearOp<Scalar>& inner() const noexcept { return inner_; }

 protected:
  vector_type do_apply(const Eigen::Ref<const vector_type>& x) const override {
    return inner_.apply(inner_.apply_transpose(x));
  }
  vector_type do_apply_transpose(
      const Eigen::Ref<const vector_type>& y) const override {
    return do_apply(y);
  }
  block_type do_apply_block(const Eigen::Ref<const block_type>& x) const override {
    return inner_.apply_block(inner_.apply_transpose_block(x));
  }
  block_type do_apply_transpose_block(
      const Eigen::Ref<const block_type>& y) const override {
    return do_apply_block(y);
  }

 private:
  const LinearOp<Scalar>& inner_;
};

/// Residual operator A A^T (I - Q Q^T) for an orthonormal basis Q. The
/// projection is dense arithmetic and costs no matvecs.
template <typename Scalar>
class DeflatedGramOp final : public LinearOp<Scalar> {
 public:
  using typename LinearOp<Scalar>::vector_type;
  using typename LinearOp<Scalar>::block_type;

  static constexpr double kOrthonormalityTol = 1e-10;

  DeflatedGramOp(const LinearOp<Scalar>& inner, Matrix<Scalar> basis)
      : inner_(inner), basis_(std::move(basis)) {
    check_dimension("DeflatedGramOp basis rows", inner_.rows(), basis_.rows());
    if (basis_.cols() > 0) {
      const Matrix<Scalar> gram = basis_.transpose() * basis_;
      const Scalar err =
          (gram - Matrix<Scalar>::Identity(basis_.cols(), basis_.cols()))
              .cwiseAbs()
              .maxCoeff();
      if (!(err <= Scalar(kOrthonormalityTol)))
        throw std::invalid_argument(
            "DeflatedGramOp: basis columns are not orthonormal");
    }
  }

  Index rows() const override { return inner_.rows(); }
  Index cols() const override { return inner_.rows(); }

  const Matrix<Scalar>& basis() const noexcept { return basis_; }

 protected:
  vector_type do_apply(const Eigen::Ref<const vector_type>& x) const override {
    vector_type r = x;
    if (basis_.cols() > 0) r.noalias() -= basis_ * (basis_.transpose() * x);
    return inner_.apply(inner_.apply_transpose(r));
  }
  vector_type do_apply_transpose(
      const Eigen::Ref<const vector_type>& y) const override {
    // (A A^T (I - P))^T = (I - P) A A^T
    vector_type z = inner_.apply(inner_.apply_transpose(y));
    if (basis_.cols() > 0) z.noalias() -= basis_ * (basis_.transpose() * z);
    return z;
  }
  block_type do_apply_block(const Eigen::Ref<const block_type>& x) const override {
    block_type r = x;
    if (basis_.cols() > 0) r.noalias() -= basis_ * (basis_.transpose() * x);
    return inner_.apply_block(inner_.apply_transpose_block(r));
  }

 private:
  const LinearOp<Scalar>& inner_;
  Matrix<Scalar> basis_;
};

}  // namespace twoinf
