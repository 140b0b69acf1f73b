#pragma once

// Seeded test matrices: gap-controlled square-ish matrices and tall Gaussian
// matrices, plus a small binary exchange format.

#include "twoinf/linear_op.hpp"
#include "twoinf/rng.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace twoinf {

struct GapMatrixSpec {
  Index rows = 0;
  Index cols = 0;
  double gap = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (rows < 2) throw std::invalid_argument("GapMatrixSpec: rows must be >= 2");
    if (cols < 1) throw std::invalid_argument("GapMatrixSpec: cols must be >= 1");
    if (!(gap > 0.0 && gap < 1.0))
      throw std::invalid_argument("GapMatrixSpec: gap must lie in (0, 1)");
  }
};

struct TallMatrixSpec {
  Index rows = 0;
  Index cols = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (cols < 1) throw std::invalid_argument("TallMatrixSpec: cols must be >= 1");
    if (rows <= cols) throw std::invalid_argument("TallMatrixSpec: rows must exceed cols");
  }
};

/// Gaussian rows rescaled to squared norms c = (1 + gap, 1, U[0,1], ...),
/// assigned in draw order. ||A||_{2->inf} = sqrt(1 + gap) and the squared-norm
/// gap is exactly `gap` up to rounding.
template <typename Scalar = double>
DenseMatrix<Scalar> gen_gap_matrix(const GapMatrixSpec& spec) {
  spec.validate();
  RngStream rng = RngStream(spec.seed).derive(kGapMatrixTag);
  DenseMatrix<Scalar> a(spec.rows, spec.cols);
  for (Index i = 0; i < a.rows(); ++i) {
    do {
      for (Index j = 0; j < a.cols(); ++j) a(i, j) = static_cast<Scalar>(rng.normal());
    } while (a.row(i).squaredNorm() == Scalar(0));
  }
  for (Index i = 0; i < a.rows(); ++i) {
    double c = 0.0;
    if (i == 0) c = 1.0 + spec.gap;
    else if (i == 1) c = 1.0;
    else c = rng.uniform();
    a.row(i) *= static_cast<Scalar>(std::sqrt(c)) / a.row(i).norm();
  }
  return a;
}

/// i.i.d. standard normal d x n matrix (rank n almost surely).
template <typename Scalar = double>
DenseMatrix<Scalar> gen_tall_lowrank(const TallMatrixSpec& spec) {
  spec.validate();
  RngStream rng = RngStream(spec.seed).derive(kTallMatrixTag);
  DenseMatrix<Scalar> a(spec.rows, spec.cols);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) a(i, j) = static_cast<Scalar>(rng.normal());
  return a;
}

// Binary matrix file: four little-endian u64 header words
// (magic "TWOINFMX", version 1, rows, cols) followed by rows*cols
// little-endian IEEE-754 doubles in row-major order.
inline constexpr std::uint64_t kMatrixFileMagic = 0x584d464e494f5754ULL;  // "TWOINFMX" as LE bytes
inline constexpr std::uint64_t kMatrixFileVersion = 1;

class MatrixFileError : public std::runtime_error {
 public:
  MatrixFileError(const std::filesystem::path& path, std::uint64_t offset,
                  const std::string& what);

  const std::filesystem::path& path() const noexcept { return path_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::filesystem::path path_;
  std::uint64_t offset_;
};

void save_matrix(const std::filesystem::path& path, const DenseMatrix<double>& mat);
DenseMatrix<double> load_matrix(const std::filesystem::path& path);

}  // namespace twoinf
