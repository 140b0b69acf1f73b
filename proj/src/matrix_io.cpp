#include "twoinf/synthetic.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <vector>

namespace twoinf {

namespace {

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

}  // namespace

MatrixFileError::MatrixFileError(const std::filesystem::path& path,
                                 std::uint64_t offset, const std::string& what)
    : std::runtime_error(path.string() + " (byte offset " + std::to_string(offset) +
                         "): " + what),
      path_(path),
      offset_(offset) {}

void save_matrix(const std::filesystem::path& path, const DenseMatrix<double>& mat) {
  std::vector<unsigned char> buf;
  buf.reserve(32 + 8 * static_cast<std::size_t>(mat.size()));
  put_u64(buf, kMatrixFileMagic);
  put_u64(buf, kMatrixFileVersion);
  put_u64(buf, static_cast<std::uint64_t>(mat.rows()));
  put_u64(buf, static_cast<std::uint64_t>(mat.cols()));
  for (Index i = 0; i < mat.rows(); ++i)
    for (Index j = 0; j < mat.cols(); ++j)
      put_u64(buf, std::bit_cast<std::uint64_t>(mat(i, j)));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MatrixFileError(path, 0, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw MatrixFileError(path, 0, "write failed");
}

DenseMatrix<double> load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MatrixFileError(path, 0, "cannot open for reading");

  std::array<unsigned char, 32> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  const auto got = static_cast<std::uint64_t>(in.gcount());
  if (got < header.size())
    throw MatrixFileError(path, got, "truncated header");

  if (get_u64(header.data()) != kMatrixFileMagic)
    throw MatrixFileError(path, 0, "bad magic");
  if (const auto version = get_u64(header.data() + 8); version != kMatrixFileVersion)
    throw MatrixFileError(path, 8, "unsupported version " + std::to_string(version));
  const std::uint64_t rows = get_u64(header.data() + 16);
  const std::uint64_t cols = get_u64(header.data() + 24);
  constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 40;
  if (rows == 0 || cols == 0 || rows > kMaxEntries / cols)
    throw MatrixFileError(path, 16, "implausible dimensions " + std::to_string(rows) +
                                        "x" + std::to_string(cols));

  DenseMatrix<double> mat(static_cast<Index>(rows), static_cast<Index>(cols));
  std::vector<unsigned char> row(8 * cols);
  std::uint64_t offset = 32;
  for (std::uint64_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    const auto n = static_cast<std::uint64_t>(in.gcount());
    if (n < row.size()) throw MatrixFileError(path, offset + n, "truncated data");
    for (std::uint64_t j = 0; j < cols; ++j) {
      const double v = std::bit_cast<double>(get_u64(row.data() + 8 * j));
      if (!std::isfinite(v))
        throw MatrixFileError(path, offset + 8 * j, "non-finite entry");
      mat(static_cast<Index>(i), static_cast<Index>(j)) = v;
    }
    offset += row.size();
  }
  if (in.peek() != std::ifstream::traits_type::eof())
    throw MatrixFileError(path, offset, "trailing bytes after matrix data");
  return mat;
}

}  // namespace twoinf
