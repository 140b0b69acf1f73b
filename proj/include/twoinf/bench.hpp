#pragma once

// Seeded Monte Carlo benchmark: relative error of each estimator against the
// dense exact value, at a common matvec budget.

#include "twoinf/estimators.hpp"
#include "twoinf/linear_op.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace twoinf::bench {

struct GapSource {
  Index rows = 0;
  Index cols = 0;
  double gap = 0.0;
};

struct TallSource {
  Index rows = 0;
  Index cols = 0;
};

struct FileSource {
  std::filesystem::path path;
};

using MatrixSource = std::variant<GapSource, TallSource, FileSource>;

struct BenchConfig {
  MatrixSource source = GapSource{500, 500, 0.1};
  std::vector<Method> methods;
  std::vector<std::uint64_t> budgets;
  std::uint64_t trials = 1;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_path;
  unsigned workers = 1;
  bool wall_time = true;
  bool flops = false;

  void validate() const;
};

struct BenchRecord {
  Method method = Method::twinest;
  std::uint64_t matvec_budget = 0;
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double exact = 0.0;
  double rel_error = 0.0;
  double wall_ms = 0.0;
  // What the estimator reports it spent, and what the operator counted.
  std::uint64_t matvecs_used = 0;
  std::uint64_t counter_delta = 0;
  double flops = 0.0;
  bool degenerate = false;
};

/// A (method, budget) pair that could not run, e.g. budget below the method's
/// minimum sample count.
struct BenchDiagnostic {
  Method method = Method::twinest;
  std::uint64_t matvec_budget = 0;
  std::string message;
};

struct BenchResult {
  std::vector<BenchRecord> records;
  std::vector<BenchDiagnostic> diagnostics;
};

struct SummaryRow {
  Method method = Method::twinest;
  std::uint64_t matvec_budget = 0;
  std::uint64_t count = 0;
  double mean_rel_error = 0.0;
  // 0 for a single record.
  double std_error = 0.0;
};

/// Inverse cost model: the largest sample parameter whose matvec cost fits in
/// `budget`, or nullopt if the method's minimum does not fit.
std::optional<std::uint64_t> samples_for_budget(Method method, std::uint64_t budget);

/// Matvecs a method spends for sample parameter m.
std::uint64_t predicted_matvecs(Method method, std::uint64_t m);

/// Coarse FLOP count for a d x n dense operator: 2dn per matvec, 2dr^2 for a
/// d x r QR, 4dr per deflation projection.
double predicted_flops(Method method, std::uint64_t m, Index rows, Index cols);

/// Builds (or loads) the dense matrix for a config; synthetic sources are
/// seeded from base_seed.
DenseMatrix<double> materialize(const MatrixSource& source, std::uint64_t base_seed);

/// Runs every (method, budget, trial) item over a worker pool. Output order is
/// (method as listed, budget, trial) regardless of worker count.
BenchResult run_bench(const BenchConfig& cfg, const DenseMatrix<double>& mat);

/// Materializes the matrix, runs, and writes the CSV to cfg.output_path when set.
BenchResult run_bench(const BenchConfig& cfg);

struct CsvOptions {
  bool wall_time = true;
  bool flops = false;
};

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records,
               const CsvOptions& options = {});
void write_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records,
               const CsvOptions& options = {});

std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

// Config files are flat `key = value` lines; '#' starts a comment. Keys mirror
// the long CLI flags: gap, tall, load, methods, budgets, trials, seed, workers,
// out, no-walltime, flops.
using ConfigValues = std::map<std::string, std::string>;
ConfigValues read_config_file(const std::filesystem::path& path);
ConfigValues parse_config_text(const std::string& text);
/// Applies parsed key/value settings on top of `cfg`.
void apply_config(BenchConfig& cfg, const ConfigValues& values);

std::vector<Method> parse_method_list(const std::string& text);
std::vector<std::uint64_t> parse_budget_list(const std::string& text);

}  // namespace twoinf::bench
