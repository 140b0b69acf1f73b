#include "twoinf/bench.hpp"

#include "twoinf/estimators.hpp"
#include "twoinf/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace twoinf::bench {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size())
    throw std::invalid_argument(std::string(what) + ": expected a non-negative integer, got '" +
                                s + "'");
  return v;
}

double parse_double(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size())
    throw std::invalid_argument(std::string(what) + ": expected a number, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const char* what) {
  if (s.empty() || s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw std::invalid_argument(std::string(what) + ": expected a boolean, got '" + s + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct WorkItem {
  Method method;
  std::uint64_t budget;
  std::uint64_t samples;
  std::uint64_t trial;
};

}  // namespace

void BenchConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("bench config: no methods given");
  if (budgets.empty()) throw std::invalid_argument("bench config: no budgets given");
  for (std::size_t i = 1; i < budgets.size(); ++i)
    if (budgets[i] <= budgets[i - 1])
      throw std::invalid_argument("bench config: budgets must be strictly increasing");
  if (trials < 1) throw std::invalid_argument("bench config: trials must be >= 1");
  if (workers < 1) throw std::invalid_argument("bench config: workers must be >= 1");
}

std::optional<std::uint64_t> samples_for_budget(Method method, std::uint64_t budget) {
  std::uint64_t m = 0;
  std::uint64_t min = 1;
  switch (method) {
    case Method::twinest:
    case Method::adaptive_power:
      m = budget >= 1 ? (budget - 1) / 2 : 0;
      break;
    case Method::twinest_pp:
      m = budget >= 1 ? (budget - 1) / 2 / 3 * 3 : 0;
      min = 3;
      break;
    case Method::rademacher_averaging:
      m = budget / 2;
      break;
  }
  if (m < min) return std::nullopt;
  return m;
}

std::uint64_t predicted_matvecs(Method method, std::uint64_t m) {
  return method == Method::rademacher_averaging ? 2 * m : 2 * m + 1;
}

double predicted_flops(Method method, std::uint64_t m, Index rows, Index cols) {
  const double d = static_cast<double>(rows);
  const double n = static_cast<double>(cols);
  const double matvec = 2.0 * d * n;
  double total = static_cast<double>(predicted_matvecs(method, m)) * matvec;
  if (method == Method::twinest_pp) {
    const HutchppSplit split = hutchpp_split(m, rows);
    const double r = static_cast<double>(split.sketch_columns);
    total += 2.0 * d * r * r;
    total += static_cast<double>(split.residual_samples) * 4.0 * d * r;
  }
  return total;
}

DenseMatrix<double> materialize(const MatrixSource& source, std::uint64_t base_seed) {
  return std::visit(
      [&](const auto& src) -> DenseMatrix<double> {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, GapSource>) {
          return gen_gap_matrix<double>({src.rows, src.cols, src.gap, base_seed});
        } else if constexpr (std::is_same_v<T, TallSource>) {
          return gen_tall_lowrank<double>({src.rows, src.cols, base_seed});
        } else {
          return load_matrix(src.path);
        }
      },
      source);
}

BenchResult run_bench(const BenchConfig& cfg, const DenseMatrix<double>& mat) {
  cfg.validate();
  if (mat.rows() == 0 || mat.cols() == 0)
    throw std::invalid_argument("run_bench: empty matrix");

  BenchResult result;
  std::vector<WorkItem> items;
  for (Method method : cfg.methods) {
    for (std::uint64_t budget : cfg.budgets) {
      const auto m = samples_for_budget(method, budget);
      if (!m) {
        result.diagnostics.push_back(
            {method, budget,
             "budget " + std::to_string(budget) + " is below the minimum for " +
                 std::string(to_string(method))});
        continue;
      }
      for (std::uint64_t t = 0; t < cfg.trials; ++t) items.push_back({method, budget, *m, t});
    }
  }

  const auto shared = std::make_shared<const DenseMatrix<double>>(mat);
  const double exact = exact_two_to_inf(*shared).value;
  result.records.resize(items.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    const DenseOp<double> op(shared);
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= items.size()) return;
      const WorkItem& item = items[k];
      try {
        const std::uint64_t seed = cfg.base_seed + item.trial;
        RngStream rng(seed);
        const std::uint64_t before = op.matvecs();
        const auto start = std::chrono::steady_clock::now();
        const NormEstimate<double> est = estimate_two_to_inf(op, item.method, item.samples, rng);
        const auto stop = std::chrono::steady_clock::now();

        BenchRecord& rec = result.records[k];
        rec.method = item.method;
        rec.matvec_budget = item.budget;
        rec.trial = item.trial;
        rec.seed = seed;
        rec.estimate = est.value;
        rec.exact = exact;
        const double diff = std::abs(est.value - exact);
        rec.rel_error = exact > 0 ? diff / exact : diff;
        rec.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        rec.matvecs_used = est.matvecs_used;
        rec.counter_delta = op.matvecs() - before;
        rec.flops = predicted_flops(item.method, item.samples, shared->rows(), shared->cols());
        rec.degenerate = est.degenerate;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(items.size());
        return;
      }
    }
  };

  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(cfg.workers, std::max<std::size_t>(1, items.size())));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

BenchResult run_bench(const BenchConfig& cfg) {
  cfg.validate();
  const DenseMatrix<double> mat = materialize(cfg.source, cfg.base_seed);
  BenchResult result = run_bench(cfg, mat);
  if (!cfg.output_path.empty())
    write_csv(cfg.output_path, result.records, {cfg.wall_time, cfg.flops});
  return result;
}

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records,
               const CsvOptions& options) {
  out << "method,matvec_budget,trial,seed,estimate,exact,rel_error";
  if (options.wall_time) out << ",wall_ms";
  if (options.flops) out << ",flops";
  out << '\n';
  for (const BenchRecord& r : records) {
    out << to_string(r.method) << ',' << r.matvec_budget << ',' << r.trial << ','
        << r.seed << ',' << format_double(r.estimate) << ',' << format_double(r.exact)
        << ',' << format_double(r.rel_error);
    if (options.wall_time) out << ',' << format_double(r.wall_ms);
    if (options.flops) out << ',' << format_double(r.flops);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records,
               const CsvOptions& options) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(out, records, options);
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");

  // Keyed by method (enum order) then budget.
  std::map<std::pair<Method, std::uint64_t>, std::vector<double>> groups;
  for (const BenchRecord& r : records) groups[{r.method, r.matvec_budget}].push_back(r.rel_error);

  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, errs] : groups) {
    SummaryRow row;
    row.method = key.first;
    row.matvec_budget = key.second;
    row.count = errs.size();
    double sum = 0;
    for (double e : errs) sum += e;
    row.mean_rel_error = sum / static_cast<double>(errs.size());
    if (errs.size() > 1) {
      double ss = 0;
      for (double e : errs) ss += (e - row.mean_rel_error) * (e - row.mean_rel_error);
      const double var = ss / static_cast<double>(errs.size() - 1);
      row.std_error = std::sqrt(var / static_cast<double>(errs.size()));
    }
    rows.push_back(row);
  }
  return rows;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,matvec_budget,count,mean_rel_error,std_error\n";
  for (const SummaryRow& r : rows)
    out << to_string(r.method) << ',' << r.matvec_budget << ',' << r.count << ','
        << format_double(r.mean_rel_error) << ',' << format_double(r.std_error) << '\n';
}

ConfigValues parse_config_text(const std::string& text) {
  ConfigValues values;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    std::string key = trim(eq == std::string::npos ? line : line.substr(0, eq));
    std::string value = eq == std::string::npos ? std::string{} : trim(line.substr(eq + 1));
    if (key.starts_with("--")) key.erase(0, 2);
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing key");
    values[key] = value;
  }
  return values;
}

ConfigValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<Method> parse_method_list(const std::string& text) {
  std::vector<Method> out;
  for (const auto& tok : split_tokens(text)) out.push_back(parse_method(tok));
  return out;
}

std::vector<std::uint64_t> parse_budget_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split_tokens(text)) out.push_back(parse_u64(tok, "budgets"));
  return out;
}

void apply_config(BenchConfig& cfg, const ConfigValues& values) {
  int sources = 0;
  for (const auto& [key, value] : values) {
    if (key == "gap") {
      const auto tok = split_tokens(value);
      if (tok.size() != 3) throw std::invalid_argument("gap: expected 'd n delta'");
      cfg.source = GapSource{static_cast<Index>(parse_u64(tok[0], "gap d")),
                             static_cast<Index>(parse_u64(tok[1], "gap n")),
                             parse_double(tok[2], "gap delta")};
      ++sources;
    } else if (key == "tall") {
      const auto tok = split_tokens(value);
      if (tok.size() != 2) throw std::invalid_argument("tall: expected 'd n'");
      cfg.source = TallSource{static_cast<Index>(parse_u64(tok[0], "tall d")),
                              static_cast<Index>(parse_u64(tok[1], "tall n"))};
      ++sources;
    } else if (key == "load") {
      cfg.source = FileSource{value};
      ++sources;
    } else if (key == "methods") {
      cfg.methods = parse_method_list(value);
    } else if (key == "budgets") {
      cfg.budgets = parse_budget_list(value);
    } else if (key == "trials") {
      cfg.trials = parse_u64(value, "trials");
    } else if (key == "seed") {
      cfg.base_seed = parse_u64(value, "seed");
    } else if (key == "workers") {
      cfg.workers = static_cast<unsigned>(parse_u64(value, "workers"));
    } else if (key == "out") {
      cfg.output_path = value;
    } else if (key == "no-walltime" || key == "no_walltime") {
      cfg.wall_time = !parse_bool(value, "no-walltime");
    } else if (key == "flops") {
      cfg.flops = parse_bool(value, "flops");
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  if (sources > 1)
    throw std::invalid_argument("config: gap, tall and load are mutually exclusive");
}

}  // namespace twoinf::bench
