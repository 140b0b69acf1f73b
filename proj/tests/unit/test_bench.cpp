#include "twoinf/bench.hpp"
#include "twoinf/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

using namespace twoinf;
using namespace twoinf::bench;

namespace {

BenchConfig small_config() {
  BenchConfig cfg;
  cfg.source = GapSource{60, 40, 0.2};
  cfg.methods = {Method::twinest, Method::twinest_pp, Method::rademacher_averaging,
                 Method::adaptive_power};
  cfg.budgets = {10, 40, 100};
  cfg.trials = 6;
  cfg.base_seed = 100;
  return cfg;
}

std::string csv(const std::vector<BenchRecord>& records, bool wall = false) {
  std::ostringstream out;
  write_csv(out, records, {wall, false});
  return out.str();
}

}  // namespace

TEST_CASE("budget to sample-count conversion") {
  CHECK(samples_for_budget(Method::twinest, 801) == 400u);
  CHECK(samples_for_budget(Method::twinest, 800) == 399u);
  CHECK(samples_for_budget(Method::twinest, 2) == std::nullopt);
  CHECK(samples_for_budget(Method::twinest_pp, 800) == 399u);
  CHECK(samples_for_budget(Method::twinest_pp, 10) == 3u);
  CHECK(samples_for_budget(Method::twinest_pp, 6) == std::nullopt);
  CHECK(samples_for_budget(Method::rademacher_averaging, 801) == 400u);
  CHECK(samples_for_budget(Method::rademacher_averaging, 1) == std::nullopt);
  CHECK(samples_for_budget(Method::adaptive_power, 10) == 4u);
  for (Method m : {Method::twinest, Method::twinest_pp, Method::rademacher_averaging,
                   Method::adaptive_power})
    for (std::uint64_t b = 1; b < 200; ++b)
      if (auto s = samples_for_budget(m, b)) CHECK(predicted_matvecs(m, *s) <= b);
}

TEST_CASE("run_bench: records, honesty, ordering") {
  const BenchConfig cfg = small_config();
  const BenchResult res = run_bench(cfg);
  CHECK(res.diagnostics.empty());
  REQUIRE(res.records.size() == 4 * 3 * 6);
  for (std::size_t k = 0; k < res.records.size(); ++k) {
    const BenchRecord& r = res.records[k];
    CHECK(r.counter_delta == r.matvecs_used);
    CHECK(r.matvecs_used == predicted_matvecs(r.method, *samples_for_budget(r.method, r.matvec_budget)));
    CHECK(r.matvecs_used <= r.matvec_budget);
    CHECK(r.rel_error >= 0.0);
    CHECK(r.seed == cfg.base_seed + r.trial);
    CHECK(r.exact == doctest::Approx(std::sqrt(1.2)).epsilon(1e-12));
  }
  CHECK(res.records.front().method == Method::twinest);
  CHECK(res.records.back().method == Method::adaptive_power);
}

TEST_CASE("run_bench: replay and parallel equivalence") {
  BenchConfig cfg = small_config();
  const auto serial = run_bench(cfg);
  const auto again = run_bench(cfg);
  CHECK(csv(serial.records) == csv(again.records));
  cfg.workers = 8;
  const auto parallel = run_bench(cfg);
  CHECK(csv(serial.records) == csv(parallel.records));
}

TEST_CASE("run_bench: too-small budgets give diagnostics") {
  BenchConfig cfg = small_config();
  cfg.budgets = {2, 5, 10};
  const auto res = run_bench(cfg);
  // twinest: 2 skipped; twinest_pp: 2 and 5 skipped; adaptive: 2 skipped.
  CHECK(res.diagnostics.size() == 4);
  CHECK(res.records.size() == (2 + 1 + 3 + 2) * 6);
}

TEST_CASE("config validation") {
  BenchConfig cfg = small_config();
  cfg.budgets = {10, 10};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.methods.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("csv layout") {
  BenchRecord r;
  r.method = Method::twinest_pp;
  r.matvec_budget = 19;
  r.trial = 2;
  r.seed = 7;
  r.estimate = 0.1;
  r.exact = 1.0 / 3.0;
  r.rel_error = 0.7;
  r.wall_ms = 1.5;
  r.flops = 1234;
  std::ostringstream out;
  write_csv(out, {r}, {true, true});
  CHECK(out.str() ==
        "method,matvec_budget,trial,seed,estimate,exact,rel_error,wall_ms,flops\n"
        "twinest_pp,19,2,7,0.10000000000000001,0.33333333333333331,0.69999999999999996,1.5,1234\n");
  CHECK(csv({r}) ==
        "method,matvec_budget,trial,seed,estimate,exact,rel_error\n"
        "twinest_pp,19,2,7,0.10000000000000001,0.33333333333333331,0.69999999999999996\n");
}

TEST_CASE("summarize") {
  std::vector<BenchRecord> recs(3);
  for (int i = 0; i < 3; ++i) recs[static_cast<std::size_t>(i)].rel_error = 0.1 * (i + 1);
  const auto rows = summarize(recs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_rel_error == doctest::Approx(0.2));
  CHECK(rows[0].count == 3);
  CHECK(rows[0].std_error == doctest::Approx(0.1 / std::sqrt(3.0)));

  const auto one = summarize({recs[1]});
  CHECK(one[0].mean_rel_error == recs[1].rel_error);
  CHECK(one[0].std_error == 0.0);

  CHECK_THROWS_AS((void)summarize({}), std::invalid_argument);

  const auto cfg = small_config();
  CHECK(summarize(run_bench(cfg).records).size() == cfg.methods.size() * cfg.budgets.size());
}

TEST_CASE("flop model") {
  CHECK(predicted_flops(Method::twinest, 4, 10, 20) == 9 * 2.0 * 200);
  // twinest_pp m = 9 on 10x20: r = 3, 3 residual samples.
  CHECK(predicted_flops(Method::twinest_pp, 9, 10, 20) ==
        19 * 400.0 + 2.0 * 10 * 9 + 3 * 4.0 * 10 * 3);
}

TEST_CASE("config text and overrides") {
  const auto values = parse_config_text(
      "# comment\n"
      "gap = 40 30 0.2\n"
      "methods = twinest, adaptive_power\n"
      "budgets = 10,20 ,40\n"
      "trials=3\nseed = 5\nworkers = 2\nno-walltime = true\nflops\n");
  BenchConfig cfg;
  apply_config(cfg, values);
  CHECK(std::get<GapSource>(cfg.source).rows == 40);
  CHECK(std::get<GapSource>(cfg.source).gap == 0.2);
  CHECK(cfg.methods == std::vector<Method>{Method::twinest, Method::adaptive_power});
  CHECK(cfg.budgets == std::vector<std::uint64_t>{10, 20, 40});
  CHECK(cfg.trials == 3);
  CHECK(cfg.base_seed == 5);
  CHECK(cfg.workers == 2);
  CHECK_FALSE(cfg.wall_time);
  CHECK(cfg.flops);

  CHECK_THROWS_AS(apply_config(cfg, parse_config_text("bogus = 1")), std::invalid_argument);
  CHECK_THROWS_AS(apply_config(cfg, parse_config_text("methods = power")), std::invalid_argument);
  CHECK_THROWS_AS(apply_config(cfg, parse_config_text("trials = -3")), std::invalid_argument);
  CHECK_THROWS_AS(apply_config(cfg, parse_config_text("gap = 1 2")), std::invalid_argument);
}

TEST_CASE("file source: load and errors") {
  const auto path = std::filesystem::temp_directory_path() / "twoinf_bench_src.bin";
  const auto mat = gen_tall_lowrank<double>({40, 5, 1});
  save_matrix(path, mat);
  BenchConfig cfg = small_config();
  cfg.source = FileSource{path};
  cfg.methods = {Method::twinest_pp};
  cfg.budgets = {37};
  const auto res = run_bench(cfg);
  for (const auto& r : res.records) CHECK(r.rel_error < 1e-12);
  std::filesystem::remove(path);
  CHECK_THROWS_AS((void)run_bench(cfg), MatrixFileError);
}
