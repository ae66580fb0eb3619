// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "synpa/cli.hpp"
#include "synpa/dispatch_model.hpp"
#include "synpa/harness.hpp"
#include "synpa/interference.hpp"
#include "synpa/matcher.hpp"
#include "synpa/metrics.hpp"
#include "synpa/trainer.hpp"

using namespace synpa;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

CategoryVector simplex(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  const double a = e(rng), b = e(rng), c = e(rng), s = a + b + c;
  return CategoryVector::from_fractions(b / s, c / s, a / s);
}

double pair_weight(const ModelCoefficients& m, const CategoryVector& a, const CategoryVector& b) {
  double w = 0.0;
  for (auto c : kCategories) {
    const auto& k = m[c];
    w += std::max(0.0, k.alpha + k.beta * a[c] + k.gamma * b[c] + k.rho * a[c] * b[c]);
    w += std::max(0.0, k.alpha + k.beta * b[c] + k.gamma * a[c] + k.rho * a[c] * b[c]);
  }
  return w;
}

Outcome characterization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  bool ok = true;
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const unsigned width = std::uniform_int_distribution<unsigned>(1, 8)(rng);
    RawCounterSample s;
    s.cpu_cycles = std::uniform_int_distribution<std::uint64_t>(1, 1'000'000'000)(rng);
    // Stalls may overshoot the cycle count.
    s.stall_frontend = std::uniform_int_distribution<std::uint64_t>(0, s.cpu_cycles)(rng);
    s.stall_backend = std::uniform_int_distribution<std::uint64_t>(0, s.cpu_cycles)(rng);
    s.inst_spec = std::uniform_int_distribution<std::uint64_t>(0, width * s.cpu_cycles)(rng);
    const auto b = characterize(s, width);
    if (b.fe_slots + b.be_slots + b.full_dispatch_slots != b.total_slots || b.total_slots != s.cpu_cycles * width) {
      ok = false;
    }
    const auto v = normalize(b);
    worst = std::max(worst, std::abs(v.fdc() + v.fe() + v.be() - 1.0));
  }
  const double t = seconds_since(t0);
  ok = ok && worst <= 1e-9 && t < 1.0;
  return {ok, fmt("10000 samples, exact partition %s, max |sum-1| %.2e, %.3f s", ok ? "held" : "broken", worst, t)};
}

Outcome forward_values() {
  const auto m = ModelCoefficients::published();
  struct Case {
    Category c;
    double ci, cj, want;
  };
  const Case cases[] = {{Category::kFrontend, 0.3, 0.0, 0.66093},
                        {Category::kBackend, 0.5, 0.2, 0.66627},
                        {Category::kFullDispatch, 0.5, 0.4, 0.46824},
                        {Category::kBackend, 0.0, 0.0, 0.2069}};
  double worst = 0.0;
  for (const auto& k : cases) worst = std::max(worst, std::abs(forward(m[k.c], k.ci, k.cj) - k.want));
  return {worst <= 1e-12, fmt("4 reference values, max error %.2e", worst)};
}

Outcome inversion_grid() {
  const auto t0 = Clock::now();
  const auto m = ModelCoefficients::published();
  double worst = 0.0;
  std::size_t degraded = 0;
  for (auto c : kCategories) {
    for (int a = 0; a < 100; ++a) {
      for (int b = 0; b < 100; ++b) {
        const double ci = 0.01 + 0.98 * a / 99.0, cj = 0.01 + 0.98 * b / 99.0;
        const auto r = invert_category(m[c], forward(m[c], ci, cj), forward(m[c], cj, ci));
        degraded += r.degraded;
        worst = std::max({worst, std::abs(r.ci - ci), std::abs(r.cj - cj)});
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && degraded == 0 && t < 5.0,
          fmt("3 x 100 x 100 grid, max error %.2e, %zu degraded, %.3f s", worst, degraded, t)};
}

std::vector<AlignedSample> synthetic(const ModelCoefficients& m, std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
  std::vector<AlignedSample> out;
  for (std::size_t k = 0; k < n; ++k) {
    AlignedSample s{simplex(rng), simplex(rng), {}, {}};
    for (auto c : kCategories) {
      s.smt_ij[c] = forward(m[c], s.st_i[c], s.st_j[c]) + (sigma > 0 ? noise(rng) : 0.0);
      s.smt_ji[c] = forward(m[c], s.st_j[c], s.st_i[c]) + (sigma > 0 ? noise(rng) : 0.0);
    }
    out.push_back(s);
  }
  return out;
}

Outcome coefficient_recovery() {
  const auto truth = ModelCoefficients::published();
  const auto clean = fit(synthetic(truth, 10000, 0.0, 101), kDefaultSplit, 1);
  double err = 0.0, clean_mse = 0.0;
  for (auto c : kCategories) {
    const auto& a = clean.coefficients[c];
    const auto& b = truth[c];
    err = std::max({err, std::abs(a.alpha - b.alpha), std::abs(a.beta - b.beta), std::abs(a.gamma - b.gamma),
                    std::abs(a.rho - b.rho)});
  }
  for (double x : clean.mse) clean_mse = std::max(clean_mse, x);

  const double sigma = 0.05, s2 = sigma * sigma;
  const auto noisy = fit(synthetic(truth, 10000, sigma, 102), kDefaultSplit, 1);
  double lo = 1e9, hi = 0.0;
  for (double x : noisy.mse) {
    lo = std::min(lo, x / s2);
    hi = std::max(hi, x / s2);
  }
  const bool ok = err <= 1e-6 && clean_mse < 1e-12 && lo >= 0.8 && hi <= 1.2;
  return {ok, fmt("max coefficient error %.2e, clean MSE %.2e, noisy MSE/sigma^2 in [%.3f, %.3f]", err, clean_mse, lo, hi)};
}

Outcome matching_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::size_t mismatches = 0, total = 0;
  for (std::size_t n : {4, 6, 8, 10}) {
    for (int k = 0; k < 1000; ++k) {
      const auto w = oracle::random_symmetric(n, rng);
      const auto got = min_weight_perfect_matching(n, w);
      const auto want = oracle::brute_force_min_matching(n, w);
      double sum = 0.0;
      for (const auto& [i, j] : got.pairs) sum += w[i * n + j];
      if (sum != want.total) ++mismatches;
      ++total;
    }
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < 30.0, fmt("%zu/%zu matrices optimal, %.2f s", total - mismatches, total, t)};
}

Outcome closed_loop() {
  ExperimentConfig cfg;
  cfg.target_quanta = 150;
  const auto roster = classify_catalog(cfg.catalog);
  const auto m = ModelCoefficients::published();
  std::size_t hits = 0, judged = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto w = gen_workload(Recipe::kMixed, roster, 100 + seed);
    const auto apps = materialize(w, cfg);
    EngineConfig ec;
    ec.seed = seed;
    ec.coefficients = m;
    const auto log = run_simulation(ec, apps, m, cfg.sim);
    for (std::size_t q = 1; q < log.quanta.size(); ++q) {
      const auto& rec = log.quanta[q];
      const std::size_t n = rec.apps.size();
      std::vector<double> wts(n * n, 0.0);
      std::map<std::string, std::size_t> index;
      for (std::size_t i = 0; i < n; ++i) {
        index[rec.apps[i].id] = i;
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) wts[i * n + j] = pair_weight(m, *rec.apps[i].truth, *rec.apps[j].truth);
        }
      }
      const auto best = oracle::brute_force_min_matching(n, wts);
      double chosen = 0.0;
      for (const auto& [x, y] : rec.decision) chosen += wts[index.at(x) * n + index.at(y)];
      hits += std::abs(chosen - best.total) <= 1e-9;
      ++judged;
    }
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(judged);
  return {rate >= 0.99, fmt("%zu/%zu quanta optimal (%.2f%%), 8 apps, 5 workloads", hits, judged, 100.0 * rate)};
}

Outcome policy_separation() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.target_quanta = 600;
  cfg.runs = 30;
  cfg.policies = {Policy::kSynpa, Policy::kRandom};
  const auto roster = classify_catalog(cfg.catalog);
  for (std::uint64_t k = 0; k < 10; ++k) cfg.workloads.push_back(gen_workload(Recipe::kMixed, roster, k));
  const auto result = run_experiment(cfg, false);
  std::map<Policy, double> tt, fair;
  std::map<Policy, std::size_t> n;
  for (const auto& r : result.runs) {
    tt[r.policy] += r.metrics.turnaround_quanta;
    fair[r.policy] += r.metrics.fairness;
    ++n[r.policy];
  }
  for (auto p : cfg.policies) {
    tt[p] /= static_cast<double>(n[p]);
    fair[p] /= static_cast<double>(n[p]);
  }
  const double t = seconds_since(t0);
  const bool ok = tt[Policy::kSynpa] < tt[Policy::kRandom] && fair[Policy::kSynpa] > fair[Policy::kRandom] && t < 120.0;
  return {ok, fmt("mean TT synpa %.2f vs random %.2f quanta, mean fairness synpa %.4f vs random %.4f, %zu runs each, %.1f s",
                  tt[Policy::kSynpa], tt[Policy::kRandom], fair[Policy::kSynpa], fair[Policy::kRandom], n[Policy::kSynpa], t)};
}

Outcome metric_formulas() {
  const double f = fairness({0.4, 0.6});
  const double g = ipc_geomean(std::vector<double>{1.0, 4.0}).value;
  std::vector<MetricsReport> runs(9);
  for (std::size_t k = 0; k < runs.size(); ++k) {
    runs[k].turnaround_quanta = k == 4 ? 300.0 : 100.0;
    runs[k].speedups = {1.0};
    runs[k].app_ids = {"a"};
  }
  const auto agg = aggregate_runs(runs);
  const bool ok = f == 0.8 && g == 2.0 && agg.turnaround_cv <= 0.05;
  return {ok, fmt("fairness %.17g, geomean %.17g, aggregate cv %.3g after %zu discard(s)", f, g, agg.turnaround_cv,
                  agg.discarded.size())};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    out[fs::relative(e.path(), root).string()] = s.str();
  }
  return out;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "synpa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism() {
  const fs::path trace = fs::path(SYNPA_SOURCE_DIR) / "configs" / "trace-4apps.csv";
  const fs::path config = fs::path(SYNPA_SOURCE_DIR) / "configs" / "quick.json";
  std::vector<std::map<std::string, std::string>> snaps;
  std::size_t failures = 0;
  for (int round = 0; round < 2; ++round) {
    synpa::test::TempDir dir("accept");
    const auto d = [&](const char* name) { return (dir.path() / name).string(); };
    failures += cli({"gen-profiles", "--out", d("profiles"), "--seed", "3", "--apps", "4", "--quanta", "120"}) != 0;
    failures += cli({"train", "--profiles", d("profiles"), "--out", d("coeffs.json"), "--seed", "3"}) != 0;
    failures += cli({"gen-workload", "--recipe", "backend", "--seed", "3", "--out", d("workload.json")}) != 0;
    failures += cli({"simulate", "--config", config.string(), "--out", d("sim"), "--seed", "3"}) != 0;
    failures += cli({"replay", "--trace", trace.string(), "--out", d("replay.jsonl"), "--seed", "3"}) != 0;
    std::vector<std::string> logs;
    for (const auto& e : fs::directory_iterator(dir.path() / "sim" / "logs")) logs.push_back(e.path().string());
    std::sort(logs.begin(), logs.end());
    std::vector<std::string> report{"report", "--out", d("report")};
    for (const auto& l : logs) {
      report.push_back("--log");
      report.push_back(l);
    }
    failures += cli(report) != 0;
    snaps.push_back(snapshot(dir.path()));
  }
  const bool same = snaps[0] == snaps[1];
  return {failures == 0 && same && !snaps[0].empty(),
          fmt("6 subcommands, %zu files compared, %s, %zu command failures", snaps[0].size(),
              same ? "identical" : "different", failures)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"characterization identities", characterization},
      {"forward model reference values", forward_values},
      {"inversion round trip", inversion_grid},
      {"coefficient recovery", coefficient_recovery},
      {"matching optimality", matching_optimality},
      {"closed-loop consistency", closed_loop},
      {"policy separation", policy_separation},
      {"metric formulas", metric_formulas},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
