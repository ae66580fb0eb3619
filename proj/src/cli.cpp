#include "synpa/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synpa/engine.hpp"
#include "synpa/error.hpp"
#include "synpa/harness.hpp"
#include "synpa/metrics.hpp"
#include "synpa/simulator.hpp"
#include "synpa/trainer.hpp"

namespace synpa {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::kIo, "cannot open '" + p.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write '" + p.string() + "'");
  out << text;
}

void write_json(const fs::path& p, const ordered_json& j) { write_text(p, j.dump(2) + "\n"); }

std::vector<Policy> parse_policies(const std::string& list) {
  std::vector<Policy> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_policy(item));
    } catch (const Error&) {
      throw UsageError("unknown policy '" + item + "' (expected synpa, random or static)");
    }
  }
  if (out.empty()) throw UsageError("--policy needs at least one policy");
  return out;
}

std::string metrics_csv(const std::vector<MetricsReport>& rows) {
  std::string csv = csv_header() + "\n";
  for (const auto& r : rows) csv += csv_row(r) + "\n";
  return csv;
}

// Baseline TT over SYNPA TT for every workload that ran both.
ordered_json comparisons(const std::vector<MetricsReport>& summary) {
  auto out = ordered_json::array();
  std::map<std::string, const MetricsReport*> synpa;
  for (const auto& r : summary) {
    if (r.policy == "synpa") synpa[r.workload] = &r;
  }
  for (const auto& r : summary) {
    const auto it = synpa.find(r.workload);
    if (r.policy == "synpa" || it == synpa.end()) continue;
    out.push_back({{"workload", r.workload},
                   {"baseline", r.policy},
                   {"turnaround_speedup", r.turnaround_quanta / it->second->turnaround_quanta},
                   {"fairness_delta", it->second->fairness - r.fairness},
                   {"ipc_geomean_ratio", it->second->ipc_geomean / r.ipc_geomean}});
  }
  return out;
}

struct Options {
  std::string profiles, out, config, trace, coefficients, ground_truth, recipe, policy;
  std::vector<std::string> logs;
  std::optional<std::uint64_t> seed;
  double split = kDefaultSplit;
  std::optional<double> quantum_ms, noise_sigma, cv_threshold;
  std::optional<std::size_t> runs;
  std::size_t apps = 6;
  std::uint64_t quanta = 600;
  std::size_t size = kWorkloadSize;
};

int cmd_train(const Options& o, std::ostream& out) {
  const auto set = load_profile_dir(o.profiles);
  const auto aligned = align_all(set);
  auto report = fit(aligned.samples, o.split, o.seed.value_or(0));
  report.dropped_quanta = aligned.dropped;
  write_json(o.out, to_json(report));
  out << "fit " << report.train_samples << " aligned quanta, " << report.holdout_samples << " held out, "
      << aligned.dropped << " dropped\n";
  return kExitOk;
}

int cmd_gen_profiles(const Options& o, std::ostream& out) {
  SimParams p;
  if (o.quantum_ms) p.quantum_ms = *o.quantum_ms;
  if (o.noise_sigma) p.noise_sigma = *o.noise_sigma;
  const auto truth = o.ground_truth.empty() ? ModelCoefficients::published() : load_coefficients(o.ground_truth);
  if (o.apps < 2) throw UsageError("--apps must be at least 2");
  std::mt19937_64 rng(o.seed.value_or(0));
  std::vector<SyntheticApp> apps;
  const AppClass classes[] = {AppClass::kBackendBound, AppClass::kFrontendBound, AppClass::kOther};
  for (std::size_t k = 0; k < o.apps; ++k) {
    apps.push_back(random_app("app" + std::to_string(k), classes[k % 3], rng));
  }
  const auto corpus = generate_profile_corpus(apps, truth, p, o.quanta, o.seed.value_or(0));
  fs::create_directories(o.out);
  for (const auto& iso : corpus.isolated) {
    std::ostringstream s;
    write_trace(s, profile_document({iso}, p.dispatch_width, p.quantum_ms));
    write_text(fs::path(o.out) / ("iso-" + iso.app_id + ".csv"), s.str());
  }
  for (const auto& [a, b] : corpus.paired) {
    std::ostringstream s;
    write_trace(s, profile_document({a, b}, p.dispatch_width, p.quantum_ms));
    write_text(fs::path(o.out) / ("pair-" + a.app_id + "-" + b.app_id + ".csv"), s.str());
  }
  out << "wrote " << corpus.isolated.size() << " isolated and " << corpus.paired.size() << " paired profiles\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  auto cfg = experiment_from_json(read_json(o.config));
  if (!o.policy.empty()) cfg.policies = parse_policies(o.policy);
  if (o.seed) cfg.seed = *o.seed;
  if (o.runs) cfg.runs = *o.runs;
  if (o.quantum_ms) cfg.sim.quantum_ms = *o.quantum_ms;
  if (o.noise_sigma) cfg.sim.noise_sigma = *o.noise_sigma;
  if (o.cv_threshold) cfg.cv_threshold = *o.cv_threshold;
  if (!o.coefficients.empty()) cfg.coefficients = load_coefficients(o.coefficients);
  if (!o.ground_truth.empty()) cfg.ground_truth = load_coefficients(o.ground_truth);
  if (cfg.runs == 0) throw UsageError("--runs must be at least 1");

  const auto result = run_experiment(cfg, true);
  const fs::path dir(o.out);
  fs::create_directories(dir / "logs");
  ordered_json runs = ordered_json::array();
  for (const auto& r : result.runs) {
    const auto name = r.workload + "-" + std::string(to_string(r.policy)) + "-seed" + std::to_string(r.seed) + ".jsonl";
    std::ostringstream s;
    write_log(s, r.log);
    write_text(dir / "logs" / name, s.str());
    auto j = to_json(r.metrics);
    j["seed"] = r.seed;
    j["log"] = "logs/" + name;
    runs.push_back(std::move(j));
  }
  ordered_json summary = ordered_json::array();
  for (const auto& r : result.summary) summary.push_back(to_json(r));
  ordered_json doc;
  doc["runs"] = std::move(runs);
  doc["summary"] = std::move(summary);
  doc["comparisons"] = comparisons(result.summary);
  write_json(dir / "metrics.json", doc);
  write_text(dir / "metrics.csv", metrics_csv(result.summary));
  for (const auto& r : result.summary) {
    out << r.workload << " " << r.policy << " tt=" << r.turnaround_quanta << " fairness=" << r.fairness
        << " ipc=" << r.ipc_geomean << (r.warning ? " (cv above threshold)" : "") << "\n";
  }
  return kExitOk;
}

int cmd_replay(const Options& o, std::ostream& out) {
  auto provider = open_trace(o.trace);
  EngineConfig ec;
  ec.provider = ProviderKind::kTrace;
  ec.quantum_ms = o.quantum_ms.value_or(provider.header().quantum_ms);
  ec.dispatch_width = provider.header().dispatch_width;
  ec.seed = o.seed.value_or(0);
  if (!o.coefficients.empty()) ec.coefficients = load_coefficients(o.coefficients);
  if (!o.policy.empty()) {
    const auto ps = parse_policies(o.policy);
    if (ps.size() != 1) throw UsageError("replay takes exactly one policy");
    ec.policy = ps.front();
  }
  ReplayEnvironment env(provider);
  RecordingAllocator alloc;
  const auto log = run(ec, env, alloc);
  std::ostringstream s;
  write_log(s, log);
  write_text(o.out, s.str());
  out << "replayed " << log.quanta.size() << " quanta\n";
  return kExitOk;
}

int cmd_gen_workload(const Options& o, std::ostream& out) {
  Recipe recipe;
  try {
    recipe = parse_recipe(o.recipe);
  } catch (const Error&) {
    throw UsageError("unknown recipe '" + o.recipe + "' (expected backend, frontend or mixed)");
  }
  std::vector<ClassifiedApp> roster;
  if (o.config.empty()) {
    roster = classify_catalog(builtin_catalog());
  } else {
    const auto j = read_json(o.config);
    if (j.contains("roster")) {
      for (const auto& a : j.at("roster")) {
        roster.push_back({a.at("id").get<std::string>(), parse_app_class(a.at("class").get<std::string>())});
      }
    } else {
      std::vector<SyntheticApp> catalog;
      for (const auto& a : j.at("catalog")) catalog.push_back(app_from_json(a));
      roster = classify_catalog(catalog);
    }
  }
  const auto w = gen_workload(recipe, roster, o.seed.value_or(0), o.size);
  write_json(o.out, to_json(w));
  out << w.name << ":";
  for (const auto& a : w.apps) out << " " << a.id;
  out << "\n";
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  std::map<std::pair<std::string, std::string>, std::vector<MetricsReport>> groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& path : o.logs) {
    const auto log = read_log_file(path);
    const auto name = log.workload.empty() ? fs::path(path).stem().string() : log.workload;
    auto m = compute_metrics(log, name);
    const std::pair key{m.workload, m.policy};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(std::move(m));
  }
  std::vector<MetricsReport> summary;
  for (const auto& key : order) {
    const auto& g = groups[key];
    summary.push_back(g.size() >= 2 ? aggregate_runs(g, o.cv_threshold.value_or(kDefaultCvThreshold)) : g.front());
  }
  ordered_json doc;
  doc["summary"] = ordered_json::array();
  for (const auto& r : summary) doc["summary"].push_back(to_json(r));
  doc["comparisons"] = comparisons(summary);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_json(dir / "metrics.json", doc);
  write_text(dir / "metrics.csv", metrics_csv(summary));
  for (const auto& r : summary) {
    out << r.workload << " " << r.policy << " tt=" << r.turnaround_quanta << " fairness=" << r.fairness
        << " ipc=" << r.ipc_geomean << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thread-to-core allocation for 2-way SMT cores driven by dispatch-stage counters"};
  app.name("synpa");
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "Fit interference coefficients from isolated and paired profiles");
  train->add_option("--profiles,--config", o.profiles, "Directory of profile CSV files")->required();
  train->add_option("--split", o.split, "Fraction of aligned quanta used for fitting")->check(CLI::Range(0.0, 1.0));
  train->add_option("--seed", o.seed, "Seed of the train/holdout shuffle");
  train->add_option("--out", o.out, "Fit report (JSON)")->required();

  auto* gen_profiles = app.add_subcommand("gen-profiles", "Write a synthetic profile corpus");
  gen_profiles->add_option("--out", o.out, "Output directory")->required();
  gen_profiles->add_option("--seed", o.seed, "Seed");
  gen_profiles->add_option("--apps", o.apps, "Number of synthetic apps");
  gen_profiles->add_option("--quanta", o.quanta, "Isolated quanta per app");
  gen_profiles->add_option("--ground-truth", o.ground_truth, "Coefficients generating SMT behaviour");
  gen_profiles->add_option("--noise-sigma", o.noise_sigma, "Gaussian noise on SMT categories");
  gen_profiles->add_option("--quantum-ms", o.quantum_ms, "Quantum length");

  auto* simulate = app.add_subcommand("simulate", "Run workloads in the closed-loop simulator");
  simulate->add_option("--config", o.config, "Experiment config (JSON)")->required();
  simulate->add_option("--out", o.out, "Output directory")->required();
  simulate->add_option("--policy", o.policy, "Comma-separated policies: synpa, random, static");
  simulate->add_option("--seed", o.seed, "Base seed; run r uses seed + r");
  simulate->add_option("--runs", o.runs, "Runs per workload and policy");
  simulate->add_option("--quantum-ms", o.quantum_ms, "Quantum length");
  simulate->add_option("--noise-sigma", o.noise_sigma, "Observation noise");
  simulate->add_option("--cv-threshold", o.cv_threshold, "Target coefficient of variation");
  simulate->add_option("--coefficients", o.coefficients, "Model coefficients used by the engine");
  simulate->add_option("--ground-truth", o.ground_truth, "Coefficients driving the simulator");

  auto* replay = app.add_subcommand("replay", "Drive the allocation loop from a counter trace");
  replay->add_option("--trace,--config", o.trace, "Counter trace")->required();
  replay->add_option("--out", o.out, "Schedule log (JSONL)")->required();
  replay->add_option("--policy", o.policy, "synpa, random or static");
  replay->add_option("--seed", o.seed, "Seed of the bootstrap pairing");
  replay->add_option("--quantum-ms", o.quantum_ms, "Override the trace's quantum length");
  replay->add_option("--coefficients", o.coefficients, "Model coefficients");

  auto* gen_wl = app.add_subcommand("gen-workload", "Draw an 8-app workload from a classified roster");
  gen_wl->add_option("--recipe", o.recipe, "backend, frontend or mixed")->required();
  gen_wl->add_option("--out", o.out, "Workload spec (JSON)")->required();
  gen_wl->add_option("--seed", o.seed, "Seed");
  gen_wl->add_option("--size", o.size, "Apps per workload");
  gen_wl->add_option("--config", o.config, "Roster or catalog (JSON); defaults to the built-in catalog");

  auto* report = app.add_subcommand("report", "Compute metrics from schedule logs");
  report->add_option("--log,--config", o.logs, "Schedule logs")->required();
  report->add_option("--out", o.out, "Output directory")->required();
  report->add_option("--cv-threshold", o.cv_threshold, "Target coefficient of variation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(o, out);
    if (gen_profiles->parsed()) return cmd_gen_profiles(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (replay->parsed()) return cmd_replay(o, out);
    if (gen_wl->parsed()) return cmd_gen_workload(o, out);
    if (report->parsed()) return cmd_report(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace synpa
