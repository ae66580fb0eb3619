#include "synpa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "synpa/error.hpp"

namespace synpa {
namespace {

std::vector<ClassifiedApp> pick(std::vector<ClassifiedApp> pool, std::size_t k, std::mt19937_64& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(k);
  return pool;
}

std::vector<ClassifiedApp> of_class(const std::vector<ClassifiedApp>& roster, AppClass c) {
  std::vector<ClassifiedApp> out;
  std::copy_if(roster.begin(), roster.end(), std::back_inserter(out), [c](const ClassifiedApp& a) { return a.cls == c; });
  return out;
}

void require(std::size_t have, std::size_t need, AppClass c, Recipe r) {
  if (have < need) {
    throw Error(Errc::kInsufficientClass, std::string(to_string(r)) + " recipe needs " + std::to_string(need) + " " +
                                              std::string(to_string(c)) + " apps, roster has " + std::to_string(have));
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

std::string_view to_string(Recipe r) {
  switch (r) {
    case Recipe::kBackend: return "backend";
    case Recipe::kFrontend: return "frontend";
    case Recipe::kMixed: return "mixed";
  }
  return "?";
}

Recipe parse_recipe(std::string_view name) {
  if (name == "backend") return Recipe::kBackend;
  if (name == "frontend") return Recipe::kFrontend;
  if (name == "mixed") return Recipe::kMixed;
  throw Error(Errc::kInvalidArgument, "unknown recipe '" + std::string(name) + "'");
}

AppClass parse_app_class(std::string_view name) {
  if (name == "backend") return AppClass::kBackendBound;
  if (name == "frontend") return AppClass::kFrontendBound;
  if (name == "other") return AppClass::kOther;
  throw Error(Errc::kInvalidArgument, "unknown app class '" + std::string(name) + "'");
}

WorkloadSpec gen_workload(Recipe recipe, const std::vector<ClassifiedApp>& roster, std::uint64_t seed, std::size_t size) {
  if (size < 2) throw Error(Errc::kInvalidArgument, "workload size must be >= 2");
  std::mt19937_64 rng(seed);
  WorkloadSpec w;
  w.recipe = recipe;
  w.seed = seed;
  w.name = std::string(to_string(recipe)) + "-" + std::to_string(seed);

  if (recipe == Recipe::kMixed) {
    const auto be = of_class(roster, AppClass::kBackendBound);
    const auto fe = of_class(roster, AppClass::kFrontendBound);
    const std::size_t half = size / 2;
    require(be.size(), half, AppClass::kBackendBound, recipe);
    require(fe.size(), size - half, AppClass::kFrontendBound, recipe);
    w.apps = pick(be, half, rng);
    const auto rest = pick(fe, size - half, rng);
    w.apps.insert(w.apps.end(), rest.begin(), rest.end());
    return w;
  }

  const AppClass bound = recipe == Recipe::kBackend ? AppClass::kBackendBound : AppClass::kFrontendBound;
  const auto lo = static_cast<std::size_t>(std::lround(5.0 * static_cast<double>(size) / 8.0));
  const auto hi = std::min(size, static_cast<std::size_t>(std::lround(6.0 * static_cast<double>(size) / 8.0)));
  const auto pool = of_class(roster, bound);
  const auto others = of_class(roster, AppClass::kOther);
  require(pool.size(), lo, bound, recipe);
  std::size_t k = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  k = std::min(k, pool.size());
  require(others.size(), size - k, AppClass::kOther, recipe);
  w.apps = pick(pool, k, rng);
  const auto rest = pick(others, size - k, rng);
  w.apps.insert(w.apps.end(), rest.begin(), rest.end());
  return w;
}

nlohmann::ordered_json to_json(const WorkloadSpec& w) {
  nlohmann::ordered_json j;
  j["name"] = w.name;
  j["recipe"] = to_string(w.recipe);
  j["seed"] = w.seed;
  auto& apps = j["apps"] = nlohmann::ordered_json::array();
  for (const auto& a : w.apps) apps.push_back({{"id", a.id}, {"class", to_string(a.cls)}});
  return j;
}

WorkloadSpec workload_from_json(const nlohmann::json& j) {
  WorkloadSpec w;
  try {
    w.name = j.at("name").get<std::string>();
    w.recipe = parse_recipe(j.at("recipe").get<std::string>());
    w.seed = get_or<std::uint64_t>(j, "seed", 0);
    for (const auto& a : j.at("apps")) {
      w.apps.push_back({a.at("id").get<std::string>(), parse_app_class(get_or<std::string>(a, "class", "other"))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidConfig, std::string("workload: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::kInvalidConfig, std::string("workload: ") + e.what());
  }
  if (w.apps.size() < 2) throw Error(Errc::kInvalidConfig, "workload " + w.name + " needs at least two apps");
  return w;
}

const std::vector<SyntheticApp>& builtin_catalog() {
  static const std::vector<SyntheticApp> catalog = [] {
    std::mt19937_64 rng(2022);
    std::vector<SyntheticApp> out;
    auto add = [&](const char* prefix, AppClass cls, int count) {
      for (int k = 0; k < count; ++k) {
        std::string id = prefix + std::string(k < 10 ? "0" : "") + std::to_string(k);
        out.push_back(random_app(std::move(id), cls, rng));
      }
    };
    add("be", AppClass::kBackendBound, 10);
    add("fe", AppClass::kFrontendBound, 8);
    add("ot", AppClass::kOther, 10);
    return out;
  }();
  return catalog;
}

std::vector<ClassifiedApp> classify_catalog(const std::vector<SyntheticApp>& catalog) {
  std::vector<ClassifiedApp> out;
  for (const auto& a : catalog) out.push_back({a.id, a.app_class()});
  return out;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("catalog")) {
      cfg.catalog.clear();
      for (const auto& a : j.at("catalog")) cfg.catalog.push_back(app_from_json(a));
    }
    if (j.contains("workloads")) {
      for (const auto& w : j.at("workloads")) cfg.workloads.push_back(workload_from_json(w));
    } else if (j.contains("workload")) {
      cfg.workloads.push_back(workload_from_json(j.at("workload")));
    } else if (j.contains("apps") && j.contains("recipe")) {
      cfg.workloads.push_back(workload_from_json(j));
    }
    if (j.contains("generate")) {
      const auto& g = j.at("generate");
      const auto recipe = parse_recipe(g.at("recipe").get<std::string>());
      const auto count = get_or<std::size_t>(g, "count", 1);
      const auto seed = get_or<std::uint64_t>(g, "seed", 0);
      const auto size = get_or<std::size_t>(g, "size", kWorkloadSize);
      const auto roster = classify_catalog(cfg.catalog);
      for (std::size_t k = 0; k < count; ++k) cfg.workloads.push_back(gen_workload(recipe, roster, seed + k, size));
    }
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      cfg.sim.quantum_ms = get_or(s, "quantum_ms", cfg.sim.quantum_ms);
      cfg.sim.cycles_per_ms = get_or(s, "cycles_per_ms", cfg.sim.cycles_per_ms);
      cfg.sim.dispatch_width = get_or(s, "dispatch_width", cfg.sim.dispatch_width);
      cfg.sim.noise_sigma = get_or(s, "noise_sigma", cfg.sim.noise_sigma);
      cfg.target_quanta = get_or(s, "target_quanta", cfg.target_quanta);
    }
    if (j.contains("policies")) {
      cfg.policies.clear();
      for (const auto& p : j.at("policies")) cfg.policies.push_back(parse_policy(p.get<std::string>()));
    }
    cfg.seed = get_or(j, "seed", cfg.seed);
    cfg.runs = get_or(j, "runs", cfg.runs);
    cfg.cv_threshold = get_or(j, "cv_threshold", cfg.cv_threshold);
    if (j.contains("coefficients")) cfg.coefficients = coefficients_from_json(j.at("coefficients"));
    if (j.contains("ground_truth")) cfg.ground_truth = coefficients_from_json(j.at("ground_truth"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidConfig, std::string("experiment config: ") + e.what());
  }
  if (cfg.workloads.empty()) throw Error(Errc::kInvalidConfig, "experiment config defines no workload");
  if (cfg.runs == 0) throw Error(Errc::kInvalidConfig, "runs must be >= 1");
  if (cfg.policies.empty()) throw Error(Errc::kInvalidConfig, "no policy selected");
  return cfg;
}

std::vector<SyntheticApp> materialize(const WorkloadSpec& w, const ExperimentConfig& cfg) {
  std::map<std::string, const SyntheticApp*> by_id;
  for (const auto& a : cfg.catalog) by_id.emplace(a.id, &a);
  std::vector<SyntheticApp> out;
  std::map<std::string, int> seen;
  for (const auto& wa : w.apps) {
    const auto it = by_id.find(wa.id);
    if (it == by_id.end()) throw Error(Errc::kInvalidConfig, "workload " + w.name + " names unknown app " + wa.id);
    auto app = *it->second;
    // Repeated ids get distinct instance names so the roster stays unique.
    const int n = seen[wa.id]++;
    if (n > 0) app.id += "#" + std::to_string(n);
    if (cfg.target_quanta > 0) app.target_instructions = target_for_quanta(app, cfg.sim, cfg.target_quanta);
    if (app.target_instructions == 0) throw Error(Errc::kInvalidConfig, "app " + app.id + " has no target");
    out.push_back(std::move(app));
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool keep_logs) {
  ExperimentResult result;
  for (const auto& w : cfg.workloads) {
    const auto apps = materialize(w, cfg);
    for (auto policy : cfg.policies) {
      std::vector<MetricsReport> reports;
      for (std::size_t r = 0; r < cfg.runs; ++r) {
        EngineConfig ec;
        ec.quantum_ms = cfg.sim.quantum_ms;
        ec.dispatch_width = cfg.sim.dispatch_width;
        ec.coefficients = cfg.coefficients;
        ec.policy = policy;
        ec.seed = cfg.seed + r;
        auto log = run_simulation(ec, apps, cfg.ground_truth, cfg.sim);
        log.workload = w.name;
        auto metrics = compute_metrics(log, w.name);
        reports.push_back(metrics);
        RunResult rr{w.name, policy, ec.seed, {}, std::move(metrics)};
        if (keep_logs) rr.log = std::move(log);
        result.runs.push_back(std::move(rr));
      }
      result.summary.push_back(reports.size() >= 2 ? aggregate_runs(reports, cfg.cv_threshold) : reports.front());
    }
  }
  return result;
}

}  // namespace synpa
