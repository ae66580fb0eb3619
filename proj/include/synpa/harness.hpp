#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "synpa/engine.hpp"
#include "synpa/metrics.hpp"
#include "synpa/simulator.hpp"

namespace synpa {

enum class Recipe { kBackend, kFrontend, kMixed };
std::string_view to_string(Recipe r);
Recipe parse_recipe(std::string_view name);
AppClass parse_app_class(std::string_view name);

struct ClassifiedApp {
  std::string id;
  AppClass cls = AppClass::kOther;
};

struct WorkloadSpec {
  std::string name;
  Recipe recipe = Recipe::kMixed;
  std::uint64_t seed = 0;
  std::vector<ClassifiedApp> apps;
};

inline constexpr std::size_t kWorkloadSize = 8;

/// Backend or frontend recipes draw 5 or 6 apps (scaled to `size`) from the
/// bound class and fill up with Other; mixed takes half from each bound class.
WorkloadSpec gen_workload(Recipe recipe, const std::vector<ClassifiedApp>& roster, std::uint64_t seed,
                          std::size_t size = kWorkloadSize);

nlohmann::ordered_json to_json(const WorkloadSpec& w);
WorkloadSpec workload_from_json(const nlohmann::json& j);

/// Fixed synthetic stand-in for a benchmark suite: 28 phase-varying apps,
/// 10 backend bound, 8 frontend bound and 10 other.
const std::vector<SyntheticApp>& builtin_catalog();
std::vector<ClassifiedApp> classify_catalog(const std::vector<SyntheticApp>& catalog);

struct ExperimentConfig {
  std::vector<WorkloadSpec> workloads;
  std::vector<SyntheticApp> catalog = builtin_catalog();
  SimParams sim;
  std::uint64_t target_quanta = 600;   // isolated quanta worth of instructions per app
  std::vector<Policy> policies{Policy::kSynpa};
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  double cv_threshold = kDefaultCvThreshold;
  ModelCoefficients coefficients = ModelCoefficients::published();
  ModelCoefficients ground_truth = ModelCoefficients::published();
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Catalog apps of `w` with targets set from `target_quanta`.
std::vector<SyntheticApp> materialize(const WorkloadSpec& w, const ExperimentConfig& cfg);

struct RunResult {
  std::string workload;
  Policy policy = Policy::kSynpa;
  std::uint64_t seed = 0;
  ScheduleLog log;
  MetricsReport metrics;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::vector<MetricsReport> summary;  // one per workload and policy
};

/// Run r of every workload uses seed cfg.seed + r under every policy.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool keep_logs = true);

}  // namespace synpa
