#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "synpa/engine.hpp"

namespace synpa {

/// Completion of the slowest app's first launch, in quanta.
double turnaround_time(const ScheduleLog& log);
/// Isolated completion time over SMT completion time, per app.
std::vector<double> individual_speedups(const ScheduleLog& log);
/// 1 - sigma/mu with the population standard deviation.
double fairness(const std::vector<double>& speedups);

struct GeomeanResult {
  double value = 0.0;
  bool has_zero = false;
};

GeomeanResult ipc_geomean(const std::vector<double>& ipcs);
/// Per-app IPC over the first launch: target instructions over elapsed cycles.
std::vector<double> app_ipcs(const ScheduleLog& log);
GeomeanResult ipc_geomean(const ScheduleLog& log);

struct DiscardedRun {
  std::size_t index = 0;
  double turnaround = 0.0;
  std::string reason;
};

struct MetricsReport {
  std::string workload;
  std::string policy;
  double turnaround_quanta = 0.0;
  double turnaround_ms = 0.0;
  std::vector<std::string> app_ids;
  std::vector<double> speedups;
  double fairness = 1.0;
  double ipc_geomean = 0.0;
  bool ipc_zero = false;
  std::size_t runs = 1;
  double turnaround_cv = 0.0;
  std::vector<DiscardedRun> discarded;
  bool warning = false;
};

MetricsReport compute_metrics(const ScheduleLog& log, const std::string& workload);

inline constexpr double kDefaultCvThreshold = 0.05;

/// Drops the run farthest from the mean turnaround time until the coefficient
/// of variation is within `cv_threshold` or two runs remain.
MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports, double cv_threshold = kDefaultCvThreshold);

/// Population coefficient of variation.
double coefficient_of_variation(const std::vector<double>& xs);

nlohmann::ordered_json to_json(const MetricsReport& r);
std::string csv_header();
std::string csv_row(const MetricsReport& r);

}  // namespace synpa
