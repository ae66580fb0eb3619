#include "synpa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "synpa/error.hpp"

namespace synpa {
namespace {

double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pop_stddev(const std::vector<double>& xs, double mu) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

}  // namespace

double turnaround_time(const ScheduleLog& log) {
  if (log.apps.empty()) throw Error(Errc::kIncompleteLog, "schedule log lists no apps");
  double tt = 0.0;
  for (const auto& a : log.apps) {
    if (!a.completion) throw Error(Errc::kIncompleteLog, "app " + a.id + " never reached its target");
    tt = std::max(tt, *a.completion);
  }
  return tt;
}

std::vector<double> individual_speedups(const ScheduleLog& log) {
  std::vector<double> out;
  for (const auto& a : log.apps) {
    if (!a.completion || !a.isolated_completion) {
      throw Error(Errc::kIncompleteLog, "app " + a.id + " lacks a completion or isolated baseline");
    }
    out.push_back(*a.isolated_completion / *a.completion);
  }
  return out;
}

double fairness(const std::vector<double>& speedups) {
  if (speedups.empty()) throw Error(Errc::kInvalidArgument, "fairness of an empty list");
  for (double s : speedups) {
    if (!(s > 0.0)) throw Error(Errc::kInvalidArgument, "speedups must be positive");
  }
  const double mu = mean(speedups);
  return 1.0 - pop_stddev(speedups, mu) / mu;
}

GeomeanResult ipc_geomean(const std::vector<double>& ipcs) {
  if (ipcs.empty()) throw Error(Errc::kInvalidArgument, "geometric mean of an empty list");
  GeomeanResult r;
  double product = 1.0;
  for (double x : ipcs) {
    if (!(x >= 0.0)) throw Error(Errc::kInvalidArgument, "IPC must be non-negative");
    if (x == 0.0) r.has_zero = true;
    product *= x;
  }
  r.value = r.has_zero ? 0.0 : std::pow(product, 1.0 / static_cast<double>(ipcs.size()));
  return r;
}

std::vector<double> app_ipcs(const ScheduleLog& log) {
  std::vector<double> out;
  for (const auto& a : log.apps) {
    if (!a.completion) throw Error(Errc::kIncompleteLog, "app " + a.id + " never reached its target");
    const double cycles = *a.completion * static_cast<double>(log.quantum_cycles);
    if (!(cycles > 0.0)) throw Error(Errc::kInvalidArgument, "app " + a.id + " ran for zero cycles");
    out.push_back(static_cast<double>(a.target_instructions) / cycles);
  }
  return out;
}

GeomeanResult ipc_geomean(const ScheduleLog& log) { return ipc_geomean(app_ipcs(log)); }

MetricsReport compute_metrics(const ScheduleLog& log, const std::string& workload) {
  MetricsReport r;
  r.workload = workload;
  r.policy = std::string(to_string(log.policy));
  r.turnaround_quanta = turnaround_time(log);
  r.turnaround_ms = r.turnaround_quanta * log.quantum_ms;
  for (const auto& a : log.apps) r.app_ids.push_back(a.id);
  r.speedups = individual_speedups(log);
  r.fairness = fairness(r.speedups);
  const auto g = ipc_geomean(log);
  r.ipc_geomean = g.value;
  r.ipc_zero = g.has_zero;
  return r;
}

double coefficient_of_variation(const std::vector<double>& xs) {
  if (xs.empty()) throw Error(Errc::kInvalidArgument, "coefficient of variation of an empty list");
  const double mu = mean(xs);
  if (mu == 0.0) throw Error(Errc::kInvalidArgument, "coefficient of variation with zero mean");
  return pop_stddev(xs, mu) / std::abs(mu);
}

MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports, double cv_threshold) {
  if (reports.size() < 2) throw Error(Errc::kInvalidArgument, "aggregation needs at least two runs");
  if (!(cv_threshold >= 0.0)) throw Error(Errc::kInvalidArgument, "cv threshold must be >= 0");

  std::vector<std::size_t> kept(reports.size());
  std::iota(kept.begin(), kept.end(), 0);
  auto tts = [&] {
    std::vector<double> v;
    for (auto k : kept) v.push_back(reports[k].turnaround_quanta);
    return v;
  };

  MetricsReport out;
  double cv = coefficient_of_variation(tts());
  while (cv > cv_threshold && kept.size() > 2) {
    const auto v = tts();
    const double mu = mean(v);
    std::size_t worst = 0;
    for (std::size_t k = 1; k < v.size(); ++k) {
      if (std::abs(v[k] - mu) > std::abs(v[worst] - mu)) worst = k;
    }
    auto trial = kept;
    trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(worst));
    std::vector<double> tv;
    for (auto k : trial) tv.push_back(reports[k].turnaround_quanta);
    const double next_cv = coefficient_of_variation(tv);
    if (!(next_cv < cv)) break;
    std::ostringstream why;
    why << "turnaround " << fmt(v[worst]) << " farthest from mean " << fmt(mu) << " at cv " << fmt(cv);
    out.discarded.push_back({kept[worst], v[worst], why.str()});
    kept = std::move(trial);
    cv = next_cv;
  }
  out.warning = cv > cv_threshold;

  const auto& first = reports[kept.front()];
  out.workload = first.workload;
  out.policy = first.policy;
  out.app_ids = first.app_ids;
  out.runs = kept.size();
  out.turnaround_cv = cv;
  out.speedups.assign(first.speedups.size(), 0.0);
  out.fairness = 0.0;
  const auto n = static_cast<double>(kept.size());
  for (auto k : kept) {
    const auto& r = reports[k];
    if (r.speedups.size() != out.speedups.size()) throw Error(Errc::kInvalidArgument, "runs disagree on app count");
    out.turnaround_quanta += r.turnaround_quanta / n;
    out.turnaround_ms += r.turnaround_ms / n;
    out.fairness += r.fairness / n;
    out.ipc_geomean += r.ipc_geomean / n;
    out.ipc_zero = out.ipc_zero || r.ipc_zero;
    for (std::size_t a = 0; a < r.speedups.size(); ++a) out.speedups[a] += r.speedups[a] / n;
  }
  return out;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["workload"] = r.workload;
  j["policy"] = r.policy;
  j["turnaround_quanta"] = r.turnaround_quanta;
  j["turnaround_ms"] = r.turnaround_ms;
  auto& s = j["speedups"] = nlohmann::ordered_json::object();
  for (std::size_t a = 0; a < r.speedups.size(); ++a) s[r.app_ids.at(a)] = r.speedups[a];
  j["fairness"] = r.fairness;
  j["ipc_geomean"] = r.ipc_geomean;
  j["ipc_zero"] = r.ipc_zero;
  j["runs"] = r.runs;
  j["turnaround_cv"] = r.turnaround_cv;
  auto& d = j["discarded"] = nlohmann::ordered_json::array();
  for (const auto& x : r.discarded) d.push_back({{"run", x.index}, {"turnaround_quanta", x.turnaround}, {"reason", x.reason}});
  j["warning"] = r.warning;
  return j;
}

std::string csv_header() {
  return "workload,policy,turnaround_quanta,turnaround_ms,fairness,ipc_geomean,ipc_zero,runs,turnaround_cv,discarded,warning";
}

std::string csv_row(const MetricsReport& r) {
  std::ostringstream o;
  o << r.workload << ',' << r.policy << ',' << fmt(r.turnaround_quanta) << ',' << fmt(r.turnaround_ms) << ','
    << fmt(r.fairness) << ',' << fmt(r.ipc_geomean) << ',' << (r.ipc_zero ? 1 : 0) << ',' << r.runs << ','
    << fmt(r.turnaround_cv) << ',' << r.discarded.size() << ',' << (r.warning ? 1 : 0);
  return o.str();
}

}  // namespace synpa
