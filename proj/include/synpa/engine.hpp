#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "synpa/counters.hpp"
#include "synpa/interference.hpp"
#include "synpa/matcher.hpp"
#include "synpa/simulator.hpp"

namespace synpa {

enum class Policy { kSynpa, kRandom, kStatic };
std::string_view to_string(Policy p);
Policy parse_policy(std::string_view name);

enum class ProviderKind { kTrace, kSimulator };
std::string_view to_string(ProviderKind k);

/// partner[i] is the co-runner of app i, nullopt when it has a core to itself.
using Assignment = std::vector<std::optional<std::size_t>>;

struct EngineConfig {
  double quantum_ms = 100.0;
  unsigned dispatch_width = 4;
  ModelCoefficients coefficients = ModelCoefficients::published();
  std::vector<std::string> roster;
  ProviderKind provider = ProviderKind::kSimulator;
  std::uint64_t seed = 0;
  Policy policy = Policy::kSynpa;
  double aging_decay = 0.9;       // weight kept per stale quantum when inversion degrades
  std::uint64_t max_quanta = 1'000'000;

  void validate() const;
};

struct AllocationAck {
  std::size_t migrations = 0;  // apps whose co-runner changed
  bool no_migration = true;
};

class Allocator {
 public:
  virtual ~Allocator() = default;
  virtual AllocationAck apply(const Assignment& a) = 0;
};

/// Remembers the placement and counts migrations; touches nothing else.
class RecordingAllocator final : public Allocator {
 public:
  AllocationAck apply(const Assignment& a) override;
  const Assignment& current() const { return current_; }

 private:
  Assignment current_;
  bool first_ = true;
};

/// Placeholder for sched_setaffinity-style placement.
class OsAllocator final : public Allocator {
 public:
  AllocationAck apply(const Assignment& a) override;
};

AllocationAck apply_assignment(Allocator& allocator, const Assignment& a);

/// What one app did during one quantum.
struct Observation {
  bool live = true;
  CategoryTriple observed;
  std::uint64_t committed = 0;
  std::uint64_t instance = 0;
  std::optional<double> slowdown;      // simulator only
  std::optional<CategoryVector> truth; // simulator only
  std::optional<double> completed_at;  // fraction of the quantum
};

struct AppSummary {
  std::string id;
  std::optional<double> completion;           // first launch, in quanta
  std::optional<double> isolated_completion;  // same target alone on a core
  std::uint64_t target_instructions = 0;
  std::uint64_t relaunches = 0;
};

struct AppQuantumRecord {
  std::string id;
  std::uint64_t instance = 0;
  bool live = true;
  CategoryTriple observed;
  CategoryVector estimate;
  bool degraded = false;
  std::uint64_t committed = 0;
  std::optional<double> slowdown;
  std::optional<CategoryVector> truth;
  bool completed = false;
};

struct QuantumRecord {
  std::uint64_t quantum = 0;
  std::vector<std::pair<std::string, std::string>> assignment;  // in force during the quantum
  std::vector<std::pair<std::string, std::string>> decision;    // applied for the next quantum
  std::size_t migrations = 0;
  bool no_migration = true;
  std::vector<AppQuantumRecord> apps;
};

struct ScheduleLog {
  static constexpr int kVersion = 1;
  std::string workload;
  Policy policy = Policy::kSynpa;
  ProviderKind provider = ProviderKind::kSimulator;
  std::uint64_t seed = 0;
  double quantum_ms = 100.0;
  unsigned dispatch_width = 4;
  std::uint64_t quantum_cycles = 0;  // simulator only
  std::vector<std::string> roster;
  ModelCoefficients coefficients;
  std::vector<QuantumRecord> quanta;
  std::vector<AppSummary> apps;
  bool complete = false;  // every app reached its first target
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual const std::vector<std::string>& roster() const = 0;
  virtual ProviderKind kind() const = 0;
  /// Runs quantum `q` under `a`; nullopt once there is nothing left to run.
  virtual std::optional<std::vector<Observation>> execute(std::uint64_t q, const Assignment& a) = 0;
  /// Fills in targets, isolated baselines and cycle counts where known.
  virtual void annotate(ScheduleLog& log) const { (void)log; }
};

class SimEnvironment final : public Environment {
 public:
  explicit SimEnvironment(Simulator sim);
  const std::vector<std::string>& roster() const override { return roster_; }
  ProviderKind kind() const override { return ProviderKind::kSimulator; }
  std::optional<std::vector<Observation>> execute(std::uint64_t q, const Assignment& a) override;
  void annotate(ScheduleLog& log) const override;
  const Simulator& simulator() const { return sim_; }

 private:
  Simulator sim_;
  std::vector<std::string> roster_;
  std::vector<bool> finished_once_;
};

/// Counter replay. Each quantum is taken to have run under the assignment the
/// engine applied before it; observations are normalized to SMT cycles.
class ReplayEnvironment final : public Environment {
 public:
  explicit ReplayEnvironment(CounterProvider& provider);
  const std::vector<std::string>& roster() const override { return provider_.header().threads; }
  ProviderKind kind() const override { return ProviderKind::kTrace; }
  std::optional<std::vector<Observation>> execute(std::uint64_t q, const Assignment& a) override;

 private:
  CounterProvider& provider_;
};

ScheduleLog run(const EngineConfig& config, Environment& env, Allocator& allocator);
/// Convenience: simulated run with a recording allocator.
ScheduleLog run_simulation(const EngineConfig& config, const std::vector<SyntheticApp>& apps,
                           const ModelCoefficients& ground_truth, const SimParams& params);

void write_log(std::ostream& out, const ScheduleLog& log);
ScheduleLog read_log(std::istream& in);
ScheduleLog read_log_file(const std::filesystem::path& path);
void write_log_file(const std::filesystem::path& path, const ScheduleLog& log);

/// Converts a matching over `roster` (plus an optional trailing idle node).
Assignment assignment_from_matching(const Matching& m, std::size_t roster_size);
std::vector<std::pair<std::string, std::string>> named_pairs(const Assignment& a, const std::vector<std::string>& roster);

}  // namespace synpa
