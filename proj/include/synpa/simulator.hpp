#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "synpa/dispatch_model.hpp"
#include "synpa/interference.hpp"
#include "synpa/trainer.hpp"

namespace synpa {

struct Phase {
  CategoryVector st;
  std::uint64_t instructions = 0;  // budget before the next phase starts
};

/// Ground truth for one simulated application. Phases repeat once the last
/// budget is used up.
struct SyntheticApp {
  std::string id;
  std::vector<Phase> phases;
  std::uint64_t target_instructions = 0;

  const CategoryVector& phase_at(std::uint64_t progress) const;
  /// Instruction-weighted mean of the phase vectors.
  CategoryVector mean_vector() const;
  AppClass app_class() const { return classify(mean_vector()); }
  void validate() const;
};

nlohmann::ordered_json to_json(const SyntheticApp& a);
SyntheticApp app_from_json(const nlohmann::json& j);

struct SimParams {
  unsigned dispatch_width = 4;
  double quantum_ms = 100.0;
  double cycles_per_ms = 2.0e6;
  double noise_sigma = 0.0;

  std::uint64_t quantum_cycles() const;
  /// Instructions an app in `st` commits alone during one quantum.
  std::uint64_t isolated_capacity(const CategoryVector& st) const;
};

/// Outcome of one simulated quantum for one application.
struct AppStep {
  CategoryVector st;          // ground truth during the quantum
  CategoryTriple observed;    // SMT categories relative to isolated time, noisy
  double slowdown = 1.0;      // noiseless
  std::uint64_t committed = 0;
  std::optional<double> completed_at;  // fraction of the quantum, when the instance finished
};

/// Closed-loop stand-in for the hardware. Each app runs a sequence of
/// instances; an instance that reaches its target is relaunched at the start
/// of the next quantum.
class Simulator {
 public:
  Simulator(std::vector<SyntheticApp> apps, ModelCoefficients ground_truth, SimParams params, std::uint64_t seed);

  std::size_t size() const { return apps_.size(); }
  const SyntheticApp& app(std::size_t i) const { return apps_[i]; }
  const SimParams& params() const { return params_; }
  std::uint64_t progress(std::size_t i) const { return progress_[i]; }
  std::uint64_t instance(std::size_t i) const { return instance_[i]; }
  const CategoryVector& current_st(std::size_t i) const { return apps_[i].phase_at(progress_[i]); }

  /// partner[i] is i's co-runner, nullopt when i runs alone.
  std::vector<AppStep> step(const std::vector<std::optional<std::size_t>>& partner);

 private:
  std::vector<SyntheticApp> apps_;
  ModelCoefficients truth_;
  SimParams params_;
  std::mt19937_64 rng_;
  std::vector<std::uint64_t> progress_;
  std::vector<std::uint64_t> instance_;
  std::vector<bool> relaunch_;
};

/// Quanta an app needs alone on a core, fractional in the last quantum.
double isolated_completion(const SyntheticApp& app, const SimParams& p);
/// Target equal to what the app commits alone in `quanta` quanta.
std::uint64_t target_for_quanta(const SyntheticApp& app, const SimParams& p, std::uint64_t quanta);

/// Random phase-varying app, pinned to `cls` by construction.
SyntheticApp random_app(std::string id, AppClass cls, std::mt19937_64& rng);

struct ProfileCorpus {
  std::vector<Profile> isolated;
  std::vector<std::pair<Profile, Profile>> paired;
};

/// Isolated profiles for `apps` plus one paired run per unordered pair, with
/// SMT behaviour drawn from `truth` at instruction-aligned progress.
ProfileCorpus generate_profile_corpus(const std::vector<SyntheticApp>& apps, const ModelCoefficients& truth,
                                      const SimParams& p, std::uint64_t isolated_quanta, std::uint64_t seed);

}  // namespace synpa
