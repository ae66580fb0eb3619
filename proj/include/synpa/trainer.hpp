#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "synpa/counters.hpp"
#include "synpa/dispatch_model.hpp"
#include "synpa/interference.hpp"

namespace synpa {

struct ProfileRecord {
  CategoryVector categories;
  std::uint64_t committed_instructions = 0;  // this quantum only
  std::uint64_t cycles = 0;
};

/// Per-quantum behaviour of one application, either alone on a core or
/// sharing it with `paired_with`.
struct Profile {
  std::string app_id;
  std::optional<std::string> paired_with;
  std::vector<ProfileRecord> records;

  /// Running totals of committed instructions, strictly increasing.
  std::vector<std::uint64_t> cumulative_instructions() const;
};

/// One isolated profile (mode "isolated") or the two halves of a paired run.
std::vector<Profile> profiles_from_document(const TraceDocument& doc);
TraceDocument profile_document(const std::vector<Profile>& profiles, unsigned dispatch_width, double quantum_ms);

struct AlignedSample {
  CategoryVector st_i;
  CategoryVector st_j;
  CategoryTriple smt_ij;  // SMT categories relative to isolated execution time
  CategoryTriple smt_ji;
};

struct Alignment {
  std::vector<AlignedSample> samples;
  std::size_t dropped = 0;  // SMT quanta past the end of isolated coverage
};

Alignment align(const Profile& iso_i, const Profile& iso_j, const Profile& smt_i, const Profile& smt_j);

struct ProfileSet {
  std::vector<Profile> isolated;
  std::vector<std::pair<Profile, Profile>> paired;
};

ProfileSet load_profile_dir(const std::filesystem::path& dir);
/// Aligns every paired run against the isolated profiles of its two members.
Alignment align_all(const ProfileSet& set);

struct FitReport {
  ModelCoefficients coefficients;
  std::array<double, 3> mse{};  // indexed by Category, on the held-out quanta
  std::size_t train_samples = 0;
  std::size_t holdout_samples = 0;
  std::size_t dropped_quanta = 0;
  double split = 0.8;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultSplit = 0.8;

/// Least squares for one category over both directions of every sample.
CategoryCoefficients fit_category(const std::vector<AlignedSample>& train, Category c);
FitReport fit(const std::vector<AlignedSample>& samples, double split, std::uint64_t seed);
std::array<double, 3> evaluate(const ModelCoefficients& m, const std::vector<AlignedSample>& holdout);

nlohmann::ordered_json to_json(const FitReport& r);

}  // namespace synpa
