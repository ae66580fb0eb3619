#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "synpa/counters.hpp"

namespace synpa {

enum class Category : std::size_t { kFullDispatch = 0, kFrontend = 1, kBackend = 2 };

inline constexpr std::array<Category, 3> kCategories{Category::kFullDispatch, Category::kFrontend,
                                                     Category::kBackend};

std::string_view to_string(Category c);

/// Per-category values that need not sum to one: SMT observations expressed
/// relative to isolated execution, or model predictions.
struct CategoryTriple {
  double fdc = 0.0;
  double fe = 0.0;
  double be = 0.0;

  double& operator[](Category c) { return c == Category::kFullDispatch ? fdc : c == Category::kFrontend ? fe : be; }
  double operator[](Category c) const {
    return c == Category::kFullDispatch ? fdc : c == Category::kFrontend ? fe : be;
  }
  double sum() const { return fdc + fe + be; }

  friend bool operator==(const CategoryTriple&, const CategoryTriple&) = default;
};

/// Cycle fractions of the three dispatch categories. Always non-negative and
/// summing to one within 1e-9.
class CategoryVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Defaults to ideal full dispatch.
  CategoryVector() = default;

  /// Throws Errc::kInvalidArgument unless the fractions form a distribution.
  static CategoryVector from_fractions(double fe, double be, double fdc);

  /// Clamps negatives to zero and rescales to sum one. Returns nullopt-like
  /// failure through `ok` when every component is zero.
  static CategoryVector renormalize(const CategoryTriple& t, bool* ok = nullptr);

  double fe() const { return v_.fe; }
  double be() const { return v_.be; }
  double fdc() const { return v_.fdc; }
  double operator[](Category c) const { return v_[c]; }
  const CategoryTriple& values() const { return v_; }
  operator const CategoryTriple&() const { return v_; }  // NOLINT(google-explicit-constructor)

  friend bool operator==(const CategoryVector&, const CategoryVector&) = default;

 private:
  explicit CategoryVector(CategoryTriple v) : v_(v) {}
  CategoryTriple v_{1.0, 0.0, 0.0};
};

/// Dispatch-stage cycle accounting for one sample. Everything is held in
/// dispatch slots (cycles x width) so the partition is exact in integers;
/// accessors convert to cycles.
struct CategoryBreakdown {
  std::uint64_t fe_slots = 0;
  std::uint64_t be_slots = 0;        // measured backend stalls plus revealed stalls
  std::uint64_t full_dispatch_slots = 0;
  std::uint64_t total_slots = 0;
  std::uint64_t revealed_slots = 0;  // horizontal waste, already included in be_slots
  unsigned dispatch_width = 1;
  bool clamped = false;              // counters were skewed and had to be corrected

  double fe_stalls() const { return static_cast<double>(fe_slots) / dispatch_width; }
  double be_stalls_total() const { return static_cast<double>(be_slots) / dispatch_width; }
  double full_dispatch() const { return static_cast<double>(full_dispatch_slots) / dispatch_width; }
  double total_cycles() const { return static_cast<double>(total_slots) / dispatch_width; }
  double revealed() const { return static_cast<double>(revealed_slots) / dispatch_width; }
};

enum class AppClass { kBackendBound, kFrontendBound, kOther };

std::string_view to_string(AppClass c);

inline constexpr double kBackendBoundThreshold = 0.65;
inline constexpr double kFrontendBoundThreshold = 0.35;

CategoryBreakdown characterize(const RawCounterSample& sample, unsigned dispatch_width);
CategoryVector normalize(const CategoryBreakdown& b);
AppClass classify(const CategoryVector& v);

/// Builds raw counters whose characterization reproduces `v` up to slot
/// rounding. Used to emit synthetic traces and profiles.
RawCounterSample synthesize_sample(const CategoryVector& v, std::uint64_t cycles, unsigned dispatch_width,
                                   std::string thread_id, std::uint64_t quantum_index);

}  // namespace synpa
