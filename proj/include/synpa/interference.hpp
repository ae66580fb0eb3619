#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "synpa/dispatch_model.hpp"

namespace synpa {

/// Coefficients of the bilinear per-category model
///   smt(i|j) = alpha + beta*st_i + gamma*st_j + rho*st_i*st_j
struct CategoryCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double rho = 0.0;

  bool finite() const;
  friend bool operator==(const CategoryCoefficients&, const CategoryCoefficients&) = default;
};

struct ModelCoefficients {
  static constexpr int kVersion = 1;

  std::array<CategoryCoefficients, 3> per_category{};  // indexed by Category
  std::string provenance;

  CategoryCoefficients& operator[](Category c) { return per_category[static_cast<std::size_t>(c)]; }
  const CategoryCoefficients& operator[](Category c) const { return per_category[static_cast<std::size_t>(c)]; }

  /// The published three-category coefficient set for a 4-wide ARMv8 core.
  static ModelCoefficients published();
  static ModelCoefficients zero();

  friend bool operator==(const ModelCoefficients&, const ModelCoefficients&) = default;
};

nlohmann::ordered_json to_json(const ModelCoefficients& m);
/// Accepts a bare coefficient document or anything embedding one under
/// "coefficients" (a fit report, for instance).
ModelCoefficients coefficients_from_json(const nlohmann::json& j);
ModelCoefficients load_coefficients(const std::filesystem::path& path);
void save_coefficients(const std::filesystem::path& path, const ModelCoefficients& m);

/// Predicted SMT value of one category. Clamped at zero, never above.
double forward(const CategoryCoefficients& c, double ci_st, double cj_st);

struct PairPrediction {
  CategoryTriple smt_i_given_j;
  CategoryTriple smt_j_given_i;
  double slowdown_i_given_j = 0.0;
  double slowdown_j_given_i = 0.0;
};

PairPrediction predict_pair(const ModelCoefficients& m, const CategoryVector& st_i, const CategoryVector& st_j);

struct CategoryInversion {
  double ci = 0.0;  // unclamped solution
  double cj = 0.0;
  bool degraded = false;
};

/// Solves {smt_ij = f(ci,cj), smt_ji = f(cj,ci)} for one category.
CategoryInversion invert_category(const CategoryCoefficients& c, double smt_ij, double smt_ji);

struct InversionResult {
  CategoryVector st_i;
  CategoryVector st_j;
  CategoryTriple raw_i;  // per-category solutions before clamping and renormalization
  CategoryTriple raw_j;
  bool degraded = false;
};

/// Recovers the isolated-execution categories of two co-runners from what was
/// observed while they shared a core.
InversionResult invert(const ModelCoefficients& m, const CategoryTriple& smt_ij, const CategoryTriple& smt_ji);

}  // namespace synpa
