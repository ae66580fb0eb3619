#include "synpa/interference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "synpa/error.hpp"

namespace synpa {
namespace {

constexpr double kDomainTolerance = 1e-9;
constexpr double kSingularTolerance = 1e-12;

double eval(const CategoryCoefficients& c, double x, double y) {
  return c.alpha + c.beta * x + c.gamma * y + c.rho * x * y;
}

bool in_unit(double x) { return x >= -kDomainTolerance && x <= 1.0 + kDomainTolerance; }

double residual(const CategoryCoefficients& c, double x, double y, double a, double b) {
  return std::hypot(eval(c, x, y) - a, eval(c, y, x) - b);
}

// Newton iterations on the 2x2 system; keeps the input when no step improves it.
void polish(const CategoryCoefficients& c, double a, double b, double& x, double& y) {
  double r = residual(c, x, y, a, b);
  for (int it = 0; it < 8 && r > 0.0; ++it) {
    const double f1 = eval(c, x, y) - a;
    const double f2 = eval(c, y, x) - b;
    const double j11 = c.beta + c.rho * y, j12 = c.gamma + c.rho * x;
    const double j21 = c.gamma + c.rho * y, j22 = c.beta + c.rho * x;
    const double det = j11 * j22 - j12 * j21;
    if (std::abs(det) < kSingularTolerance) return;
    const double nx = x - (f1 * j22 - f2 * j12) / det;
    const double ny = y - (j11 * f2 - j21 * f1) / det;
    const double nr = residual(c, nx, ny, a, b);
    if (!(nr < r)) return;
    x = nx;
    y = ny;
    r = nr;
  }
}

CategoryCoefficients parse_quad(const nlohmann::json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_object()) {
    throw Error(Errc::kInvalidConfig, std::string("coefficients lack category '") + name + "'");
  }
  const auto& q = j[name];
  CategoryCoefficients c;
  try {
    c.alpha = q.at("alpha").get<double>();
    c.beta = q.at("beta").get<double>();
    c.gamma = q.at("gamma").get<double>();
    c.rho = q.at("rho").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidConfig, std::string("category '") + name + "': " + e.what());
  }
  if (!c.finite()) throw Error(Errc::kNonFiniteCoefficients, std::string("category '") + name + "'");
  return c;
}

}  // namespace

bool CategoryCoefficients::finite() const {
  return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma) && std::isfinite(rho);
}

ModelCoefficients ModelCoefficients::published() {
  ModelCoefficients m;
  m[Category::kFullDispatch] = {0.0072, 0.9060, 0.0044, 0.0314};
  m[Category::kFrontend] = {0.2376, 1.4111, 0.0, 0.0};
  m[Category::kBackend] = {0.2069, 0.3431, 1.4391, 0.0};
  m.provenance = "published-reference";
  return m;
}

ModelCoefficients ModelCoefficients::zero() {
  ModelCoefficients m;
  m.provenance = "zero";
  return m;
}

nlohmann::ordered_json to_json(const ModelCoefficients& m) {
  nlohmann::ordered_json j;
  j["version"] = ModelCoefficients::kVersion;
  j["provenance"] = m.provenance;
  nlohmann::ordered_json cats;
  for (auto c : kCategories) {
    const auto& q = m[c];
    nlohmann::ordered_json e;
    e["alpha"] = q.alpha;
    e["beta"] = q.beta;
    e["gamma"] = q.gamma;
    e["rho"] = q.rho;
    cats[std::string(to_string(c))] = e;
  }
  j["categories"] = cats;
  return j;
}

ModelCoefficients coefficients_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidConfig, "coefficient document must be an object");
  if (j.contains("coefficients")) return coefficients_from_json(j["coefficients"]);
  const int version = j.value("version", -1);
  if (version != ModelCoefficients::kVersion) {
    throw Error(Errc::kSchemaVersion, "coefficient version " + std::to_string(version));
  }
  if (!j.contains("categories")) throw Error(Errc::kInvalidConfig, "coefficients lack 'categories'");
  ModelCoefficients m;
  const auto& cats = j["categories"];
  for (auto c : kCategories) m[c] = parse_quad(cats, std::string(to_string(c)).c_str());
  m.provenance = j.value("provenance", std::string());
  return m;
}

ModelCoefficients load_coefficients(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open coefficients '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, path.string() + ": " + e.what());
  }
  return coefficients_from_json(j);
}

void save_coefficients(const std::filesystem::path& path, const ModelCoefficients& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write '" + path.string() + "'");
  out << to_json(m).dump(2) << '\n';
}

double forward(const CategoryCoefficients& c, double ci_st, double cj_st) {
  if (!c.finite()) throw Error(Errc::kNonFiniteCoefficients, "forward model coefficients");
  if (!std::isfinite(ci_st) || !std::isfinite(cj_st) || !in_unit(ci_st) || !in_unit(cj_st)) {
    throw Error(Errc::kInvalidArgument, "isolated category values must lie in [0,1]");
  }
  return std::max(0.0, eval(c, ci_st, cj_st));
}

PairPrediction predict_pair(const ModelCoefficients& m, const CategoryVector& st_i, const CategoryVector& st_j) {
  PairPrediction p;
  for (auto c : kCategories) {
    p.smt_i_given_j[c] = forward(m[c], st_i[c], st_j[c]);
    p.smt_j_given_i[c] = forward(m[c], st_j[c], st_i[c]);
  }
  p.slowdown_i_given_j = p.smt_i_given_j.sum();
  p.slowdown_j_given_i = p.smt_j_given_i.sum();
  return p;
}

CategoryInversion invert_category(const CategoryCoefficients& c, double smt_ij, double smt_ji) {
  if (!c.finite()) throw Error(Errc::kNonFiniteCoefficients, "inverse model coefficients");
  // In sum/difference coordinates u = ci + cj, v = ci - cj the system splits:
  //   smt_ij - smt_ji           = (beta - gamma) v
  //   smt_ij + smt_ji - 2 alpha = (beta + gamma) u + (rho / 2)(u^2 - v^2)
  CategoryInversion out;
  const double diff = smt_ij - smt_ji;
  const double sum = smt_ij + smt_ji - 2.0 * c.alpha;
  const double bmg = c.beta - c.gamma;
  const double bpg = c.beta + c.gamma;

  double v = 0.0;
  if (std::abs(bmg) > kSingularTolerance) {
    v = diff / bmg;
  } else if (std::abs(diff) > kDomainTolerance) {
    out.degraded = true;  // asymmetric observations the model cannot produce; symmetric fit
  }

  double u = 0.0;
  if (std::abs(c.rho) <= kSingularTolerance) {
    u = std::abs(bpg) > kSingularTolerance ? sum / bpg : 0.0;
    if (std::abs(bpg) <= kSingularTolerance && std::abs(sum) > kDomainTolerance) out.degraded = true;
  } else {
    const double qa = c.rho / 2.0;
    const double qb = bpg;
    const double qc = -(c.rho / 2.0) * v * v - sum;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) {
      u = -qb / (2.0 * qa);
      out.degraded = true;
    } else {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
      std::array<double, 2> roots{q / qa, q != 0.0 ? qc / q : q / qa};
      const double linear_seed = std::abs(bpg) > kSingularTolerance ? sum / bpg : 0.0;
      std::optional<double> best;
      bool best_inside = false;
      for (double r : roots) {
        const bool inside = in_unit((r + v) / 2.0) && in_unit((r - v) / 2.0);
        const bool closer = !best || std::abs(r - linear_seed) < std::abs(*best - linear_seed);
        if ((inside && !best_inside) || (inside == best_inside && closer)) {
          best = r;
          best_inside = inside;
        }
      }
      u = *best;
    }
  }

  out.ci = (u + v) / 2.0;
  out.cj = (u - v) / 2.0;
  if (!out.degraded) polish(c, smt_ij, smt_ji, out.ci, out.cj);
  return out;
}

InversionResult invert(const ModelCoefficients& m, const CategoryTriple& smt_ij, const CategoryTriple& smt_ji) {
  InversionResult r;
  CategoryTriple ci, cj;
  for (auto c : kCategories) {
    const auto inv = invert_category(m[c], smt_ij[c], smt_ji[c]);
    r.raw_i[c] = inv.ci;
    r.raw_j[c] = inv.cj;
    ci[c] = std::clamp(inv.ci, 0.0, 1.0);
    cj[c] = std::clamp(inv.cj, 0.0, 1.0);
    r.degraded = r.degraded || inv.degraded;
  }
  bool ok_i = true, ok_j = true;
  r.st_i = CategoryVector::renormalize(ci, &ok_i);
  r.st_j = CategoryVector::renormalize(cj, &ok_j);
  r.degraded = r.degraded || !ok_i || !ok_j;
  return r;
}

}  // namespace synpa
