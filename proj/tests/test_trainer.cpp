#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "synpa/simulator.hpp"
#include "synpa/trainer.hpp"

using namespace synpa;
using synpa::test::code_of;

namespace {

CategoryVector simplex(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  const double a = e(rng), b = e(rng), c = e(rng), s = a + b + c;
  return CategoryVector::from_fractions(b / s, c / s, a / s);
}

std::vector<AlignedSample> synthetic(const ModelCoefficients& m, std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
  std::vector<AlignedSample> out;
  for (std::size_t k = 0; k < n; ++k) {
    AlignedSample s{simplex(rng), simplex(rng), {}, {}};
    for (auto c : kCategories) {
      s.smt_ij[c] = forward(m[c], s.st_i[c], s.st_j[c]);
      s.smt_ji[c] = forward(m[c], s.st_j[c], s.st_i[c]);
      if (sigma > 0) {
        s.smt_ij[c] += noise(rng);
        s.smt_ji[c] += noise(rng);
      }
    }
    out.push_back(s);
  }
  return out;
}

double coef(const CategoryCoefficients& c, int k) {
  return k == 0 ? c.alpha : k == 1 ? c.beta : k == 2 ? c.gamma : c.rho;
}

double max_coef_error(const ModelCoefficients& a, const ModelCoefficients& b) {
  double worst = 0.0;
  for (auto c : kCategories) {
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(coef(a[c], k) - coef(b[c], k)));
  }
  return worst;
}

// Isolated profile whose quanta commit `per` instructions each, with the
// quantum index encoded in the frontend share so alignment is observable.
Profile iso_profile(const std::string& id, std::size_t quanta, std::uint64_t per) {
  Profile p{id, std::nullopt, {}};
  for (std::size_t q = 0; q < quanta; ++q) {
    p.records.push_back({CategoryVector::from_fractions(0.01 * static_cast<double>(q), 0.2, 0.8 - 0.01 * static_cast<double>(q)), per, 1000});
  }
  return p;
}

Profile smt_profile(const std::string& id, const std::string& with, std::size_t quanta, std::uint64_t per) {
  Profile p{id, with, {}};
  for (std::size_t q = 0; q < quanta; ++q) p.records.push_back({CategoryVector::from_fractions(0.1, 0.3, 0.6), per, 1000});
  return p;
}

}  // namespace

TEST_CASE("half-speed co-run maps SMT quantum k onto isolated quantum ceil(k/2)") {
  const auto iso_a = iso_profile("a", 10, 1000), iso_b = iso_profile("b", 10, 1000);
  const auto al = align(iso_a, iso_b, smt_profile("a", "b", 20, 500), smt_profile("b", "a", 20, 500));
  REQUIRE(al.samples.size() == 20);
  CHECK(al.dropped == 0);
  for (std::size_t k = 1; k <= 20; ++k) {
    const std::size_t iso_q = (k + 1) / 2;  // 1-based
    CHECK(al.samples[k - 1].st_i == iso_a.records[iso_q - 1].categories);
    // CPI doubles.
    CHECK(al.samples[k - 1].smt_ij.fdc == doctest::Approx(1.2));
    CHECK(al.samples[k - 1].smt_ij.sum() == doctest::Approx(2.0));
  }
}

TEST_CASE("identical speeds align one to one") {
  const auto iso_a = iso_profile("a", 6, 700), iso_b = iso_profile("b", 6, 700);
  const auto al = align(iso_a, iso_b, smt_profile("a", "b", 6, 700), smt_profile("b", "a", 6, 700));
  REQUIRE(al.samples.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(al.samples[k].st_i == iso_a.records[k].categories);
    CHECK(al.samples[k].st_j == iso_b.records[k].categories);
    CHECK(al.samples[k].smt_ji.sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("SMT quanta past isolated coverage are dropped and counted") {
  const auto iso_a = iso_profile("a", 4, 1000), iso_b = iso_profile("b", 10, 1000);
  const auto al = align(iso_a, iso_b, smt_profile("a", "b", 10, 500), smt_profile("b", "a", 10, 500));
  CHECK(al.samples.size() == 8);
  CHECK(al.dropped == 2);

  const auto none = code_of([&] {
    align(iso_a, iso_b, smt_profile("a", "b", 3, 5000), smt_profile("b", "a", 3, 500));
  });
  CHECK(none == Errc::kAlignment);
}

TEST_CASE("noise-free samples recover the generating coefficients") {
  const auto truth = ModelCoefficients::published();
  const auto samples = synthetic(truth, 10000, 0.0, 11);
  const auto r = fit(samples, kDefaultSplit, 3);
  CHECK(r.train_samples == 8000);
  CHECK(r.holdout_samples == 2000);
  CHECK(max_coef_error(r.coefficients, truth) <= 1e-6);
  for (double mse : r.mse) CHECK(mse < 1e-12);
  CHECK(r.coefficients.provenance == "fit");
}

TEST_CASE("gaussian noise shows up as holdout error and stays inside the standard-error band") {
  const double sigma = 0.05;
  const auto truth = ModelCoefficients::published();
  const auto samples = synthetic(truth, 10000, sigma, 12);
  const auto r = fit(samples, kDefaultSplit, 4);
  for (double mse : r.mse) {
    CHECK(mse >= 0.8 * sigma * sigma);
    CHECK(mse <= 1.2 * sigma * sigma);
  }

  for (auto c : kCategories) {
    std::vector<std::array<double, 4>> rows;
    std::vector<double> y;
    for (const auto& s : samples) {
      const double ci = s.st_i[c], cj = s.st_j[c];
      rows.push_back({1.0, ci, cj, ci * cj});
      y.push_back(s.smt_ij[c]);
      rows.push_back({1.0, cj, ci, ci * cj});
      y.push_back(s.smt_ji[c]);
    }
    const auto ref = oracle::ols_qr(rows, y);
    const auto got = fit_category(samples, c);
    for (int k = 0; k < 4; ++k) {
      CHECK(coef(got, k) == doctest::Approx(ref.beta[k]).epsilon(1e-8));
      const double se = sigma * std::sqrt(ref.xtx_inv_diag[k]);
      CHECK(std::abs(coef(got, k) - coef(truth[c], k)) <= 3.0 * se);
    }
  }
}

TEST_CASE("residuals are orthogonal to every regressor") {
  const auto samples = synthetic(ModelCoefficients::published(), 2000, 0.05, 13);
  for (auto c : kCategories) {
    const auto b = fit_category(samples, c);
    std::array<double, 4> dot{};
    double scale = 0.0;
    for (const auto& s : samples) {
      for (int dir = 0; dir < 2; ++dir) {
        const double x = dir ? s.st_j[c] : s.st_i[c], z = dir ? s.st_i[c] : s.st_j[c];
        const double y = dir ? s.smt_ji[c] : s.smt_ij[c];
        const double res = y - (b.alpha + b.beta * x + b.gamma * z + b.rho * x * z);
        const std::array<double, 4> row{1.0, x, z, x * z};
        for (int k = 0; k < 4; ++k) dot[k] += row[k] * res;
        scale += std::abs(y);
      }
    }
    for (double d : dot) CHECK(std::abs(d) <= 1e-9 * scale);
  }
}

TEST_CASE("fit does not depend on sample order") {
  auto samples = synthetic(ModelCoefficients::published(), 3000, 0.03, 14);
  const auto a = fit(samples, kDefaultSplit, 5);
  std::mt19937_64 rng(99);
  std::shuffle(samples.begin(), samples.end(), rng);
  const auto b = fit(samples, kDefaultSplit, 5);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.mse == b.mse);
}

TEST_CASE("estimates converge as the sample count grows") {
  const auto truth = ModelCoefficients::published();
  std::vector<double> err;
  for (std::size_t n : {100, 1000, 10000}) {
    const auto r = fit(synthetic(truth, n, 0.05, 15), kDefaultSplit, 6);
    err.push_back(max_coef_error(r.coefficients, truth));
  }
  CHECK(err[2] < err[1]);
  CHECK(err[1] < err[0]);
  CHECK(err[2] < 0.05);
}

TEST_CASE("degenerate training sets are rejected") {
  AlignedSample s{CategoryVector::from_fractions(0.2, 0.3, 0.5), CategoryVector::from_fractions(0.2, 0.3, 0.5), {}, {}};
  const std::vector<AlignedSample> same(50, s);
  CHECK(code_of([&] { fit_category(same, Category::kFrontend); }) == Errc::kRankDeficient);
  CHECK(code_of([&] { fit_category({s}, Category::kBackend); }) == Errc::kRankDeficient);
  try {
    fit_category(same, Category::kBackend);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("backend") != std::string::npos);
  }

  const auto few = synthetic(ModelCoefficients::published(), 4, 0.0, 16);
  CHECK(code_of([&] { fit(few, 1.0, 0); }) == Errc::kEmptyHoldout);
  CHECK(code_of([&] { fit(few, 0.0, 0); }) == Errc::kInvalidArgument);
  CHECK(code_of([&] { fit(few, 1.5, 0); }) == Errc::kInvalidArgument);
}

TEST_CASE("evaluate measures squared error over both directions") {
  const auto m = ModelCoefficients::published();
  auto samples = synthetic(m, 200, 0.0, 17);
  for (double mse : evaluate(m, samples)) CHECK(mse == doctest::Approx(0.0).epsilon(1e-24));
  const double eps = 0.01;
  for (auto& s : samples) {
    s.smt_ij.fe += eps;
    s.smt_ji.fe -= eps;
  }
  const auto mse = evaluate(m, samples);
  CHECK(mse[1] == doctest::Approx(eps * eps).epsilon(1e-9));
  CHECK(mse[0] == doctest::Approx(0.0).epsilon(1e-24));
  CHECK(code_of([&] { evaluate(m, {}); }) == Errc::kEmptyHoldout);
}

TEST_CASE("synthetic profile corpus survives files and trains back to its truth") {
  std::mt19937_64 rng(21);
  std::vector<SyntheticApp> apps;
  const AppClass classes[] = {AppClass::kBackendBound, AppClass::kFrontendBound, AppClass::kOther};
  for (int k = 0; k < 5; ++k) apps.push_back(random_app("app" + std::to_string(k), classes[k % 3], rng));
  SimParams p;
  const auto truth = ModelCoefficients::published();
  const auto corpus = generate_profile_corpus(apps, truth, p, 200, 21);
  CHECK(corpus.isolated.size() == 5);
  CHECK(corpus.paired.size() == 10);

  synpa::test::TempDir dir("profiles");
  auto save = [&](const std::string& name, const std::vector<Profile>& ps) {
    std::ofstream f(dir.path() / name);
    write_trace(f, profile_document(ps, p.dispatch_width, p.quantum_ms));
  };
  for (const auto& iso : corpus.isolated) save("iso-" + iso.app_id + ".csv", {iso});
  for (const auto& [a, b] : corpus.paired) save("pair-" + a.app_id + "-" + b.app_id + ".csv", {a, b});

  const auto set = load_profile_dir(dir.path());
  REQUIRE(set.isolated.size() == 5);
  REQUIRE(set.paired.size() == 10);
  for (const auto& iso : set.isolated) {
    const auto it = std::find_if(corpus.isolated.begin(), corpus.isolated.end(),
                                 [&](const Profile& q) { return q.app_id == iso.app_id; });
    REQUIRE(it != corpus.isolated.end());
    CHECK(iso.cumulative_instructions() == it->cumulative_instructions());
  }

  const auto al = align_all(set);
  const auto r = fit(al.samples, kDefaultSplit, 1);
  CHECK(max_coef_error(r.coefficients, truth) < 1e-3);

  ProfileSet missing = set;
  missing.isolated.pop_back();
  CHECK(code_of([&] { align_all(missing); }) == Errc::kAlignment);
  ProfileSet no_pairs = set;
  no_pairs.paired.clear();
  CHECK(code_of([&] { align_all(no_pairs); }) == Errc::kAlignment);
  ProfileSet dup = set;
  dup.isolated.push_back(dup.isolated.front());
  CHECK(code_of([&] { align_all(dup); }) == Errc::kInvalidConfig);
}

TEST_CASE("profile files require a mode and committed counts") {
  TraceDocument doc;
  doc.header.threads = {"a"};
  doc.rows.push_back({synthesize_sample(CategoryVector{}, 1000, 4, "a", 0), 10});
  CHECK(code_of([&] { profiles_from_document(doc); }) == Errc::kParse);
  doc.header.mode = TraceMode::kIsolated;
  CHECK(profiles_from_document(doc).at(0).records.size() == 1);
  doc.rows[0].committed_instructions = 0;
  CHECK(code_of([&] { profiles_from_document(doc); }) == Errc::kParse);
}
