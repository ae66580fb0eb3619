#include "synpa/trainer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "synpa/error.hpp"

namespace synpa {
namespace {

constexpr double kPinvCondition = 1e12;

std::vector<double> sample_key(const AlignedSample& s) {
  return {s.st_i.fdc(), s.st_i.fe(), s.st_i.be(), s.st_j.fdc(), s.st_j.fe(), s.st_j.be(),
          s.smt_ij.fdc, s.smt_ij.fe, s.smt_ij.be, s.smt_ji.fdc, s.smt_ji.fe, s.smt_ji.be};
}

}  // namespace

CategoryCoefficients fit_category(const std::vector<AlignedSample>& train, Category cat) {
  const auto rows = static_cast<Eigen::Index>(2 * train.size());
  Eigen::MatrixXd x(rows, 4);
  Eigen::VectorXd y(rows);
  Eigen::Index r = 0;
  for (const auto& s : train) {
    const double ci = s.st_i[cat], cj = s.st_j[cat];
    x.row(r) << 1.0, ci, cj, ci * cj;
    y(r++) = s.smt_ij[cat];
    x.row(r) << 1.0, cj, ci, ci * cj;
    y(r++) = s.smt_ji[cat];
  }
  const std::string name(to_string(cat));
  if (rows < 4) throw Error(Errc::kRankDeficient, "category " + name + " has fewer than 4 observations");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);
  const double floor = smax * static_cast<double>(rows) * std::numeric_limits<double>::epsilon();
  if (!(smin > floor)) throw Error(Errc::kRankDeficient, "design matrix for category " + name + " is rank deficient");

  Eigen::Vector4d beta;
  if (smax / smin > kPinvCondition) {
    beta = svd.solve(y);
  } else {
    const Eigen::Matrix4d xtx = x.transpose() * x;
    const Eigen::Vector4d xty = x.transpose() * y;
    beta = xtx.ldlt().solve(xty);
  }
  return {beta(0), beta(1), beta(2), beta(3)};
}

namespace {

double predict_raw(const CategoryCoefficients& c, double x, double y) {
  return c.alpha + c.beta * x + c.gamma * y + c.rho * x * y;
}

}  // namespace

std::vector<std::uint64_t> Profile::cumulative_instructions() const {
  std::vector<std::uint64_t> out;
  out.reserve(records.size());
  std::uint64_t acc = 0;
  for (const auto& r : records) out.push_back(acc += r.committed_instructions);
  return out;
}

std::vector<Profile> profiles_from_document(const TraceDocument& doc) {
  const auto& h = doc.header;
  std::vector<Profile> out(h.threads.size());
  for (std::size_t t = 0; t < h.threads.size(); ++t) {
    out[t].app_id = h.threads[t];
    if (h.mode == TraceMode::kPaired) out[t].paired_with = h.threads[1 - t];
  }
  if (h.mode == TraceMode::kTrace) throw Error(Errc::kParse, "profile header lacks a mode");
  for (const auto& row : doc.rows) {
    const auto t = static_cast<std::size_t>(
        std::find(h.threads.begin(), h.threads.end(), row.sample.thread_id) - h.threads.begin());
    if (!row.committed_instructions || *row.committed_instructions == 0) {
      throw Error(Errc::kParse, "profile '" + row.sample.thread_id + "' quantum " +
                                    std::to_string(row.sample.quantum_index) + " commits no instructions");
    }
    out[t].records.push_back(
        {normalize(characterize(row.sample, h.dispatch_width)), *row.committed_instructions, row.sample.cpu_cycles});
  }
  return out;
}

TraceDocument profile_document(const std::vector<Profile>& profiles, unsigned dispatch_width, double quantum_ms) {
  if (profiles.empty() || profiles.size() > 2) throw Error(Errc::kInvalidArgument, "a profile file holds one or two profiles");
  TraceDocument doc;
  doc.header.dispatch_width = dispatch_width;
  doc.header.quantum_ms = quantum_ms;
  doc.header.mode = profiles.size() == 1 ? TraceMode::kIsolated : TraceMode::kPaired;
  std::size_t quanta = 0;
  for (const auto& p : profiles) {
    doc.header.threads.push_back(p.app_id);
    quanta = std::max(quanta, p.records.size());
  }
  for (std::size_t q = 0; q < quanta; ++q) {
    for (const auto& p : profiles) {
      if (q >= p.records.size()) continue;
      const auto& r = p.records[q];
      doc.rows.push_back({synthesize_sample(r.categories, r.cycles, dispatch_width, p.app_id, q), r.committed_instructions});
    }
  }
  return doc;
}

Alignment align(const Profile& iso_i, const Profile& iso_j, const Profile& smt_i, const Profile& smt_j) {
  const auto ci = iso_i.cumulative_instructions();
  const auto cj = iso_j.cumulative_instructions();
  const auto si = smt_i.cumulative_instructions();
  const auto sj = smt_j.cumulative_instructions();
  const std::size_t n = std::min(si.size(), sj.size());

  auto cpi = [](const ProfileRecord& r) {
    return static_cast<double>(r.cycles) / static_cast<double>(r.committed_instructions);
  };
  auto scaled = [](const CategoryVector& v, double k) {
    return CategoryTriple{v.fdc() * k, v.fe() * k, v.be() * k};
  };

  Alignment out;
  for (std::size_t k = 0; k < n; ++k) {
    const auto qi = static_cast<std::size_t>(std::lower_bound(ci.begin(), ci.end(), si[k]) - ci.begin());
    const auto qj = static_cast<std::size_t>(std::lower_bound(cj.begin(), cj.end(), sj[k]) - cj.begin());
    if (qi == ci.size() || qj == cj.size()) {
      ++out.dropped;
      continue;
    }
    const auto& ri = iso_i.records[qi];
    const auto& rj = iso_j.records[qj];
    const auto& pi = smt_i.records[k];
    const auto& pj = smt_j.records[k];
    out.samples.push_back({ri.categories, rj.categories, scaled(pi.categories, cpi(pi) / cpi(ri)),
                           scaled(pj.categories, cpi(pj) / cpi(rj))});
  }
  if (out.samples.empty()) {
    throw Error(Errc::kAlignment, "paired run " + smt_i.app_id + "+" + smt_j.app_id +
                                      " has no quanta inside isolated coverage");
  }
  return out;
}

ProfileSet load_profile_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::kIo, "'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  ProfileSet set;
  for (const auto& f : files) {
    auto doc = read_trace_file(f);
    if (doc.header.mode == TraceMode::kTrace) continue;
    auto ps = profiles_from_document(doc);
    if (ps.size() == 1) {
      set.isolated.push_back(std::move(ps[0]));
    } else {
      set.paired.emplace_back(std::move(ps[0]), std::move(ps[1]));
    }
  }
  return set;
}

Alignment align_all(const ProfileSet& set) {
  if (set.paired.empty()) throw Error(Errc::kAlignment, "no pairwise profiles found");
  std::map<std::string, const Profile*> iso;
  for (const auto& p : set.isolated) {
    if (!iso.emplace(p.app_id, &p).second) throw Error(Errc::kInvalidConfig, "duplicate isolated profile for " + p.app_id);
  }
  Alignment out;
  for (const auto& [a, b] : set.paired) {
    const auto ia = iso.find(a.app_id), ib = iso.find(b.app_id);
    if (ia == iso.end() || ib == iso.end()) {
      throw Error(Errc::kAlignment, "missing isolated profile for pair " + a.app_id + "+" + b.app_id);
    }
    auto part = align(*ia->second, *ib->second, a, b);
    out.dropped += part.dropped;
    out.samples.insert(out.samples.end(), part.samples.begin(), part.samples.end());
  }
  return out;
}

FitReport fit(const std::vector<AlignedSample>& samples, double split, std::uint64_t seed) {
  if (!(split > 0.0 && split <= 1.0)) throw Error(Errc::kInvalidArgument, "split must lie in (0, 1]");
  // Canonical order first so the result does not depend on input order.
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> keys;
  keys.reserve(samples.size());
  for (const auto& s : samples) keys.push_back(sample_key(s));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::floor(split * static_cast<double>(samples.size())));
  std::vector<AlignedSample> train, holdout;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_train ? train : holdout).push_back(samples[order[k]]);

  FitReport r;
  r.split = split;
  r.seed = seed;
  r.train_samples = train.size();
  r.holdout_samples = holdout.size();
  r.coefficients.provenance = "fit";
  for (auto cat : kCategories) r.coefficients[cat] = fit_category(train, cat);
  r.mse = evaluate(r.coefficients, holdout);
  return r;
}

std::array<double, 3> evaluate(const ModelCoefficients& m, const std::vector<AlignedSample>& holdout) {
  if (holdout.empty()) throw Error(Errc::kEmptyHoldout, "no held-out samples to evaluate");
  std::array<double, 3> mse{};
  for (auto cat : kCategories) {
    const auto& c = m[cat];
    if (!c.finite()) throw Error(Errc::kNonFiniteCoefficients, std::string(to_string(cat)));
    double acc = 0.0;
    for (const auto& s : holdout) {
      const double ci = s.st_i[cat], cj = s.st_j[cat];
      const double e1 = std::max(0.0, predict_raw(c, ci, cj)) - s.smt_ij[cat];
      const double e2 = std::max(0.0, predict_raw(c, cj, ci)) - s.smt_ji[cat];
      acc += e1 * e1 + e2 * e2;
    }
    mse[static_cast<std::size_t>(cat)] = acc / static_cast<double>(2 * holdout.size());
  }
  return mse;
}

nlohmann::ordered_json to_json(const FitReport& r) {
  nlohmann::ordered_json j;
  j["coefficients"] = to_json(r.coefficients);
  nlohmann::ordered_json mse;
  for (auto cat : kCategories) mse[std::string(to_string(cat))] = r.mse[static_cast<std::size_t>(cat)];
  j["mse"] = mse;
  j["train_samples"] = r.train_samples;
  j["holdout_samples"] = r.holdout_samples;
  j["dropped_quanta"] = r.dropped_quanta;
  j["split"] = r.split;
  j["seed"] = r.seed;
  return j;
}

}  // namespace synpa
