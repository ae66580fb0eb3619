#include "synpa/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "synpa/error.hpp"

namespace synpa {
namespace {

CategoryTriple forward_triple(const ModelCoefficients& m, const CategoryVector& a, const CategoryVector& b) {
  CategoryTriple t;
  for (auto c : kCategories) t[c] = forward(m[c], a[c], b[c]);
  return t;
}

CategoryVector vector_from_json(const nlohmann::json& j) {
  return CategoryVector::from_fractions(j.at("frontend").get<double>(), j.at("backend").get<double>(),
                                        j.at("full_dispatch").get<double>());
}

}  // namespace

const CategoryVector& SyntheticApp::phase_at(std::uint64_t progress) const {
  std::uint64_t total = 0;
  for (const auto& p : phases) total += p.instructions;
  std::uint64_t at = progress % total;
  for (const auto& p : phases) {
    if (at < p.instructions) return p.st;
    at -= p.instructions;
  }
  return phases.back().st;
}

CategoryVector SyntheticApp::mean_vector() const {
  CategoryTriple acc;
  double total = 0.0;
  for (const auto& p : phases) {
    const auto w = static_cast<double>(p.instructions);
    for (auto c : kCategories) acc[c] += w * p.st[c];
    total += w;
  }
  return CategoryVector::renormalize(acc);
}

void SyntheticApp::validate() const {
  if (id.empty()) throw Error(Errc::kInvalidConfig, "app without an id");
  if (phases.empty()) throw Error(Errc::kInvalidConfig, "app " + id + " has no phases");
  for (const auto& p : phases) {
    if (p.instructions == 0) throw Error(Errc::kInvalidConfig, "app " + id + " has an empty phase budget");
    if (!(p.st.fdc() > 0.0)) throw Error(Errc::kInvalidConfig, "app " + id + " has a phase that never dispatches");
  }
}

nlohmann::ordered_json to_json(const SyntheticApp& a) {
  nlohmann::ordered_json j;
  j["id"] = a.id;
  j["target_instructions"] = a.target_instructions;
  auto& phases = j["phases"] = nlohmann::ordered_json::array();
  for (const auto& p : a.phases) {
    phases.push_back({{"full_dispatch", p.st.fdc()},
                      {"frontend", p.st.fe()},
                      {"backend", p.st.be()},
                      {"instructions", p.instructions}});
  }
  return j;
}

SyntheticApp app_from_json(const nlohmann::json& j) {
  SyntheticApp a;
  try {
    a.id = j.at("id").get<std::string>();
    a.target_instructions = j.value("target_instructions", std::uint64_t{0});
    for (const auto& p : j.at("phases")) a.phases.push_back({vector_from_json(p), p.at("instructions").get<std::uint64_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidConfig, std::string("app definition: ") + e.what());
  }
  a.validate();
  return a;
}

std::uint64_t SimParams::quantum_cycles() const {
  const double c = std::round(quantum_ms * cycles_per_ms);
  if (!(c >= 1.0)) throw Error(Errc::kInvalidConfig, "quantum is shorter than one cycle");
  return static_cast<std::uint64_t>(c);
}

std::uint64_t SimParams::isolated_capacity(const CategoryVector& st) const {
  return static_cast<std::uint64_t>(std::floor(st.fdc() * dispatch_width * static_cast<double>(quantum_cycles())));
}

Simulator::Simulator(std::vector<SyntheticApp> apps, ModelCoefficients ground_truth, SimParams params,
                     std::uint64_t seed)
    : apps_(std::move(apps)),
      truth_(std::move(ground_truth)),
      params_(params),
      rng_(seed),
      progress_(apps_.size(), 0),
      instance_(apps_.size(), 0),
      relaunch_(apps_.size(), false) {
  for (const auto& a : apps_) {
    a.validate();
    if (a.target_instructions == 0) throw Error(Errc::kInvalidConfig, "app " + a.id + " has no target");
  }
  if (!(params_.noise_sigma >= 0.0)) throw Error(Errc::kInvalidConfig, "noise sigma must be >= 0");
}

std::vector<AppStep> Simulator::step(const std::vector<std::optional<std::size_t>>& partner) {
  const std::size_t n = apps_.size();
  if (partner.size() != n) throw Error(Errc::kInvalidArgument, "assignment does not cover every app");
  for (std::size_t i = 0; i < n; ++i) {
    if (partner[i] && (*partner[i] >= n || *partner[i] == i || partner[*partner[i]] != i)) {
      throw Error(Errc::kInvalidArgument, "assignment is not a valid pairing");
    }
    if (relaunch_[i]) {
      relaunch_[i] = false;
      progress_[i] = 0;
      ++instance_[i];
    }
  }

  std::vector<AppStep> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].st = current_st(i);
  std::normal_distribution<double> noise(0.0, params_.noise_sigma);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = out[i];
    CategoryTriple exact = partner[i] ? forward_triple(truth_, s.st, out[*partner[i]].st) : s.st.values();
    s.slowdown = exact.sum();
    for (auto c : kCategories) {
      const double e = params_.noise_sigma > 0.0 ? noise(rng_) : 0.0;
      s.observed[c] = std::max(0.0, exact[c] + e);
    }
    const auto full = params_.isolated_capacity(s.st);
    const auto capacity = static_cast<std::uint64_t>(std::floor(static_cast<double>(full) / s.slowdown));
    const auto remaining = apps_[i].target_instructions - progress_[i];
    s.committed = std::min(capacity, remaining);
    progress_[i] += s.committed;
    if (progress_[i] == apps_[i].target_instructions) {
      s.completed_at = static_cast<double>(s.committed) / static_cast<double>(capacity);
      relaunch_[i] = true;
    }
  }
  return out;
}

double isolated_completion(const SyntheticApp& app, const SimParams& p) {
  app.validate();
  std::uint64_t progress = 0;
  for (std::uint64_t q = 0;; ++q) {
    const auto cap = p.isolated_capacity(app.phase_at(progress));
    if (cap == 0) throw Error(Errc::kInvalidConfig, "app " + app.id + " makes no progress in isolation");
    const auto left = app.target_instructions - progress;
    if (cap >= left) return static_cast<double>(q) + static_cast<double>(left) / static_cast<double>(cap);
    progress += cap;
  }
}

std::uint64_t target_for_quanta(const SyntheticApp& app, const SimParams& p, std::uint64_t quanta) {
  std::uint64_t progress = 0;
  for (std::uint64_t q = 0; q < quanta; ++q) progress += p.isolated_capacity(app.phase_at(progress));
  return progress;
}

SyntheticApp random_app(std::string id, AppClass cls, std::mt19937_64& rng) {
  using U = std::uniform_real_distribution<double>;
  SyntheticApp a;
  a.id = std::move(id);
  const int phases = std::uniform_int_distribution<int>(2, 4)(rng);
  for (int k = 0; k < phases; ++k) {
    double fe = 0.0, be = 0.0;
    switch (cls) {
      case AppClass::kBackendBound:
        be = U(0.68, 0.85)(rng);
        fe = U(0.02, 0.10)(rng);
        break;
      case AppClass::kFrontendBound:
        fe = U(0.38, 0.55)(rng);
        be = U(0.10, 0.35)(rng);
        break;
      case AppClass::kOther:
        fe = U(0.05, 0.30)(rng);
        be = U(0.15, 0.55)(rng);
        break;
    }
    const auto st = CategoryVector::from_fractions(fe, be, 1.0 - fe - be);
    // Phase length expressed as 30..120 isolated quanta at the default rate.
    const double quanta = U(30.0, 120.0)(rng);
    a.phases.push_back({st, static_cast<std::uint64_t>(quanta * st.fdc() * 4 * 2.0e8)});
  }
  return a;
}

ProfileCorpus generate_profile_corpus(const std::vector<SyntheticApp>& apps, const ModelCoefficients& truth,
                                      const SimParams& p, std::uint64_t isolated_quanta, std::uint64_t seed) {
  if (apps.size() < 2) throw Error(Errc::kInvalidArgument, "a profile corpus needs at least two apps");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, p.noise_sigma);
  const auto cycles = p.quantum_cycles();

  ProfileCorpus corpus;
  for (const auto& a : apps) {
    Profile iso{a.id, std::nullopt, {}};
    std::uint64_t progress = 0;
    for (std::uint64_t q = 0; q < isolated_quanta; ++q) {
      const auto& st = a.phase_at(progress);
      const auto cap = p.isolated_capacity(st);
      if (cap == 0) throw Error(Errc::kInvalidConfig, "app " + a.id + " makes no progress in isolation");
      iso.records.push_back({st, cap, cycles});
      progress += cap;
    }
    corpus.isolated.push_back(std::move(iso));
  }

  auto cpi = [](const ProfileRecord& r) {
    return static_cast<double>(r.cycles) / static_cast<double>(r.committed_instructions);
  };
  for (std::size_t i = 0; i < apps.size(); ++i) {
    for (std::size_t j = i + 1; j < apps.size(); ++j) {
      const Profile* iso[2] = {&corpus.isolated[i], &corpus.isolated[j]};
      const std::vector<std::uint64_t> cum[2] = {iso[0]->cumulative_instructions(), iso[1]->cumulative_instructions()};
      Profile out[2] = {{apps[i].id, apps[j].id, {}}, {apps[j].id, apps[i].id, {}}};
      std::uint64_t done[2] = {0, 0};
      for (;;) {
        std::size_t start[2], end[2];
        std::uint64_t committed[2];
        for (int t = 0; t < 2; ++t) {
          start[t] = static_cast<std::size_t>(std::lower_bound(cum[t].begin(), cum[t].end(), done[t] + 1) - cum[t].begin());
        }
        if (start[0] == cum[0].size() || start[1] == cum[1].size()) break;
        bool covered = true;
        for (int t = 0; t < 2; ++t) {
          const auto& mine = iso[t]->records[start[t]];
          const auto& other = iso[1 - t]->records[start[1 - t]];
          const double s = forward_triple(truth, mine.categories, other.categories).sum();
          committed[t] = std::max<std::uint64_t>(
              1, static_cast<std::uint64_t>(std::floor(static_cast<double>(mine.committed_instructions) / s)));
          end[t] = static_cast<std::size_t>(std::lower_bound(cum[t].begin(), cum[t].end(), done[t] + committed[t]) -
                                            cum[t].begin());
          if (end[t] == cum[t].size()) covered = false;
        }
        if (!covered) break;
        for (int t = 0; t < 2; ++t) {
          const auto& mine = iso[t]->records[end[t]];
          const auto& other = iso[1 - t]->records[end[1 - t]];
          auto smt = forward_triple(truth, mine.categories, other.categories);
          if (p.noise_sigma > 0.0) {
            for (auto c : kCategories) smt[c] = std::max(0.0, smt[c] + noise(rng));
          }
          bool ok = false;
          const auto shares = CategoryVector::renormalize(smt, &ok);
          const double s = ok ? smt.sum() : 1.0;
          const auto smt_cycles = static_cast<std::uint64_t>(
              std::max(1.0, std::round(static_cast<double>(committed[t]) * s * cpi(mine))));
          out[t].records.push_back({shares, committed[t], smt_cycles});
          done[t] += committed[t];
        }
      }
      corpus.paired.emplace_back(std::move(out[0]), std::move(out[1]));
    }
  }
  return corpus;
}

}  // namespace synpa
