#include "synpa/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "synpa/error.hpp"

namespace synpa {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Assignment random_assignment(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> slots(n + n % 2);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  Assignment a(n);
  for (std::size_t k = 0; k + 1 < slots.size(); k += 2) {
    const auto x = slots[k], y = slots[k + 1];
    if (x < n && y < n) {
      a[x] = y;
      a[y] = x;
    }
  }
  return a;
}

Assignment static_assignment(std::size_t n) {
  Assignment a(n);
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    a[k] = k + 1;
    a[k + 1] = k;
  }
  return a;
}

CategoryVector uniform_vector() {
  return CategoryVector::renormalize({1.0, 1.0, 1.0});
}

CategoryVector blend(const CategoryVector& v, double w) {
  const auto u = uniform_vector();
  CategoryTriple t;
  for (auto c : kCategories) t[c] = w * v[c] + (1.0 - w) * u[c];
  return CategoryVector::renormalize(t);
}

ordered_json triple_json(const CategoryTriple& t) {
  return {{"full_dispatch", t.fdc}, {"frontend", t.fe}, {"backend", t.be}};
}

CategoryTriple triple_from(const json& j) {
  return {j.at("full_dispatch").get<double>(), j.at("frontend").get<double>(), j.at("backend").get<double>()};
}

CategoryVector vector_from(const json& j) {
  const auto t = triple_from(j);
  return CategoryVector::from_fractions(t.fe, t.be, t.fdc);
}

ordered_json pairs_json(const std::vector<std::pair<std::string, std::string>>& ps) {
  auto a = ordered_json::array();
  for (const auto& [x, y] : ps) a.push_back({x, y});
  return a;
}

std::vector<std::pair<std::string, std::string>> pairs_from(const json& j) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : j) out.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
  return out;
}

template <class T>
ordered_json opt_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::kSynpa: return "synpa";
    case Policy::kRandom: return "random";
    case Policy::kStatic: return "static";
  }
  return "?";
}

Policy parse_policy(std::string_view name) {
  if (name == "synpa") return Policy::kSynpa;
  if (name == "random") return Policy::kRandom;
  if (name == "static") return Policy::kStatic;
  throw Error(Errc::kInvalidArgument, "unknown policy '" + std::string(name) + "'");
}

std::string_view to_string(ProviderKind k) { return k == ProviderKind::kTrace ? "trace" : "simulator"; }

void EngineConfig::validate() const {
  if (!(quantum_ms > 0.0)) throw Error(Errc::kInvalidConfig, "quantum_ms must be > 0");
  if (dispatch_width == 0) throw Error(Errc::kInvalidConfig, "dispatch_width must be >= 1");
  if (!(aging_decay >= 0.0 && aging_decay <= 1.0)) throw Error(Errc::kInvalidConfig, "aging_decay must lie in [0, 1]");
  for (auto c : kCategories) {
    if (!coefficients[c].finite()) throw Error(Errc::kNonFiniteCoefficients, std::string(to_string(c)));
  }
}

AllocationAck RecordingAllocator::apply(const Assignment& a) {
  AllocationAck ack;
  if (first_ || current_.size() != a.size()) {
    ack.migrations = a.size();
    ack.no_migration = false;
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) ack.migrations += current_[i] != a[i];
    ack.no_migration = ack.migrations == 0;
  }
  first_ = false;
  current_ = a;
  return ack;
}

AllocationAck OsAllocator::apply(const Assignment&) {
  throw Error(Errc::kUnsupportedPlatform, "OS thread placement is not available on this platform");
}

AllocationAck apply_assignment(Allocator& allocator, const Assignment& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && (*a[i] >= a.size() || *a[i] == i || a[*a[i]] != i)) {
      throw Error(Errc::kInvalidArgument, "assignment is not a valid pairing");
    }
  }
  return allocator.apply(a);
}

SimEnvironment::SimEnvironment(Simulator sim) : sim_(std::move(sim)), finished_once_(sim_.size(), false) {
  for (std::size_t i = 0; i < sim_.size(); ++i) roster_.push_back(sim_.app(i).id);
}

std::optional<std::vector<Observation>> SimEnvironment::execute(std::uint64_t, const Assignment& a) {
  if (std::all_of(finished_once_.begin(), finished_once_.end(), [](bool b) { return b; })) return std::nullopt;
  const auto steps = sim_.step(a);
  std::vector<Observation> out(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    auto& o = out[i];
    o.observed = steps[i].observed;
    o.committed = steps[i].committed;
    o.instance = sim_.instance(i);
    o.slowdown = steps[i].slowdown;
    o.truth = steps[i].st;
    o.completed_at = steps[i].completed_at;
    if (o.completed_at) finished_once_[i] = true;
  }
  return out;
}

void SimEnvironment::annotate(ScheduleLog& log) const {
  log.quantum_cycles = sim_.params().quantum_cycles();
  for (std::size_t i = 0; i < log.apps.size(); ++i) {
    log.apps[i].target_instructions = sim_.app(i).target_instructions;
    log.apps[i].isolated_completion = isolated_completion(sim_.app(i), sim_.params());
  }
}

ReplayEnvironment::ReplayEnvironment(CounterProvider& provider) : provider_(provider) {}

std::optional<std::vector<Observation>> ReplayEnvironment::execute(std::uint64_t q, const Assignment&) {
  const auto samples = provider_.poll(q);
  if (!samples) return std::nullopt;
  const auto& roster = provider_.header().threads;
  std::vector<Observation> out(roster.size());
  for (auto& o : out) o.live = false;
  for (const auto& s : *samples) {
    const auto i = static_cast<std::size_t>(std::find(roster.begin(), roster.end(), s.thread_id) - roster.begin());
    auto& o = out[i];
    o.live = true;
    o.observed = normalize(characterize(s, provider_.header().dispatch_width)).values();
    o.committed = s.inst_spec;
  }
  return out;
}

Assignment assignment_from_matching(const Matching& m, std::size_t roster_size) {
  Assignment a(roster_size);
  for (const auto& [x, y] : m.pairs) {
    if (x < roster_size && y < roster_size) {
      a[x] = y;
      a[y] = x;
    }
  }
  return a;
}

std::vector<std::pair<std::string, std::string>> named_pairs(const Assignment& a,
                                                             const std::vector<std::string>& roster) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i]) {
      out.emplace_back(roster[i], kIdleNode);
    } else if (i < *a[i]) {
      out.emplace_back(roster[i], roster[*a[i]]);
    }
  }
  return out;
}

ScheduleLog run(const EngineConfig& config, Environment& env, Allocator& allocator) {
  config.validate();
  const auto& roster = env.roster();
  const std::size_t n = roster.size();
  if (n < 2) throw Error(Errc::kInvalidConfig, "roster needs at least two apps");
  if (!config.roster.empty() && config.roster != roster) {
    throw Error(Errc::kInvalidConfig, "configured roster does not match the provider's threads");
  }

  ScheduleLog log;
  log.policy = config.policy;
  log.provider = env.kind();
  log.seed = config.seed;
  log.quantum_ms = config.quantum_ms;
  log.dispatch_width = config.dispatch_width;
  log.roster = roster;
  log.coefficients = config.coefficients;
  log.apps.resize(n);
  for (std::size_t i = 0; i < n; ++i) log.apps[i].id = roster[i];

  std::mt19937_64 rng(config.seed);
  Assignment current = config.policy == Policy::kStatic ? static_assignment(n) : random_assignment(n, rng);
  apply_assignment(allocator, current);

  std::vector<std::optional<CategoryVector>> last_good(n);
  std::vector<std::uint64_t> stale(n, 0);
  std::vector<std::uint64_t> instance(n, 0);

  bool exhausted = false;
  for (std::uint64_t q = 0; q < config.max_quanta; ++q) {
    const auto obs = env.execute(q, current);
    if (!obs) {
      exhausted = true;
      break;
    }
    QuantumRecord rec;
    rec.quantum = q;
    rec.assignment = named_pairs(current, roster);
    rec.apps.resize(n);

    std::vector<CategoryVector> estimate(n);
    std::vector<bool> degraded(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = (*obs)[i];
      if (!o.live) continue;
      if (o.instance != instance[i]) {
        instance[i] = o.instance;
        last_good[i].reset();
        stale[i] = 0;
      }
      const auto j = current[i];
      if (j && (*obs)[*j].live) {
        if (*j < i) continue;
        const auto r = invert(config.coefficients, o.observed, (*obs)[*j].observed);
        estimate[i] = r.st_i;
        estimate[*j] = r.st_j;
        degraded[i] = degraded[*j] = r.degraded;
      } else {
        bool ok = false;
        estimate[i] = CategoryVector::renormalize(o.observed, &ok);
        degraded[i] = !ok;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*obs)[i].live) continue;
      if (!degraded[i]) {
        last_good[i] = estimate[i];
        stale[i] = 0;
      } else if (last_good[i]) {
        ++stale[i];
        estimate[i] = blend(*last_good[i], std::pow(config.aging_decay, static_cast<double>(stale[i])));
      }
    }

    Assignment next = current;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < n; ++i) {
      if ((*obs)[i].live) live.push_back(i);
    }
    if (config.policy == Policy::kSynpa && live.size() >= 2) {
      std::vector<std::string> names;
      for (auto i : live) names.push_back(roster[i]);
      PairPredictions preds;
      for (std::size_t a = 0; a < live.size(); ++a) {
        for (std::size_t b = a + 1; b < live.size(); ++b) {
          preds.emplace(NodePair{a, b}, predict_pair(config.coefficients, estimate[live[a]], estimate[live[b]]));
        }
      }
      const auto m = min_weight_perfect_matching(build_graph(names, preds));
      const auto local = assignment_from_matching(m, live.size());
      next.assign(n, std::nullopt);
      for (std::size_t a = 0; a < live.size(); ++a) {
        if (local[a]) next[live[a]] = live[*local[a]];
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (next[i] && !(*obs)[*next[i]].live) next[i].reset();
      }
    }
    const auto ack = apply_assignment(allocator, next);

    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = (*obs)[i];
      auto& r = rec.apps[i];
      r.id = roster[i];
      r.live = o.live;
      r.instance = o.instance;
      r.observed = o.observed;
      r.estimate = estimate[i];
      r.degraded = degraded[i];
      r.committed = o.committed;
      r.slowdown = o.slowdown;
      r.truth = o.truth;
      r.completed = o.completed_at.has_value();
      auto& s = log.apps[i];
      s.relaunches = std::max(s.relaunches, o.instance);
      if (o.completed_at && !s.completion) s.completion = static_cast<double>(q) + *o.completed_at;
    }
    rec.decision = named_pairs(next, roster);
    rec.migrations = ack.migrations;
    rec.no_migration = ack.no_migration;
    log.quanta.push_back(std::move(rec));
    current = std::move(next);
  }
  env.annotate(log);
  if (env.kind() == ProviderKind::kSimulator) {
    log.complete = std::all_of(log.apps.begin(), log.apps.end(), [](const AppSummary& a) { return a.completion.has_value(); });
  } else {
    log.complete = exhausted;
  }
  return log;
}

ScheduleLog run_simulation(const EngineConfig& config, const std::vector<SyntheticApp>& apps,
                           const ModelCoefficients& ground_truth, const SimParams& params) {
  SimEnvironment env(Simulator(apps, ground_truth, params, config.seed ^ 0x9e3779b97f4a7c15ULL));
  RecordingAllocator alloc;
  return run(config, env, alloc);
}

void write_log(std::ostream& out, const ScheduleLog& log) {
  ordered_json h;
  h["type"] = "header";
  h["version"] = ScheduleLog::kVersion;
  h["workload"] = log.workload;
  h["policy"] = to_string(log.policy);
  h["provider"] = to_string(log.provider);
  h["seed"] = log.seed;
  h["quantum_ms"] = log.quantum_ms;
  h["dispatch_width"] = log.dispatch_width;
  h["quantum_cycles"] = log.quantum_cycles;
  h["roster"] = log.roster;
  h["coefficients"] = to_json(log.coefficients);
  out << h.dump() << '\n';

  for (const auto& q : log.quanta) {
    ordered_json j;
    j["type"] = "quantum";
    j["quantum"] = q.quantum;
    j["assignment"] = pairs_json(q.assignment);
    j["decision"] = pairs_json(q.decision);
    j["migrations"] = q.migrations;
    j["no_migration"] = q.no_migration;
    auto& apps = j["apps"] = ordered_json::array();
    for (const auto& a : q.apps) {
      ordered_json r;
      r["id"] = a.id;
      r["instance"] = a.instance;
      r["live"] = a.live;
      r["observed"] = triple_json(a.observed);
      r["estimate"] = triple_json(a.estimate);
      r["degraded"] = a.degraded;
      r["committed"] = a.committed;
      r["slowdown"] = opt_json(a.slowdown);
      r["truth"] = a.truth ? triple_json(*a.truth) : ordered_json(nullptr);
      r["completed"] = a.completed;
      apps.push_back(std::move(r));
    }
    out << j.dump() << '\n';
  }

  ordered_json s;
  s["type"] = "summary";
  s["quanta"] = log.quanta.size();
  s["complete"] = log.complete;
  auto& apps = s["apps"] = ordered_json::array();
  for (const auto& a : log.apps) {
    apps.push_back({{"id", a.id},
                    {"completion", opt_json(a.completion)},
                    {"isolated_completion", opt_json(a.isolated_completion)},
                    {"target_instructions", a.target_instructions},
                    {"relaunches", a.relaunches}});
  }
  out << s.dump() << '\n';
}

ScheduleLog read_log(std::istream& in) {
  ScheduleLog log;
  std::string line;
  std::size_t lineno = 0;
  bool header = false, summary = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        if (j.at("version").get<int>() != ScheduleLog::kVersion) {
          throw Error(Errc::kSchemaVersion, "schedule log version " + j.at("version").dump());
        }
        log.workload = j.value("workload", std::string());
        log.policy = parse_policy(j.at("policy").get<std::string>());
        log.provider = j.at("provider").get<std::string>() == "trace" ? ProviderKind::kTrace : ProviderKind::kSimulator;
        log.seed = j.at("seed").get<std::uint64_t>();
        log.quantum_ms = j.at("quantum_ms").get<double>();
        log.dispatch_width = j.at("dispatch_width").get<unsigned>();
        log.quantum_cycles = j.at("quantum_cycles").get<std::uint64_t>();
        log.roster = j.at("roster").get<std::vector<std::string>>();
        log.coefficients = coefficients_from_json(j.at("coefficients"));
        header = true;
      } else if (type == "quantum") {
        QuantumRecord q;
        q.quantum = j.at("quantum").get<std::uint64_t>();
        q.assignment = pairs_from(j.at("assignment"));
        q.decision = pairs_from(j.at("decision"));
        q.migrations = j.at("migrations").get<std::size_t>();
        q.no_migration = j.at("no_migration").get<bool>();
        for (const auto& r : j.at("apps")) {
          AppQuantumRecord a;
          a.id = r.at("id").get<std::string>();
          a.instance = r.at("instance").get<std::uint64_t>();
          a.live = r.at("live").get<bool>();
          a.observed = triple_from(r.at("observed"));
          a.estimate = vector_from(r.at("estimate"));
          a.degraded = r.at("degraded").get<bool>();
          a.committed = r.at("committed").get<std::uint64_t>();
          a.slowdown = opt_double(r, "slowdown");
          if (!r.at("truth").is_null()) a.truth = vector_from(r.at("truth"));
          a.completed = r.at("completed").get<bool>();
          q.apps.push_back(std::move(a));
        }
        log.quanta.push_back(std::move(q));
      } else if (type == "summary") {
        log.complete = j.at("complete").get<bool>();
        for (const auto& r : j.at("apps")) {
          AppSummary a;
          a.id = r.at("id").get<std::string>();
          a.completion = opt_double(r, "completion");
          a.isolated_completion = opt_double(r, "isolated_completion");
          a.target_instructions = r.at("target_instructions").get<std::uint64_t>();
          a.relaunches = r.at("relaunches").get<std::uint64_t>();
          log.apps.push_back(std::move(a));
        }
        summary = true;
      } else {
        throw Error(Errc::kParse, "unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw Error(Errc::kParse, "schedule log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header) throw Error(Errc::kParse, "schedule log has no header");
  if (!summary) throw Error(Errc::kIncompleteLog, "schedule log has no summary record");
  return log;
}

ScheduleLog read_log_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open schedule log '" + path.string() + "'");
  return read_log(in);
}

void write_log_file(const std::filesystem::path& path, const ScheduleLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write schedule log '" + path.string() + "'");
  write_log(out, log);
}

}  // namespace synpa
