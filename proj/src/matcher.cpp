#include "synpa/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "synpa/error.hpp"

namespace synpa {
namespace {

// Weights are multiplied by a power of two so the largest magnitude is at most
// 2^40 and then rounded to integers. Dual updates are exact and ties between
// dyadic weights compare equal.
constexpr int kScaleBits = 40;

struct IntProblem {
  std::size_t n = 0;
  std::vector<std::int64_t> w;  // row-major

  std::int64_t at(std::size_t i, std::size_t j) const { return w[i * n + j]; }
};

// Optimal perfect matching over `nodes` (even count); returns mate per position
// in `nodes` and the integer cost.
std::pair<std::vector<int>, std::int64_t> solve_subset(const IntProblem& p, const std::vector<std::size_t>& nodes) {
  const int m = static_cast<int>(nodes.size());
  if (m == 0) return {{}, 0};
  std::int64_t maxw = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) maxw = std::max(maxw, p.at(nodes[a], nodes[b]));
  }
  std::vector<detail::WeightedEdge> edges;
  edges.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      edges.push_back({a, b, static_cast<double>(maxw + 1 - p.at(nodes[a], nodes[b]))});
    }
  }
  auto mate = detail::max_weight_matching(m, edges, true);
  std::int64_t cost = 0;
  for (int a = 0; a < m; ++a) {
    if (mate[a] < 0) throw Error(Errc::kInvalidArgument, "blossom returned an imperfect matching");
    if (a < mate[a]) cost += p.at(nodes[a], nodes[mate[a]]);
  }
  return {std::move(mate), cost};
}

}  // namespace

SynergyGraph::SynergyGraph(std::vector<std::string> nodes, std::vector<double> weights, bool has_idle)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), has_idle_(has_idle) {
  const auto n = nodes_.size();
  if (weights_.size() != n * n) throw Error(Errc::kNonCompleteGraph, "weight matrix is not n x n");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = weights_[i * n + j];
      const double b = weights_[j * n + i];
      if (!std::isfinite(a) || !std::isfinite(b) || a != b) {
        throw Error(Errc::kNonCompleteGraph,
                    "edge " + nodes_[i] + "-" + nodes_[j] + " is missing or asymmetric");
      }
    }
  }
}

SynergyGraph build_graph(const std::vector<std::string>& roster, const PairPredictions& predictions) {
  const bool odd = roster.size() % 2 == 1;
  auto nodes = roster;
  if (odd) nodes.emplace_back(kIdleNode);
  const auto n = nodes.size();
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < roster.size(); ++i) {
    for (std::size_t j = i + 1; j < roster.size(); ++j) {
      const auto it = predictions.find({i, j});
      if (it == predictions.end()) {
        throw Error(Errc::kMissingPrediction, "no prediction for " + roster[i] + "-" + roster[j]);
      }
      w[i * n + j] = w[j * n + i] = it->second.slowdown_i_given_j + it->second.slowdown_j_given_i;
    }
  }
  if (odd) {
    const auto idle = n - 1;
    for (std::size_t i = 0; i < idle; ++i) w[i * n + idle] = w[idle * n + i] = kIdleWeight;
  }
  return SynergyGraph(std::move(nodes), std::move(w), odd);
}

Matching min_weight_perfect_matching(std::size_t n, std::span<const double> weights) {
  if (weights.size() != n * n) throw Error(Errc::kNonCompleteGraph, "weight matrix is not n x n");
  if (n % 2 != 0) throw Error(Errc::kInvalidArgument, "perfect matching needs an even node count");
  Matching result;
  if (n == 0) return result;

  double maxabs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = weights[i * n + j];
      if (!std::isfinite(a) || a != weights[j * n + i]) {
        throw Error(Errc::kNonCompleteGraph, "edge " + std::to_string(i) + "-" + std::to_string(j) +
                                                 " is missing or asymmetric");
      }
      maxabs = std::max(maxabs, std::abs(a));
    }
  }
  IntProblem p{n, std::vector<std::int64_t>(n * n, 0)};
  int exp = 0;
  if (maxabs > 0.0) std::frexp(maxabs, &exp);  // maxabs < 2^exp
  const int shift = kScaleBits - exp;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      p.w[i * n + j] = std::llround(std::ldexp(weights[i * n + j], shift));
    }
  }

  std::vector<std::size_t> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = i;
  auto [mate, target] = solve_subset(p, remaining);
  // mate is positional over `remaining`; keep a node-indexed copy.
  std::vector<std::size_t> partner(n);
  for (std::size_t a = 0; a < n; ++a) partner[a] = remaining[mate[a]];

  // Lexicographic tie-break: fix the smallest open node to its smallest
  // partner that still admits an optimal completion.
  while (!remaining.empty()) {
    const auto u = remaining.front();
    for (std::size_t idx = 1; idx < remaining.size(); ++idx) {
      const auto v = remaining[idx];
      std::vector<std::size_t> rest;
      rest.reserve(remaining.size() - 2);
      for (auto x : remaining) {
        if (x != u && x != v) rest.push_back(x);
      }
      if (v == partner[u]) {
        result.pairs.emplace_back(u, v);
        target -= p.at(u, v);
        remaining = std::move(rest);
        break;
      }
      auto [sub_mate, sub_cost] = solve_subset(p, rest);
      if (p.at(u, v) + sub_cost == target) {
        result.pairs.emplace_back(u, v);
        target -= p.at(u, v);
        for (std::size_t a = 0; a < rest.size(); ++a) partner[rest[a]] = rest[sub_mate[a]];
        partner[u] = v;
        partner[v] = u;
        remaining = std::move(rest);
        break;
      }
    }
  }
  for (const auto& [a, b] : result.pairs) result.total_weight += weights[a * n + b];
  return result;
}

Matching min_weight_perfect_matching(const SynergyGraph& g) {
  return min_weight_perfect_matching(g.size(), g.weights());
}

}  // namespace synpa
