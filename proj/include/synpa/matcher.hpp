#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synpa/interference.hpp"

namespace synpa {

inline constexpr const char* kIdleNode = "<idle>";
inline constexpr double kIdleWeight = 1.0;

/// Complete graph over the applications competing for cores. A synthetic idle
/// node pads odd rosters; pairing with it means running alone.
class SynergyGraph {
 public:
  SynergyGraph() = default;
  /// `weights` is row-major n x n; the diagonal is ignored.
  SynergyGraph(std::vector<std::string> nodes, std::vector<double> weights, bool has_idle = false);

  std::size_t size() const { return nodes_.size(); }
  std::size_t edge_count() const { return size() * (size() - 1) / 2; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  bool has_idle() const { return has_idle_; }
  bool is_idle(std::size_t node) const { return has_idle_ && node + 1 == size(); }
  double weight(std::size_t i, std::size_t j) const { return weights_[i * size() + j]; }
  std::span<const double> weights() const { return weights_; }

 private:
  std::vector<std::string> nodes_;
  std::vector<double> weights_;
  bool has_idle_ = false;
};

using NodePair = std::pair<std::size_t, std::size_t>;

struct Matching {
  std::vector<NodePair> pairs;  // first < second, sorted
  double total_weight = 0.0;

  friend bool operator==(const Matching& a, const Matching& b) { return a.pairs == b.pairs; }
};

/// Predictions keyed by (i, j) with i < j over roster indices.
using PairPredictions = std::map<NodePair, PairPrediction>;

SynergyGraph build_graph(const std::vector<std::string>& roster, const PairPredictions& predictions);

/// Exact minimum-weight perfect matching (Edmonds' blossom algorithm). Among
/// optimal matchings the lexicographically smallest sorted pair list is
/// returned.
Matching min_weight_perfect_matching(const SynergyGraph& g);
Matching min_weight_perfect_matching(std::size_t n, std::span<const double> weights);

namespace detail {

struct WeightedEdge {
  int u;
  int v;
  double weight;
};

/// Maximum-weight matching on a general graph; returns mate[] (-1 = single).
/// With max_cardinality set, only maximum-cardinality matchings are considered.
std::vector<int> max_weight_matching(int vertex_count, const std::vector<WeightedEdge>& edges, bool max_cardinality);

}  // namespace detail
}  // namespace synpa
