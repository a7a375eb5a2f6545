#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "genhop/matrix.hpp"

namespace genhop {

/// Immutable undirected simple graph. Edges are stored once under a
/// canonical (min,max) ordering, sorted lexicographically; the position of
/// an edge in edges() is its dense edge index.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an edge list. Duplicate and reversed pairs are
  /// collapsed; missing node features default to an all-ones m x 1 matrix.
  /// Throws std::invalid_argument on out-of-range endpoints, self-loops, or
  /// feature row-count mismatches.
  static Graph from_edge_list(int node_count, const std::vector<std::pair<int, int>>& pairs,
                              std::optional<Matrix> node_features = std::nullopt,
                              std::optional<Matrix> edge_features = std::nullopt,
                              std::optional<int> label = std::nullopt);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<std::vector<int>>& neighbors() const { return adjacency_; }
  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }

  const Matrix& node_features() const { return node_features_; }
  const std::optional<Matrix>& edge_features_raw() const { return edge_features_; }
  std::optional<int> label() const { return label_; }

  bool has_edge(int u, int v) const;
  /// Dense index of edge {u,v}, or -1 if absent.
  int edge_index(int u, int v) const;

  /// 0/1 adjacency as an exact integer matrix.
  IntMatrix adjacency() const;

  /// Relabels nodes by a bijection perm (node v becomes perm[v]); feature
  /// rows are permuted and edge features follow their edges.
  Graph permute(const std::vector<int>& perm) const;

  /// Copy with replaced node features (topology shared semantics; used by
  /// feature-space augmentations).
  Graph with_node_features(Matrix features) const;
  Graph with_edge_features(std::optional<Matrix> features) const;
  Graph with_label(std::optional<int> label) const;

 private:
  int node_count_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
  Matrix node_features_;
  std::optional<Matrix> edge_features_;
  std::optional<int> label_;
};

/// Per-node closed-walk counts: values(v, k-2) holds the number of closed
/// walks of length k from v, for k = 2..max_hop.
struct WalkProfile {
  IntMatrix values;
  int max_hop = 0;

  std::vector<std::int64_t> row(int v) const {
    std::vector<std::int64_t> r(values.cols);
    for (std::size_t j = 0; j < values.cols; ++j) r[j] = values(v, j);
    return r;
  }
};

enum class KHopDenominator {
  kHopNeighborhood,  // normalize over the k-hop neighborhood (default)
  kOneHopNeighborhood,
};

/// Row-normalized k-hop weights. For each hop k = 2..max_hop, rows[k-2][v]
/// lists (u, weight) with weight > 0 only when walks of length k reach u != v.
struct KHopWeights {
  int max_hop = 0;
  std::vector<std::vector<std::vector<std::pair<int, double>>>> rows;

  const std::vector<std::pair<int, double>>& at(int k, int v) const { return rows[k - 2][v]; }
};

/// A^k by repeated multiplication, exact integer arithmetic. k >= 1.
IntMatrix adjacency_power(const Graph& g, int k);

/// Closed-walk profile for k = 2..K. K >= 2.
WalkProfile closed_walk_profile(const Graph& g, int K);

/// Normalized k-hop weight tables for k = 2..K. Rows whose denominator is
/// zero (isolated or unreachable-at-k nodes) are left all-zero.
KHopWeights normalized_khop_weights(const Graph& g, int K,
                                    KHopDenominator denom = KHopDenominator::kHopNeighborhood);

}  // namespace genhop
