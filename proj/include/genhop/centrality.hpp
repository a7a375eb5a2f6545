#pragma once

#include <vector>

#include "genhop/graph.hpp"

namespace genhop {

/// Raw per-edge centrality channels, aligned with the graph's edge index.
struct EdgeCentralityTable {
  std::vector<double> eb;   // edge betweenness
  std::vector<double> ec;   // edge closeness, in (0,1] for edges between reachable nodes
  std::vector<double> ecc;  // edge clustering coefficient, >= 0

  /// e x 3 matrix with each channel standardized to zero mean / unit
  /// variance when the per-graph variance exceeds 1e-12, else left raw.
  Matrix standardized() const;
};

/// Brandes edge betweenness over unordered node pairs; pairs at infinite
/// distance contribute 0. Unweighted BFS.
std::vector<double> edge_betweenness(const Graph& g);

/// EC(u,v) = (c(u)+c(v))/2 with c(w) the closeness of w normalized over its
/// reachable set; c(w) = 0 for isolated w.
std::vector<double> edge_closeness(const Graph& g);

/// ECC(u,v) = triangles(u,v) / (min(deg u, deg v) - 1), 0 when the
/// denominator is <= 0.
std::vector<double> edge_clustering_coefficient(const Graph& g);

EdgeCentralityTable edge_feature_table(const Graph& g);

}  // namespace genhop
