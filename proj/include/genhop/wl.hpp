#pragma once

#include <string>
#include <vector>

#include "genhop/graph.hpp"

namespace genhop {

/// Stable 1-WL refinement colors, canonically renumbered so that isomorphic
/// graphs yield identical histograms.
struct WLColoring {
  std::vector<int> colors;
  int rounds_to_stable = 0;
  std::vector<std::pair<int, int>> histogram;  // (color, count), sorted by color
};

/// Per-node simple-cycle counts: values(v, k-2) counts simple cycles of
/// length k through v, k = 2..max_hop (the k=2 column is always zero).
struct CycleProfile {
  IntMatrix values;
  int max_hop = 0;

  std::vector<std::int64_t> row(int v) const {
    std::vector<std::int64_t> r(values.cols);
    for (std::size_t j = 0; j < values.cols; ++j) r[j] = values(v, j);
    return r;
  }
};

WLColoring wl_refine(const Graph& g, int max_rounds = 100, bool use_node_features = false);

/// True iff stable 1-WL color histograms differ (joint refinement); node
/// counts differing implies true.
bool wl_distinguish(const Graph& g1, const Graph& g2, int max_rounds = 100);

/// DFS enumeration of simple cycles; 2 <= K <= 8 (desk scale only).
CycleProfile cycle_profile(const Graph& g, int K);

/// Tabulation of {cycle-profile equal?} x {closed-walk-profile equal?} over
/// all node pairs of a corpus. Witnesses for the off-diagonal cells are
/// reported per profile-class pair with one representative node pair each.
struct ProfileRelationReport {
  int max_hop = 0;
  long long nodes_total = 0;
  long long pairs_total = 0;
  long long cycle_eq_walk_eq = 0;
  long long cycle_eq_walk_neq = 0;
  long long cycle_neq_walk_eq = 0;
  long long cycle_neq_walk_neq = 0;

  struct Witness {
    int graph1, node1, graph2, node2;
    long long pair_count;  // node pairs represented by this profile-class pair
  };
  std::vector<Witness> cycle_eq_walk_neq_witnesses;
  std::vector<Witness> cycle_neq_walk_eq_witnesses;

  std::string to_text() const;
  std::string to_csv() const;
};

ProfileRelationReport profile_relation_search(const std::vector<Graph>& corpus, int K);

/// Exact isomorphism test by pruned backtracking; intended for small graphs
/// (test fixtures, m <= ~13).
bool graphs_isomorphic(const Graph& a, const Graph& b);

}  // namespace genhop
