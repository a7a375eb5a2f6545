#include "genhop/graph.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace genhop {

Graph Graph::from_edge_list(int node_count, const std::vector<std::pair<int, int>>& pairs,
                            std::optional<Matrix> node_features,
                            std::optional<Matrix> edge_features, std::optional<int> label) {
  if (node_count < 0) throw std::invalid_argument("from_edge_list: negative node count");
  const bool has_edge_features = edge_features.has_value();

  // Canonicalize, dedup, and remember which input row each surviving edge
  // came from so raw edge features can follow it.
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> canon;
  std::vector<std::size_t> source_row;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [u, v] = pairs[i];
    if (u < 0 || u >= node_count || v < 0 || v >= node_count)
      throw std::invalid_argument("from_edge_list: endpoint out of range at pair " +
                                  std::to_string(i));
    if (u == v)
      throw std::invalid_argument("from_edge_list: self-loop at node " + std::to_string(u));
    auto e = std::minmax(u, v);
    if (seen.insert({e.first, e.second}).second) {
      canon.emplace_back(e.first, e.second);
      source_row.push_back(i);
    }
  }
  std::vector<std::size_t> order(canon.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return canon[a] < canon[b]; });

  Graph g;
  g.node_count_ = node_count;
  g.adjacency_.resize(node_count);
  g.edges_.reserve(canon.size());
  for (std::size_t i : order) {
    g.edges_.push_back(canon[i]);
    g.adjacency_[canon[i].first].push_back(canon[i].second);
    g.adjacency_[canon[i].second].push_back(canon[i].first);
  }
  for (auto& nbrs : g.adjacency_) std::sort(nbrs.begin(), nbrs.end());

  if (node_features) {
    if (static_cast<int>(node_features->rows) != node_count)
      throw std::invalid_argument("from_edge_list: node feature rows != node count");
    g.node_features_ = std::move(*node_features);
  } else {
    g.node_features_ = Matrix(node_count, 1, 1.0);
  }

  if (has_edge_features) {
    if (edge_features->rows != pairs.size())
      throw std::invalid_argument("from_edge_list: edge feature rows != edge pairs");
    Matrix ef(g.edges_.size(), edge_features->cols);
    for (std::size_t out = 0; out < order.size(); ++out) {
      std::size_t in = source_row[order[out]];
      for (std::size_t c = 0; c < ef.cols; ++c) ef(out, c) = (*edge_features)(in, c);
    }
    g.edge_features_ = std::move(ef);
  }
  g.label_ = label;
  return g;
}

bool Graph::has_edge(int u, int v) const { return edge_index(u, v) >= 0; }

int Graph::edge_index(int u, int v) const {
  if (u == v) return -1;
  auto e = std::minmax(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(e.first, e.second));
  if (it != edges_.end() && *it == std::make_pair(e.first, e.second))
    return static_cast<int>(it - edges_.begin());
  return -1;
}

IntMatrix Graph::adjacency() const {
  IntMatrix a(node_count_, node_count_);
  for (const auto& [u, v] : edges_) {
    a(u, v) = 1;
    a(v, u) = 1;
  }
  return a;
}

Graph Graph::permute(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != node_count_)
    throw std::invalid_argument("permute: size mismatch");
  std::vector<bool> hit(node_count_, false);
  for (int p : perm) {
    if (p < 0 || p >= node_count_ || hit[p]) throw std::invalid_argument("permute: not a bijection");
    hit[p] = true;
  }
  std::vector<std::pair<int, int>> new_pairs;
  new_pairs.reserve(edges_.size());
  for (const auto& [u, v] : edges_) new_pairs.emplace_back(perm[u], perm[v]);

  std::optional<Matrix> nf;
  {
    Matrix f(node_features_.rows, node_features_.cols);
    for (int v = 0; v < node_count_; ++v)
      for (std::size_t c = 0; c < f.cols; ++c) f(perm[v], c) = node_features_(v, c);
    nf = std::move(f);
  }
  // from_edge_list aligns edge features with the pair list, which is in the
  // same order as this graph's edge index.
  return from_edge_list(node_count_, new_pairs, std::move(nf), edge_features_, label_);
}

Graph Graph::with_node_features(Matrix features) const {
  if (static_cast<int>(features.rows) != node_count_)
    throw std::invalid_argument("with_node_features: row count mismatch");
  Graph g = *this;
  g.node_features_ = std::move(features);
  return g;
}

Graph Graph::with_edge_features(std::optional<Matrix> features) const {
  if (features && features->rows != edges_.size())
    throw std::invalid_argument("with_edge_features: row count mismatch");
  Graph g = *this;
  g.edge_features_ = std::move(features);
  return g;
}

Graph Graph::with_label(std::optional<int> label) const {
  Graph g = *this;
  g.label_ = label;
  return g;
}

IntMatrix adjacency_power(const Graph& g, int k) {
  if (k < 1) throw std::invalid_argument("adjacency_power: k must be >= 1");
  IntMatrix a = g.adjacency();
  IntMatrix result = a;
  for (int i = 1; i < k; ++i) result = checked_matmul(result, a);
  return result;
}

WalkProfile closed_walk_profile(const Graph& g, int K) {
  if (K < 2) throw std::invalid_argument("closed_walk_profile: K must be >= 2");
  const int m = g.node_count();
  WalkProfile profile;
  profile.max_hop = K;
  profile.values = IntMatrix(m, K - 1);
  IntMatrix a = g.adjacency();
  IntMatrix power = a;
  for (int k = 2; k <= K; ++k) {
    power = checked_matmul(power, a);
    for (int v = 0; v < m; ++v) profile.values(v, k - 2) = power(v, v);
  }
  return profile;
}

KHopWeights normalized_khop_weights(const Graph& g, int K, KHopDenominator denom) {
  if (K < 2) throw std::invalid_argument("normalized_khop_weights: K must be >= 2");
  const int m = g.node_count();
  KHopWeights w;
  w.max_hop = K;
  w.rows.resize(K - 1);
  IntMatrix a = g.adjacency();
  IntMatrix power = a;
  for (int k = 2; k <= K; ++k) {
    power = checked_matmul(power, a);
    auto& hop_rows = w.rows[k - 2];
    hop_rows.resize(m);
    for (int v = 0; v < m; ++v) {
      std::int64_t total = 0;
      if (denom == KHopDenominator::kHopNeighborhood) {
        for (int u = 0; u < m; ++u)
          if (u != v) total += power(v, u);
      } else {
        for (int u : g.neighbors()[v]) total += power(v, u);
      }
      if (total == 0) continue;  // all-zero row; keeps degenerate graphs total
      const double inv = 1.0 / static_cast<double>(total);
      for (int u = 0; u < m; ++u) {
        if (u == v || power(v, u) == 0) continue;
        hop_rows[v].emplace_back(u, static_cast<double>(power(v, u)) * inv);
      }
    }
  }
  return w;
}

}  // namespace genhop
