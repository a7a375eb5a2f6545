#include "genhop/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace genhop {

namespace {

struct BfsResult {
  std::vector<int> dist;
  std::vector<double> sigma;
  std::vector<int> order;  // nodes in nondecreasing distance
};

BfsResult bfs_shortest_paths(const Graph& g, int source) {
  const int m = g.node_count();
  BfsResult r;
  r.dist.assign(m, -1);
  r.sigma.assign(m, 0.0);
  r.order.reserve(m);
  std::queue<int> q;
  r.dist[source] = 0;
  r.sigma[source] = 1.0;
  q.push(source);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    r.order.push_back(v);
    for (int u : g.neighbors()[v]) {
      if (r.dist[u] < 0) {
        r.dist[u] = r.dist[v] + 1;
        q.push(u);
      }
      if (r.dist[u] == r.dist[v] + 1) r.sigma[u] += r.sigma[v];
    }
  }
  return r;
}

}  // namespace

std::vector<double> edge_betweenness(const Graph& g) {
  const int m = g.node_count();
  std::vector<double> eb(g.edge_count(), 0.0);
  std::vector<double> delta(m);
  for (int s = 0; s < m; ++s) {
    BfsResult r = bfs_shortest_paths(g, s);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = r.order.rbegin(); it != r.order.rend(); ++it) {
      int w = *it;
      for (int v : g.neighbors()[w]) {
        if (r.dist[v] != r.dist[w] - 1) continue;  // v precedes w on shortest paths
        double c = r.sigma[v] / r.sigma[w] * (1.0 + delta[w]);
        eb[g.edge_index(v, w)] += c;
        delta[v] += c;
      }
    }
  }
  // Each unordered pair was accumulated from both endpoints.
  for (double& x : eb) x *= 0.5;
  return eb;
}

std::vector<double> edge_closeness(const Graph& g) {
  const int m = g.node_count();
  std::vector<double> node_closeness(m, 0.0);
  for (int v = 0; v < m; ++v) {
    BfsResult r = bfs_shortest_paths(g, v);
    long long total = 0;
    int reachable = 0;
    for (int u = 0; u < m; ++u) {
      if (u == v || r.dist[u] < 0) continue;
      total += r.dist[u];
      ++reachable;
    }
    if (total > 0) node_closeness[v] = static_cast<double>(reachable) / static_cast<double>(total);
  }
  std::vector<double> ec;
  ec.reserve(g.edge_count());
  for (const auto& [u, v] : g.edges()) ec.push_back(0.5 * (node_closeness[u] + node_closeness[v]));
  return ec;
}

std::vector<double> edge_clustering_coefficient(const Graph& g) {
  std::vector<double> ecc;
  ecc.reserve(g.edge_count());
  for (const auto& [u, v] : g.edges()) {
    const auto& nu = g.neighbors()[u];
    const auto& nv = g.neighbors()[v];
    int triangles = 0;
    std::size_t i = 0, j = 0;
    while (i < nu.size() && j < nv.size()) {
      if (nu[i] == nv[j]) {
        ++triangles;
        ++i;
        ++j;
      } else if (nu[i] < nv[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    int denom = std::min(g.degree(u), g.degree(v)) - 1;
    ecc.push_back(denom > 0 ? static_cast<double>(triangles) / denom : 0.0);
  }
  return ecc;
}

EdgeCentralityTable edge_feature_table(const Graph& g) {
  EdgeCentralityTable t;
  t.eb = edge_betweenness(g);
  t.ec = edge_closeness(g);
  t.ecc = edge_clustering_coefficient(g);
  return t;
}

Matrix EdgeCentralityTable::standardized() const {
  const std::size_t e = eb.size();
  Matrix out(e, 3);
  const std::vector<double>* channels[3] = {&eb, &ec, &ecc};
  for (int c = 0; c < 3; ++c) {
    const auto& ch = *channels[c];
    double mean = 0.0;
    for (double x : ch) mean += x;
    if (e > 0) mean /= static_cast<double>(e);
    double var = 0.0;
    for (double x : ch) var += (x - mean) * (x - mean);
    if (e > 0) var /= static_cast<double>(e);
    if (var > 1e-12) {
      const double inv_std = 1.0 / std::sqrt(var);
      for (std::size_t i = 0; i < e; ++i) out(i, c) = (ch[i] - mean) * inv_std;
    } else {
      for (std::size_t i = 0; i < e; ++i) out(i, c) = ch[i];
    }
  }
  return out;
}

}  // namespace genhop
