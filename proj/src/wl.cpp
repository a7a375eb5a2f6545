#include "genhop/wl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace genhop {

namespace {

// Joint refinement over several graphs with one shared color space. Each
// round recodes (own color, sorted multiset of neighbor colors) through a
// dictionary whose keys are assigned in sorted order, which makes the final
// numbering independent of node labels and graph order.
struct JointColors {
  std::vector<std::vector<int>> colors;  // per graph
  int rounds_to_stable = 0;
};

JointColors joint_refine(const std::vector<const Graph*>& graphs, int max_rounds,
                         bool use_node_features) {
  using Key = std::pair<int, std::vector<int>>;
  JointColors out;
  out.colors.resize(graphs.size());

  // Initial colors: degree, optionally with the discretized feature row.
  {
    std::map<std::pair<int, std::vector<long long>>, int> dict;
    std::vector<std::vector<std::pair<int, std::vector<long long>>>> keys(graphs.size());
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      const Graph& g = *graphs[gi];
      keys[gi].resize(g.node_count());
      for (int v = 0; v < g.node_count(); ++v) {
        std::vector<long long> feat;
        if (use_node_features) {
          feat.resize(g.node_features().cols);
          for (std::size_t c = 0; c < g.node_features().cols; ++c)
            feat[c] = std::llround(g.node_features()(v, c) * 1e6);
        }
        keys[gi][v] = {g.degree(v), std::move(feat)};
        dict[keys[gi][v]] = 0;
      }
    }
    int next = 0;
    for (auto& [key, id] : dict) id = next++;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      out.colors[gi].resize(graphs[gi]->node_count());
      for (int v = 0; v < graphs[gi]->node_count(); ++v)
        out.colors[gi][v] = dict[keys[gi][v]];
    }
  }

  long long total_nodes = 0;
  for (auto* g : graphs) total_nodes += g->node_count();
  auto count_classes = [&]() {
    std::vector<int> all;
    all.reserve(total_nodes);
    for (const auto& c : out.colors) all.insert(all.end(), c.begin(), c.end());
    std::sort(all.begin(), all.end());
    return std::unique(all.begin(), all.end()) - all.begin();
  };

  long long classes = count_classes();
  for (int round = 1; round <= max_rounds; ++round) {
    std::map<Key, int> dict;
    std::vector<std::vector<Key>> keys(graphs.size());
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      const Graph& g = *graphs[gi];
      keys[gi].resize(g.node_count());
      for (int v = 0; v < g.node_count(); ++v) {
        std::vector<int> nbr;
        nbr.reserve(g.neighbors()[v].size());
        for (int u : g.neighbors()[v]) nbr.push_back(out.colors[gi][u]);
        std::sort(nbr.begin(), nbr.end());
        keys[gi][v] = {out.colors[gi][v], std::move(nbr)};
        dict[keys[gi][v]] = 0;
      }
    }
    int next = 0;
    for (auto& [key, id] : dict) id = next++;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi)
      for (int v = 0; v < graphs[gi]->node_count(); ++v)
        out.colors[gi][v] = dict[keys[gi][v]];

    long long new_classes = count_classes();
    out.rounds_to_stable = round;
    if (new_classes == classes) break;  // no class split: stable
    classes = new_classes;
  }
  return out;
}

std::vector<std::pair<int, int>> make_histogram(const std::vector<int>& colors) {
  std::map<int, int> counts;
  for (int c : colors) ++counts[c];
  return {counts.begin(), counts.end()};
}

}  // namespace

WLColoring wl_refine(const Graph& g, int max_rounds, bool use_node_features) {
  if (max_rounds < 1) throw std::invalid_argument("wl_refine: max_rounds must be >= 1");
  JointColors jc = joint_refine({&g}, max_rounds, use_node_features);
  WLColoring out;
  out.colors = std::move(jc.colors[0]);
  out.rounds_to_stable = jc.rounds_to_stable;
  out.histogram = make_histogram(out.colors);
  return out;
}

bool wl_distinguish(const Graph& g1, const Graph& g2, int max_rounds) {
  if (g1.node_count() != g2.node_count()) return true;
  JointColors jc = joint_refine({&g1, &g2}, max_rounds, false);
  return make_histogram(jc.colors[0]) != make_histogram(jc.colors[1]);
}

CycleProfile cycle_profile(const Graph& g, int K) {
  if (K < 2 || K > 8) throw std::invalid_argument("cycle_profile: K must be in [2, 8]");
  const int m = g.node_count();
  CycleProfile profile;
  profile.max_hop = K;
  profile.values = IntMatrix(m, K - 1);

  std::vector<bool> visited(m, false);
  std::vector<std::int64_t> counts(K + 1, 0);
  // Counts closed simple walks from start; each cycle of length k through
  // start is found once per orientation, hence the final halving.
  auto explore = [&](auto&& self, int start, int current, int edges_used) -> void {
    for (int u : g.neighbors()[current]) {
      if (u == start) {
        if (edges_used + 1 >= 3) counts[edges_used + 1] += 1;
      } else if (!visited[u] && edges_used + 1 < K) {
        visited[u] = true;
        self(self, start, u, edges_used + 1);
        visited[u] = false;
      }
    }
  };
  for (int v = 0; v < m; ++v) {
    std::fill(counts.begin(), counts.end(), 0);
    visited[v] = true;
    explore(explore, v, v, 0);
    visited[v] = false;
    for (int k = 3; k <= K; ++k) profile.values(v, k - 2) = counts[k] / 2;
  }
  return profile;
}

ProfileRelationReport profile_relation_search(const std::vector<Graph>& corpus, int K) {
  ProfileRelationReport report;
  report.max_hop = K;

  struct NodeRef {
    int graph, node;
  };
  using ProfileKey = std::vector<std::int64_t>;
  // cycle profile -> walk profile -> representatives
  std::map<ProfileKey, std::map<ProfileKey, std::pair<NodeRef, long long>>> by_cycle;
  std::map<ProfileKey, long long> walk_totals;
  std::map<std::pair<ProfileKey, ProfileKey>, long long> both_totals;
  std::map<ProfileKey, std::map<ProfileKey, std::pair<NodeRef, long long>>> by_walk;

  long long total_nodes = 0;
  for (int gi = 0; gi < static_cast<int>(corpus.size()); ++gi) {
    const Graph& g = corpus[gi];
    CycleProfile cp = cycle_profile(g, K);
    WalkProfile wp = closed_walk_profile(g, K);
    for (int v = 0; v < g.node_count(); ++v) {
      ProfileKey kc = cp.row(v);
      ProfileKey kw = wp.row(v);
      auto& walk_map = by_cycle[kc];
      auto it = walk_map.find(kw);
      if (it == walk_map.end())
        walk_map.emplace(kw, std::make_pair(NodeRef{gi, v}, 1));
      else
        it->second.second += 1;
      auto& cyc_map = by_walk[kw];
      auto it2 = cyc_map.find(kc);
      if (it2 == cyc_map.end())
        cyc_map.emplace(kc, std::make_pair(NodeRef{gi, v}, 1));
      else
        it2->second.second += 1;
      walk_totals[kw] += 1;
      both_totals[{kc, kw}] += 1;
      ++total_nodes;
    }
  }
  report.nodes_total = total_nodes;
  report.pairs_total = total_nodes * (total_nodes - 1) / 2;

  auto choose2 = [](long long n) { return n * (n - 1) / 2; };
  long long eq_both = 0, eq_cycle = 0, eq_walk = 0;
  for (const auto& [key, n] : both_totals) eq_both += choose2(n);
  for (const auto& [kc, walk_map] : by_cycle) {
    long long n = 0;
    for (const auto& [kw, rep] : walk_map) n += rep.second;
    eq_cycle += choose2(n);
    // Witness pairs: one per distinct (walk-profile, walk-profile) split
    // inside this cycle class.
    std::vector<std::pair<NodeRef, long long>> reps;
    for (const auto& [kw, rep] : walk_map) reps.push_back(rep);
    for (std::size_t i = 0; i < reps.size(); ++i)
      for (std::size_t j = i + 1; j < reps.size(); ++j)
        report.cycle_eq_walk_neq_witnesses.push_back(
            {reps[i].first.graph, reps[i].first.node, reps[j].first.graph, reps[j].first.node,
             reps[i].second * reps[j].second});
  }
  for (const auto& [kw, n] : walk_totals) eq_walk += choose2(n);
  for (const auto& [kw, cyc_map] : by_walk) {
    std::vector<std::pair<NodeRef, long long>> reps;
    for (const auto& [kc, rep] : cyc_map) reps.push_back(rep);
    for (std::size_t i = 0; i < reps.size(); ++i)
      for (std::size_t j = i + 1; j < reps.size(); ++j)
        report.cycle_neq_walk_eq_witnesses.push_back(
            {reps[i].first.graph, reps[i].first.node, reps[j].first.graph, reps[j].first.node,
             reps[i].second * reps[j].second});
  }

  report.cycle_eq_walk_eq = eq_both;
  report.cycle_eq_walk_neq = eq_cycle - eq_both;
  report.cycle_neq_walk_eq = eq_walk - eq_both;
  report.cycle_neq_walk_neq = report.pairs_total - eq_cycle - eq_walk + eq_both;
  return report;
}

std::string ProfileRelationReport::to_text() const {
  std::ostringstream os;
  os << "profile relation over " << nodes_total << " nodes (" << pairs_total << " pairs), K="
     << max_hop << "\n";
  os << "  cycle=  walk=   : " << cycle_eq_walk_eq << "\n";
  os << "  cycle=  walk!=  : " << cycle_eq_walk_neq << "\n";
  os << "  cycle!= walk=   : " << cycle_neq_walk_eq << "\n";
  os << "  cycle!= walk!=  : " << cycle_neq_walk_neq << "\n";
  os << "witnesses cycle= walk!= (profile-class pairs): " << cycle_eq_walk_neq_witnesses.size()
     << "\n";
  for (const auto& w : cycle_eq_walk_neq_witnesses)
    os << "  g" << w.graph1 << ":v" << w.node1 << "  vs  g" << w.graph2 << ":v" << w.node2
       << "  (" << w.pair_count << " pairs)\n";
  os << "witnesses cycle!= walk= (profile-class pairs): " << cycle_neq_walk_eq_witnesses.size()
     << "\n";
  for (const auto& w : cycle_neq_walk_eq_witnesses)
    os << "  g" << w.graph1 << ":v" << w.node1 << "  vs  g" << w.graph2 << ":v" << w.node2
       << "  (" << w.pair_count << " pairs)\n";
  return os.str();
}

std::string ProfileRelationReport::to_csv() const {
  std::ostringstream os;
  os << "cell,graph1,node1,graph2,node2,pair_count\n";
  os << "cycle_eq_walk_eq,,,,," << cycle_eq_walk_eq << "\n";
  os << "cycle_neq_walk_neq,,,,," << cycle_neq_walk_neq << "\n";
  for (const auto& w : cycle_eq_walk_neq_witnesses)
    os << "cycle_eq_walk_neq," << w.graph1 << "," << w.node1 << "," << w.graph2 << "," << w.node2
       << "," << w.pair_count << "\n";
  for (const auto& w : cycle_neq_walk_eq_witnesses)
    os << "cycle_neq_walk_eq," << w.graph1 << "," << w.node1 << "," << w.graph2 << "," << w.node2
       << "," << w.pair_count << "\n";
  return os.str();
}

namespace {

bool extend_mapping(const Graph& a, const Graph& b, const std::vector<int>& wl_a,
                    const std::vector<int>& wl_b, std::vector<int>& map_ab,
                    std::vector<int>& inv_map, int depth, const std::vector<int>& order) {
  if (depth == a.node_count()) return true;
  int v = order[depth];
  for (int u = 0; u < b.node_count(); ++u) {
    if (inv_map[u] >= 0) continue;
    if (wl_a[v] != wl_b[u]) continue;
    if (a.degree(v) != b.degree(u)) continue;
    bool ok = true;
    for (int w : a.neighbors()[v]) {
      if (map_ab[w] >= 0 && !b.has_edge(u, map_ab[w])) {
        ok = false;
        break;
      }
    }
    if (ok) {
      for (int w : b.neighbors()[u]) {
        if (inv_map[w] >= 0 && !a.has_edge(v, inv_map[w])) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) continue;
    map_ab[v] = u;
    inv_map[u] = v;
    if (extend_mapping(a, b, wl_a, wl_b, map_ab, inv_map, depth + 1, order)) return true;
    map_ab[v] = -1;
    inv_map[u] = -1;
  }
  return false;
}

}  // namespace

bool graphs_isomorphic(const Graph& a, const Graph& b) {
  if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) return false;
  std::vector<int> da, db;
  for (int v = 0; v < a.node_count(); ++v) da.push_back(a.degree(v));
  for (int v = 0; v < b.node_count(); ++v) db.push_back(b.degree(v));
  std::sort(da.begin(), da.end());
  std::sort(db.begin(), db.end());
  if (da != db) return false;
  if (wl_distinguish(a, b)) return false;

  JointColors jc = joint_refine({&a, &b}, 100, false);
  // Order vertices of a: prefer vertices adjacent to the mapped prefix,
  // highest degree first (keeps the search tree narrow).
  std::vector<int> order;
  std::vector<bool> placed(a.node_count(), false);
  while (static_cast<int>(order.size()) < a.node_count()) {
    int best = -1;
    int best_adj = -1, best_deg = -1;
    for (int v = 0; v < a.node_count(); ++v) {
      if (placed[v]) continue;
      int adj = 0;
      for (int u : a.neighbors()[v])
        if (placed[u]) ++adj;
      if (adj > best_adj || (adj == best_adj && a.degree(v) > best_deg)) {
        best = v;
        best_adj = adj;
        best_deg = a.degree(v);
      }
    }
    placed[best] = true;
    order.push_back(best);
  }

  std::vector<int> map_ab(a.node_count(), -1);
  std::vector<int> inv_map(b.node_count(), -1);
  return extend_mapping(a, b, jc.colors[0], jc.colors[1], map_ab, inv_map, 0, order);
}

}  // namespace genhop
