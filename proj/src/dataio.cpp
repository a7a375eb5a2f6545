#include "genhop/dataio.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "genhop/spectral.hpp"
#include "genhop/wl.hpp"

namespace genhop {

namespace {

long long mod_inverse(long long a, long long m) {
  long long old_r = a % m, r = m;
  long long old_s = 1, s = 0;
  while (r != 0) {
    const long long q = old_r / r;
    const long long next_r = old_r - q * r;
    const long long next_s = old_s - q * s;
    old_r = r;
    r = next_r;
    old_s = s;
    s = next_s;
  }
  if (old_r != 1) return -1;  // not invertible
  return ((old_s % m) + m) % m;
}

bool multiplier_isomorphic(int m, int r1, int r2) {
  Graph a = generate_csl(m, r1);
  Graph b = generate_csl(m, r2);
  if (a.edge_count() != b.edge_count()) return false;
  for (int mult = 1; mult < m; ++mult) {
    if (std::gcd(mult, m) != 1) continue;
    bool ok = true;
    for (const auto& [u, v] : a.edges()) {
      if (!b.has_edge(static_cast<int>((static_cast<long long>(mult) * u) % m),
                      static_cast<int>((static_cast<long long>(mult) * v) % m))) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

std::vector<double> rounded_spectrum(const Graph& g) {
  auto s = laplacian_spectrum(g);
  for (double& x : s) x = std::round(x * 1e6) / 1e6;
  return s;
}

}  // namespace

Graph generate_csl(int m, int skip) {
  if (m < 5) throw std::invalid_argument("generate_csl: m must be >= 5");
  if (skip < 2 || 2 * skip >= m)
    throw std::invalid_argument("generate_csl: skip must satisfy 2 <= R < m/2");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(2 * m);
  for (int i = 0; i < m; ++i) {
    edges.emplace_back(i, (i + 1) % m);
    edges.emplace_back(i, (i + skip) % m);
  }
  return Graph::from_edge_list(m, edges);
}

std::vector<int> enumerate_csl_classes(int m, int max_skip) {
  const int hi = std::min(max_skip, (m - 1) / 2);
  std::vector<int> reps;
  std::vector<int> rep_of(m, -1);
  for (int r = 2; r <= hi; ++r) {
    // orbit of r under negation and inversion mod m
    std::vector<long long> orbit{r, m - r};
    long long inv = mod_inverse(r, m);
    if (inv > 0) {
      orbit.push_back(inv);
      orbit.push_back(m - inv);
    }
    int rep = r;
    for (long long x : orbit)
      if (x >= 2 && 2 * x < m) rep = std::min<int>(rep, static_cast<int>(x));
    rep_of[r] = rep;
    if (rep == r) reps.push_back(r);
  }

  // Certify within-class isomorphism with an explicit multiplier witness.
  for (int r = 2; r <= hi; ++r) {
    if (rep_of[r] == r) continue;
    if (!multiplier_isomorphic(m, r, rep_of[r]))
      throw std::runtime_error("enumerate_csl_classes: missing isomorphism witness for skip " +
                               std::to_string(r));
  }
  // Certify cross-class distinctness: closed-walk profiles or spectra must
  // separate every representative pair (exact isomorphism as a last resort
  // at small m).
  const int K = std::min(8, m - 1);
  std::vector<std::vector<std::int64_t>> walk_rows;
  std::vector<std::vector<double>> spectra;
  for (int r : reps) {
    Graph g = generate_csl(m, r);
    walk_rows.push_back(closed_walk_profile(g, K).row(0));
    spectra.push_back(rounded_spectrum(g));
  }
  std::vector<int> merged_away;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      if (walk_rows[i] != walk_rows[j] || spectra[i] != spectra[j]) continue;
      if (m <= 13) {
        if (graphs_isomorphic(generate_csl(m, reps[i]), generate_csl(m, reps[j]))) {
          merged_away.push_back(reps[j]);
          continue;
        }
        continue;  // exact oracle says distinct
      }
      throw std::runtime_error("enumerate_csl_classes: cannot certify distinctness of skips " +
                               std::to_string(reps[i]) + " and " + std::to_string(reps[j]));
    }
  }
  if (!merged_away.empty()) {
    std::vector<int> out;
    for (int r : reps)
      if (std::find(merged_away.begin(), merged_away.end(), r) == merged_away.end())
        out.push_back(r);
    return out;
  }
  return reps;
}

namespace {

constexpr int kGraph6Offset = 63;

void append_bits(std::string& out, const std::vector<bool>& bits) {
  for (std::size_t i = 0; i < bits.size(); i += 6) {
    int value = 0;
    for (int b = 0; b < 6; ++b) {
      value <<= 1;
      if (i + b < bits.size() && bits[i + b]) value |= 1;
    }
    out.push_back(static_cast<char>(value + kGraph6Offset));
  }
}

}  // namespace

std::string write_graph6(const Graph& g) {
  const long long n = g.node_count();
  std::string out;
  if (n <= 62) {
    out.push_back(static_cast<char>(n + kGraph6Offset));
  } else if (n <= 258047) {
    out.push_back('~');
    out.push_back(static_cast<char>(((n >> 12) & 63) + kGraph6Offset));
    out.push_back(static_cast<char>(((n >> 6) & 63) + kGraph6Offset));
    out.push_back(static_cast<char>((n & 63) + kGraph6Offset));
  } else {
    throw std::invalid_argument("write_graph6: graph too large");
  }
  std::vector<bool> bits;
  bits.reserve(n * (n - 1) / 2);
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < j; ++i) bits.push_back(g.has_edge(i, j));
  append_bits(out, bits);
  return out;
}

Graph parse_graph6(const std::string& line) {
  std::string s = line;
  if (s.rfind(">>graph6<<", 0) == 0) s = s.substr(10);
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  if (s.empty()) throw std::invalid_argument("parse_graph6: empty line");
  for (char c : s)
    if (c < 63 || c > 126)
      throw std::invalid_argument("parse_graph6: character out of range 63..126");

  std::size_t pos = 0;
  long long n = 0;
  if (s[0] != '~') {
    n = s[0] - kGraph6Offset;
    pos = 1;
  } else if (s.size() >= 4 && s[1] != '~') {
    n = (static_cast<long long>(s[1] - kGraph6Offset) << 12) |
        (static_cast<long long>(s[2] - kGraph6Offset) << 6) |
        static_cast<long long>(s[3] - kGraph6Offset);
    pos = 4;
  } else if (s.size() >= 8) {
    n = 0;
    for (int i = 2; i < 8; ++i) n = (n << 6) | (s[i] - kGraph6Offset);
    pos = 8;
  } else {
    throw std::invalid_argument("parse_graph6: malformed header");
  }

  const long long bit_count = n * (n - 1) / 2;
  const std::size_t needed = static_cast<std::size_t>((bit_count + 5) / 6);
  if (s.size() - pos < needed) throw std::invalid_argument("parse_graph6: truncated bit region");
  if (s.size() - pos > needed) throw std::invalid_argument("parse_graph6: trailing characters");

  std::vector<std::pair<int, int>> edges;
  long long bit = 0;
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i < j; ++i, ++bit) {
      int value = s[pos + bit / 6] - kGraph6Offset;
      if ((value >> (5 - bit % 6)) & 1) edges.emplace_back(i, j);
    }
  }
  // padding bits must be zero
  for (long long b = bit_count; b < static_cast<long long>(needed) * 6; ++b) {
    int value = s[pos + b / 6] - kGraph6Offset;
    if ((value >> (5 - b % 6)) & 1)
      throw std::invalid_argument("parse_graph6: nonzero padding bits");
  }
  return Graph::from_edge_list(static_cast<int>(n), edges);
}

std::vector<Graph> read_graph6_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_graph6_file: cannot open " + path);
  std::vector<Graph> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_graph6(line));
  }
  return out;
}

Dataset load_dataset_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset_json: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_dataset_json: parse error in " + path + ": " + e.what());
  }
  Dataset d;
  if (!j.contains("graphs") || !j["graphs"].is_array())
    throw std::runtime_error("load_dataset_json: missing 'graphs' array");
  d.name = j.value("name", "");
  d.class_count = j.value("classes", 0);

  int index = 0;
  for (const auto& gj : j["graphs"]) {
    const std::string where = "graph " + std::to_string(index);
    if (!gj.contains("n") || !gj["n"].is_number_integer())
      throw std::runtime_error("load_dataset_json: " + where + ": missing field 'n'");
    if (!gj.contains("y"))
      throw std::runtime_error("load_dataset_json: " + where + ": missing field 'y'");
    const int n = gj["n"].get<int>();
    std::vector<std::pair<int, int>> edges;
    if (gj.contains("edges")) {
      if (!gj["edges"].is_array())
        throw std::runtime_error("load_dataset_json: " + where + ": 'edges' must be an array");
      for (const auto& e : gj["edges"]) {
        if (!e.is_array() || e.size() != 2)
          throw std::runtime_error("load_dataset_json: " + where + ": edge must be [u, v]");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
      }
    }
    std::optional<Matrix> x;
    if (gj.contains("x")) {
      const auto& xj = gj["x"];
      if (!xj.is_array() || static_cast<int>(xj.size()) != n)
        throw std::runtime_error("load_dataset_json: " + where + ": 'x' must have n rows");
      const std::size_t cols = xj.empty() ? 0 : xj[0].size();
      Matrix f(n, cols);
      for (int v = 0; v < n; ++v) {
        if (xj[v].size() != cols)
          throw std::runtime_error("load_dataset_json: " + where + ": ragged 'x' rows");
        for (std::size_t c = 0; c < cols; ++c) f(v, c) = xj[v][c].get<double>();
      }
      x = std::move(f);
    }
    std::optional<Matrix> edge_attr;
    if (gj.contains("edge_attr")) {
      const auto& ej = gj["edge_attr"];
      if (!ej.is_array() || ej.size() != edges.size())
        throw std::runtime_error("load_dataset_json: " + where +
                                 ": 'edge_attr' must have one row per edge");
      const std::size_t cols = ej.empty() ? 0 : ej[0].size();
      Matrix f(edges.size(), cols);
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if (ej[e].size() != cols)
          throw std::runtime_error("load_dataset_json: " + where + ": ragged 'edge_attr' rows");
        for (std::size_t c = 0; c < cols; ++c) f(e, c) = ej[e][c].get<double>();
      }
      edge_attr = std::move(f);
    }
    const int y = gj["y"].get<int>();
    try {
      d.graphs.push_back(
          Graph::from_edge_list(n, edges, std::move(x), std::move(edge_attr), y));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("load_dataset_json: " + where + ": " + e.what());
    }
    d.labels.push_back(y);
    ++index;
  }
  if (d.class_count == 0)
    for (int y : d.labels) d.class_count = std::max(d.class_count, y + 1);
  for (std::size_t i = 0; i < d.labels.size(); ++i)
    if (d.labels[i] < 0 || d.labels[i] >= d.class_count)
      throw std::runtime_error("load_dataset_json: graph " + std::to_string(i) +
                               ": label out of range");
  d.feature_dim = d.graphs.empty() ? 0 : static_cast<int>(d.graphs[0].node_features().cols);
  return d;
}

void save_dataset_json(const Dataset& dataset, const std::string& path) {
  nlohmann::json j;
  j["name"] = dataset.name;
  j["classes"] = dataset.class_count;
  j["graphs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
    const Graph& g = dataset.graphs[i];
    nlohmann::json gj;
    gj["n"] = g.node_count();
    gj["y"] = dataset.labels[i];
    gj["edges"] = nlohmann::json::array();
    for (const auto& [u, v] : g.edges()) gj["edges"].push_back({u, v});
    gj["x"] = nlohmann::json::array();
    for (int v = 0; v < g.node_count(); ++v) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t c = 0; c < g.node_features().cols; ++c)
        row.push_back(g.node_features()(v, c));
      gj["x"].push_back(row);
    }
    if (g.edge_features_raw()) {
      gj["edge_attr"] = nlohmann::json::array();
      for (std::size_t e = 0; e < g.edge_features_raw()->rows; ++e) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < g.edge_features_raw()->cols; ++c)
          row.push_back((*g.edge_features_raw())(e, c));
        gj["edge_attr"].push_back(row);
      }
    }
    j["graphs"].push_back(std::move(gj));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset_json: cannot open " + path);
  out << j.dump(1) << "\n";
}

std::vector<std::string> builtin_fixture_names() {
  return {"decalin_bicyclopentyl", "fig3_pair", "fig4_pair", "triangles_vs_hexagon"};
}

std::pair<Graph, Graph> builtin_fixture(const std::string& name) {
  if (name == "triangles_vs_hexagon") {
    Graph two_triangles =
        Graph::from_edge_list(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
    Graph hexagon =
        Graph::from_edge_list(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}});
    return {two_triangles, hexagon};
  }
  if (name == "decalin_bicyclopentyl") {
    // decalin: two hexagons fused along the edge (0,5)
    Graph decalin = Graph::from_edge_list(
        10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5},
             {5, 6}, {6, 7}, {7, 8}, {8, 9}, {0, 9}});
    // bicyclopentyl: two pentagons linked by the bridge edge (0,5)
    Graph bicyclopentyl = Graph::from_edge_list(
        10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4},
             {5, 6}, {6, 7}, {7, 8}, {8, 9}, {5, 9}, {0, 5}});
    return {decalin, bicyclopentyl};
  }
  if (name == "fig3_pair") {
    // two 3-regular graphs on 6 nodes: triangular prism vs K_{3,3}
    Graph prism = Graph::from_edge_list(
        6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {0, 3}, {1, 4}, {2, 5}});
    Graph k33 = Graph::from_edge_list(
        6, {{0, 3}, {0, 4}, {0, 5}, {1, 3}, {1, 4}, {1, 5}, {2, 3}, {2, 4}, {2, 5}});
    return {prism, k33};
  }
  if (name == "fig4_pair") {
    // two 2-regular triangle-free graphs on 8 nodes: 2xC4 vs C8; their
    // closed-walk profiles agree up to k=3 and first differ at k=4
    Graph two_squares = Graph::from_edge_list(
        8, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {4, 5}, {5, 6}, {6, 7}, {4, 7}});
    Graph octagon = Graph::from_edge_list(
        8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 0}});
    return {two_squares, octagon};
  }
  throw std::invalid_argument("builtin_fixture: unknown name " + name);
}

std::pair<Graph, Graph> sr16_pair() {
  auto idx = [](int i, int j) { return 4 * ((i % 4 + 4) % 4) + ((j % 4 + 4) % 4); };
  std::vector<std::pair<int, int>> rook_edges, shrik_edges;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      // rook: same row or same column
      for (int k = j + 1; k < 4; ++k) rook_edges.emplace_back(idx(i, j), idx(i, k));
      for (int k = i + 1; k < 4; ++k) rook_edges.emplace_back(idx(i, j), idx(k, j));
      // Shrikhande: Cayley graph on Z4 x Z4 with connection set
      // {+-(1,0), +-(0,1), +-(1,1)}
      shrik_edges.emplace_back(idx(i, j), idx(i + 1, j));
      shrik_edges.emplace_back(idx(i, j), idx(i, j + 1));
      shrik_edges.emplace_back(idx(i, j), idx(i + 1, j + 1));
    }
  }
  return {Graph::from_edge_list(16, rook_edges), Graph::from_edge_list(16, shrik_edges)};
}

namespace {

void check_srg(const Graph& g, int n, int k, int lambda, int mu, const std::string& where) {
  if (g.node_count() != n)
    throw std::runtime_error(where + ": expected " + std::to_string(n) + " nodes");
  for (int v = 0; v < n; ++v)
    if (g.degree(v) != k) throw std::runtime_error(where + ": graph is not " +
                                                   std::to_string(k) + "-regular");
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      int common = 0;
      for (int w : g.neighbors()[u])
        if (g.has_edge(w, v)) ++common;
      const int expect = g.has_edge(u, v) ? lambda : mu;
      if (common != expect)
        throw std::runtime_error(where + ": common-neighbor count violates SRG parameters");
    }
  }
}

}  // namespace

std::vector<Graph> load_sr25(const std::string& path) {
  std::vector<Graph> graphs = read_graph6_file(path);
  if (graphs.size() != 15)
    throw std::runtime_error("load_sr25: expected 15 graphs, got " +
                             std::to_string(graphs.size()));
  for (std::size_t i = 0; i < graphs.size(); ++i)
    check_srg(graphs[i], 25, 12, 5, 6, "load_sr25: graph " + std::to_string(i));
  return graphs;
}

}  // namespace genhop
