#include "genhop/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "genhop/rng.hpp"

namespace genhop {

AugmentStrategy augment_strategy_from_string(const std::string& name) {
  if (name == "RWS" || name == "rws") return AugmentStrategy::kRWS;
  if (name == "NodeDrop" || name == "node_drop" || name == "ND") return AugmentStrategy::kNodeDrop;
  if (name == "EdgeDrop" || name == "edge_drop" || name == "ED") return AugmentStrategy::kEdgeDrop;
  if (name == "FeatDropout" || name == "feat_dropout" || name == "FD")
    return AugmentStrategy::kFeatDropout;
  if (name == "FeatMask" || name == "feat_mask" || name == "FM") return AugmentStrategy::kFeatMask;
  if (name == "EdgeAttrMask" || name == "edge_attr_mask" || name == "EAM")
    return AugmentStrategy::kEdgeAttrMask;
  if (name == "Identity" || name == "identity") return AugmentStrategy::kIdentity;
  throw std::invalid_argument("unknown augmentation strategy: " + name);
}

std::string to_string(AugmentStrategy strategy) {
  switch (strategy) {
    case AugmentStrategy::kRWS: return "RWS";
    case AugmentStrategy::kNodeDrop: return "NodeDrop";
    case AugmentStrategy::kEdgeDrop: return "EdgeDrop";
    case AugmentStrategy::kFeatDropout: return "FeatDropout";
    case AugmentStrategy::kFeatMask: return "FeatMask";
    case AugmentStrategy::kEdgeAttrMask: return "EdgeAttrMask";
    case AugmentStrategy::kIdentity: return "Identity";
  }
  return "?";
}

bool is_structural(AugmentStrategy strategy) {
  return strategy == AugmentStrategy::kRWS || strategy == AugmentStrategy::kNodeDrop ||
         strategy == AugmentStrategy::kEdgeDrop;
}

void AugmentSpec::validate() const {
  if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("AugmentSpec: ratio must be in [0,1]");
  if (strategy == AugmentStrategy::kRWS && walk_length < 0)
    throw std::invalid_argument("AugmentSpec: RWS walk_length must be >= 1 (or 0 for default)");
}

namespace {

AugmentedView identity_view(const Graph& g) {
  AugmentedView view;
  view.graph = g;
  view.node_origin.resize(g.node_count());
  std::iota(view.node_origin.begin(), view.node_origin.end(), 0);
  return view;
}

/// Subgraph induced by the given original node ids (ascending).
AugmentedView induced_subgraph(const Graph& g, std::vector<int> keep) {
  std::sort(keep.begin(), keep.end());
  std::vector<int> new_id(g.node_count(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) new_id[keep[i]] = static_cast<int>(i);

  std::vector<std::pair<int, int>> edges;
  std::vector<std::size_t> edge_rows;
  for (int e = 0; e < g.edge_count(); ++e) {
    auto [u, v] = g.edges()[e];
    if (new_id[u] < 0 || new_id[v] < 0) continue;
    edges.emplace_back(new_id[u], new_id[v]);
    edge_rows.push_back(e);
  }

  Matrix features(keep.size(), g.node_features().cols);
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t c = 0; c < features.cols; ++c) features(i, c) = g.node_features()(keep[i], c);

  std::optional<Matrix> edge_features;
  if (g.edge_features_raw()) {
    Matrix ef(edge_rows.size(), g.edge_features_raw()->cols);
    for (std::size_t i = 0; i < edge_rows.size(); ++i)
      for (std::size_t c = 0; c < ef.cols; ++c)
        ef(i, c) = (*g.edge_features_raw())(edge_rows[i], c);
    edge_features = std::move(ef);
  }

  AugmentedView view;
  view.graph = Graph::from_edge_list(static_cast<int>(keep.size()), edges, std::move(features),
                                     std::move(edge_features), g.label());
  view.node_origin = std::move(keep);
  return view;
}

}  // namespace

AugmentedView augment_with_map(const Graph& g, const AugmentSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int m = g.node_count();
  if (m == 0 || spec.strategy == AugmentStrategy::kIdentity || spec.ratio == 0.0)
    return identity_view(g);
  Rng rng(seed);

  switch (spec.strategy) {
    case AugmentStrategy::kNodeDrop: {
      int drop = static_cast<int>(std::ceil(spec.ratio * m));
      drop = std::min(drop, m - 1);  // keep at least one node
      std::vector<int> order(m);
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      return induced_subgraph(g, {order.begin() + drop, order.end()});
    }
    case AugmentStrategy::kEdgeDrop: {
      const int e = g.edge_count();
      if (e == 0) return identity_view(g);
      const int drop = static_cast<int>(std::ceil(spec.ratio * e));
      std::vector<int> order(e);
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      std::vector<bool> dropped(e, false);
      for (int i = 0; i < drop; ++i) dropped[order[i]] = true;
      std::vector<std::pair<int, int>> edges;
      std::vector<std::size_t> edge_rows;
      for (int i = 0; i < e; ++i) {
        if (dropped[i]) continue;
        edges.push_back(g.edges()[i]);
        edge_rows.push_back(i);
      }
      std::optional<Matrix> edge_features;
      if (g.edge_features_raw()) {
        Matrix ef(edge_rows.size(), g.edge_features_raw()->cols);
        for (std::size_t i = 0; i < edge_rows.size(); ++i)
          for (std::size_t c = 0; c < ef.cols; ++c)
            ef(i, c) = (*g.edge_features_raw())(edge_rows[i], c);
        edge_features = std::move(ef);
      }
      AugmentedView view = identity_view(g);
      view.graph = Graph::from_edge_list(m, edges, g.node_features(), std::move(edge_features),
                                         g.label());
      return view;
    }
    case AugmentStrategy::kRWS: {
      const int length = spec.walk_length >= 1 ? spec.walk_length : std::max(1, m / 2);
      int current = static_cast<int>(rng.uniform_index(m));
      std::vector<bool> visited(m, false);
      visited[current] = true;
      std::vector<int> keep{current};
      for (int step = 0; step < length; ++step) {
        const auto& nbrs = g.neighbors()[current];
        if (nbrs.empty()) break;
        current = nbrs[rng.uniform_index(nbrs.size())];
        if (!visited[current]) {
          visited[current] = true;
          keep.push_back(current);
        }
      }
      return induced_subgraph(g, std::move(keep));
    }
    case AugmentStrategy::kFeatDropout: {
      Matrix features = g.node_features();
      for (double& x : features.data)
        if (rng.bernoulli(spec.ratio)) x = 0.0;
      AugmentedView view = identity_view(g);
      view.graph = g.with_node_features(std::move(features));
      return view;
    }
    case AugmentStrategy::kFeatMask: {
      Matrix features = g.node_features();
      for (std::size_t c = 0; c < features.cols; ++c) {
        if (!rng.bernoulli(spec.ratio)) continue;
        for (std::size_t v = 0; v < features.rows; ++v) features(v, c) = 0.0;
      }
      AugmentedView view = identity_view(g);
      view.graph = g.with_node_features(std::move(features));
      return view;
    }
    case AugmentStrategy::kEdgeAttrMask: {
      AugmentedView view = identity_view(g);
      if (!g.edge_features_raw()) return view;
      Matrix ef = *g.edge_features_raw();
      for (std::size_t e = 0; e < ef.rows; ++e) {
        if (!rng.bernoulli(spec.ratio)) continue;
        for (std::size_t c = 0; c < ef.cols; ++c) ef(e, c) = 0.0;
      }
      view.graph = g.with_edge_features(std::move(ef));
      return view;
    }
    case AugmentStrategy::kIdentity:
      break;
  }
  return identity_view(g);
}

Graph augment(const Graph& g, const AugmentSpec& spec, std::uint64_t seed) {
  return augment_with_map(g, spec, seed).graph;
}

}  // namespace genhop
