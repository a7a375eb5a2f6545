#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genhop/graph.hpp"

namespace genhop {

enum class AugmentStrategy {
  kRWS,        // subgraph induced by a seeded random walk
  kNodeDrop,
  kEdgeDrop,
  kFeatDropout,
  kFeatMask,
  kEdgeAttrMask,
  kIdentity,
};

AugmentStrategy augment_strategy_from_string(const std::string& name);
std::string to_string(AugmentStrategy strategy);
/// True for the topology-changing strategies (RWS, NodeDrop, EdgeDrop).
bool is_structural(AugmentStrategy strategy);

struct AugmentSpec {
  AugmentStrategy strategy = AugmentStrategy::kIdentity;
  double ratio = 0.2;
  int walk_length = 0;  // RWS only; <= 0 selects the default of m/2

  void validate() const;
};

/// Augmented graph plus the original node id of each surviving node
/// (ascending), used to align node losses across views.
struct AugmentedView {
  Graph graph;
  std::vector<int> node_origin;
};

AugmentedView augment_with_map(const Graph& g, const AugmentSpec& spec, std::uint64_t seed);

/// Deterministic per seed; never returns an empty node set.
Graph augment(const Graph& g, const AugmentSpec& spec, std::uint64_t seed);

}  // namespace genhop
