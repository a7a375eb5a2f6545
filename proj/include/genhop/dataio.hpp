#pragma once

#include <string>
#include <utility>
#include <vector>

#include "genhop/graph.hpp"

namespace genhop {

struct Dataset {
  std::vector<Graph> graphs;
  std::vector<int> labels;
  std::string name;
  int feature_dim = 0;
  int class_count = 0;
};

/// Circular skip link graph: cycle edges {i, i+1 mod m} plus skip edges
/// {i, i+R mod m}. 4-regular when R is not 1 or m-1. Requires m >= 5 and
/// 2 <= R < m/2.
Graph generate_csl(int m, int skip);

/// Representative skips of the CSL isomorphism classes for skips in
/// [2, max_skip], deduplicated by circulant equivalence (R ~ R' iff
/// R' = +-R or +-R^-1 mod m) and verified by explicit isomorphism witnesses
/// within classes plus invariant separation across classes.
std::vector<int> enumerate_csl_classes(int m, int max_skip);

/// graph6 codec (bit-exact per the standard format).
Graph parse_graph6(const std::string& line);
std::string write_graph6(const Graph& g);
std::vector<Graph> read_graph6_file(const std::string& path);

/// JSON dataset schema:
/// {name, classes, graphs: [{n, edges: [[u,v]], x: [[...]]?, edge_attr: [[...]]?, y}]}
Dataset load_dataset_json(const std::string& path);
void save_dataset_json(const Dataset& dataset, const std::string& path);

/// Hard-coded non-isomorphic graph pairs:
///   decalin_bicyclopentyl, fig3_pair, fig4_pair, triangles_vs_hexagon.
std::pair<Graph, Graph> builtin_fixture(const std::string& name);
std::vector<std::string> builtin_fixture_names();

/// The two strongly regular (16,6,2,2) graphs (4x4 rook's graph and the
/// Shrikhande graph): a built-in walk-regular 1-WL-indistinguishable pair.
std::pair<Graph, Graph> sr16_pair();

/// Loads a graph6 file expected to contain the 15 SR(25,12,5,6) graphs;
/// throws if the count or the parameters do not match.
std::vector<Graph> load_sr25(const std::string& path);

}  // namespace genhop
