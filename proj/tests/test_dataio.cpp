#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "genhop/dataio.hpp"
#include "genhop/wl.hpp"
#include "support/oracles.hpp"

using namespace genhop;
namespace gt = genhop::testing;

TEST_CASE("generate_csl basics") {
  Graph g = generate_csl(41, 2);
  CHECK(g.node_count() == 41);
  CHECK(g.edge_count() == 82);
  for (int v = 0; v < 41; ++v) CHECK(g.degree(v) == 4);

  Graph again = generate_csl(41, 5);
  CHECK(generate_csl(41, 5).edges() == again.edges());

  Graph small = generate_csl(6, 2);
  for (int v = 0; v < 6; ++v) CHECK(small.degree(v) == 4);
  CHECK(small.has_edge(0, 2));

  CHECK_THROWS_AS(generate_csl(41, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_csl(41, 21), std::invalid_argument);
}

TEST_CASE("CSL graphs are vertex-transitive for 1-WL") {
  for (int r : {2, 3, 5}) {
    WLColoring coloring = wl_refine(generate_csl(41, r));
    CHECK(coloring.histogram.size() == 1);
  }
}

TEST_CASE("enumerate_csl_classes(41, 20) has exactly 10 classes") {
  auto reps = enumerate_csl_classes(41, 20);
  CHECK(reps.size() == 10);
  // R and m-R collapse to one class
  // (m - R out of range here, but R and R^-1 do collapse: 2^-1 = 21 -> 20)
  for (std::size_t i = 0; i + 1 < reps.size(); ++i) CHECK(reps[i] < reps[i + 1]);
}

TEST_CASE("CSL class count matches brute-force isomorphism partition at m=13") {
  auto reps = enumerate_csl_classes(13, 6);
  // brute force: partition skips 2..6 by exact isomorphism
  std::vector<int> skips{2, 3, 4, 5, 6};
  std::vector<int> cls(skips.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < skips.size(); ++i) {
    if (cls[i] >= 0) continue;
    cls[i] = next++;
    for (std::size_t j = i + 1; j < skips.size(); ++j) {
      if (cls[j] >= 0) continue;
      if (graphs_isomorphic(generate_csl(13, skips[i]), generate_csl(13, skips[j])))
        cls[j] = cls[i];
    }
  }
  CHECK(static_cast<int>(reps.size()) == next);
}

TEST_CASE("graph6 singleton and round trips") {
  Graph one = Graph::from_edge_list(1, {});
  CHECK(write_graph6(one) == "@");

  Graph k2 = gt::complete_graph(2);
  Graph parsed = parse_graph6(write_graph6(k2));
  CHECK(parsed.node_count() == 2);
  CHECK(parsed.edge_count() == 1);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Graph g = gt::random_graph(7, 0.5, seed);
    Graph rt = parse_graph6(write_graph6(g));
    REQUIRE(rt.node_count() == g.node_count());
    REQUIRE(rt.edges() == g.edges());
  }
}

TEST_CASE("graph6 malformed inputs") {
  CHECK_THROWS_AS(parse_graph6(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_graph6("D"), std::invalid_argument);        // truncated bits (n=5)
  CHECK_THROWS_AS(parse_graph6("B\x01"), std::invalid_argument);    // char below 63
  CHECK_THROWS_AS(parse_graph6("@@"), std::invalid_argument);       // trailing characters
  CHECK_THROWS_AS(parse_graph6("A\x7f"), std::invalid_argument);    // char above 126
}

TEST_CASE("graph6 accepts the optional format header") {
  Graph g = gt::cycle_graph(5);
  Graph parsed = parse_graph6(">>graph6<<" + write_graph6(g));
  CHECK(parsed.edges() == g.edges());
}

TEST_CASE("dataset json round trip") {
  Dataset d;
  d.name = "toy";
  d.class_count = 2;
  Matrix x(3, 2);
  x(0, 0) = 0.25;
  x(1, 1) = -1.5;
  x(2, 0) = 3.0;
  Matrix ea(2, 1);
  ea(0, 0) = 7.5;
  ea(1, 0) = -2.25;
  d.graphs.push_back(Graph::from_edge_list(3, {{0, 1}, {1, 2}}, x, ea, 1));
  d.labels.push_back(1);
  d.graphs.push_back(gt::complete_graph(3).with_label(0));
  d.labels.push_back(0);

  const std::string path = "test_dataset_roundtrip.json";
  save_dataset_json(d, path);
  Dataset loaded = load_dataset_json(path);
  std::remove(path.c_str());

  REQUIRE(loaded.graphs.size() == 2);
  CHECK(loaded.name == "toy");
  CHECK(loaded.class_count == 2);
  CHECK(loaded.labels == d.labels);
  CHECK(loaded.graphs[0].edges() == d.graphs[0].edges());
  CHECK(loaded.graphs[0].node_features().data == d.graphs[0].node_features().data);
  CHECK(loaded.graphs[0].edge_features_raw()->data == d.graphs[0].edge_features_raw()->data);
  CHECK(loaded.graphs[1].node_features().data == d.graphs[1].node_features().data);
}

TEST_CASE("dataset json errors carry the graph index") {
  const std::string path = "test_dataset_bad.json";
  {
    std::ofstream out(path);
    out << R"({"name":"bad","classes":1,"graphs":[{"n":2,"edges":[[0,1]],"y":0},{"n":2,"edges":[[0,1]]}]})";
  }
  try {
    load_dataset_json(path);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("graph 1") != std::string::npos);
    CHECK(std::string(e.what()).find("'y'") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("builtin fixtures are non-isomorphic with matching degree sequences") {
  for (const std::string& name : builtin_fixture_names()) {
    auto [a, b] = builtin_fixture(name);
    CAPTURE(name);
    REQUIRE(a.node_count() == b.node_count());
    REQUIRE(a.edge_count() == b.edge_count());
    REQUIRE_FALSE(graphs_isomorphic(a, b));
  }
  CHECK_THROWS_AS(builtin_fixture("nope"), std::invalid_argument);
}

TEST_CASE("fixture pairs are 1-WL-indistinguishable") {
  for (const std::string& name : builtin_fixture_names()) {
    auto [a, b] = builtin_fixture(name);
    CAPTURE(name);
    CHECK_FALSE(wl_distinguish(a, b));
  }
}

TEST_CASE("decalin and bicyclopentyl fixture shapes") {
  auto [decalin, bicyclopentyl] = builtin_fixture("decalin_bicyclopentyl");
  CHECK(decalin.node_count() == 10);
  CHECK(bicyclopentyl.node_count() == 10);
  CHECK(decalin.edge_count() == 11);
  CHECK(bicyclopentyl.edge_count() == 11);
}

TEST_CASE("sr16 pair is a walk-regular 1-WL-twin pair") {
  auto [rook, shrikhande] = sr16_pair();
  CHECK(rook.node_count() == 16);
  CHECK(shrikhande.node_count() == 16);
  for (int v = 0; v < 16; ++v) {
    CHECK(rook.degree(v) == 6);
    CHECK(shrikhande.degree(v) == 6);
  }
  CHECK_FALSE(wl_distinguish(rook, shrikhande));
  // cospectral strongly regular twins: identical closed-walk profiles
  WalkProfile wr = closed_walk_profile(rook, 6);
  WalkProfile ws = closed_walk_profile(shrikhande, 6);
  for (int v = 0; v < 16; ++v) REQUIRE(wr.row(v) == ws.row(0));
  for (int v = 0; v < 16; ++v) REQUIRE(ws.row(v) == ws.row(0));
  // but they are not isomorphic: the rook graph contains K4, Shrikhande does not
  auto count_k4 = [](const Graph& g) {
    int count = 0;
    for (int a = 0; a < g.node_count(); ++a)
      for (int b = a + 1; b < g.node_count(); ++b)
        for (int c = b + 1; c < g.node_count(); ++c)
          for (int d = c + 1; d < g.node_count(); ++d)
            if (g.has_edge(a, b) && g.has_edge(a, c) && g.has_edge(a, d) && g.has_edge(b, c) &&
                g.has_edge(b, d) && g.has_edge(c, d))
              ++count;
    return count;
  };
  CHECK(count_k4(rook) > 0);
  CHECK(count_k4(shrikhande) == 0);
}

TEST_CASE("load_sr25 validates counts and parameters") {
  // a file with the right format but wrong content must be rejected
  const std::string path = "test_sr25_bad.g6";
  {
    std::ofstream out(path);
    for (int i = 0; i < 15; ++i) out << write_graph6(gt::cycle_graph(25)) << "\n";
  }
  CHECK_THROWS_AS(load_sr25(path), std::runtime_error);
  std::remove(path.c_str());
}
