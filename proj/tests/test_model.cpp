#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "genhop/dataio.hpp"
#include "genhop/model.hpp"
#include "genhop/wl.hpp"
#include "support/oracles.hpp"

using namespace genhop;
namespace gt = genhop::testing;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.layers = 1;
  c.hops = 2;
  c.hidden_dim = 3;
  c.pe_dim = 2;
  c.mlp_depth = 1;
  c.node_feature_dim = 1;
  return c;
}

double linf_dist(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    d = std::max(d, std::abs(a.data[i] - b.data[i]));
  return d;
}

double l2_dist(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    d += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return std::sqrt(d);
}

}  // namespace

TEST_CASE("init_params is deterministic and epsilon starts at zero") {
  ModelConfig c;
  c.hidden_dim = 8;
  c.layers = 2;
  ModelParams a = init_params(c, 7);
  ModelParams b = init_params(c, 7);
  REQUIRE(a.weights.size() == b.weights.size());
  for (const auto& [name, m] : a.weights) REQUIRE(m.data == b.weights.at(name).data);
  ModelParams other = init_params(c, 8);
  CHECK(a.weights.at("input.node_proj.w").data != other.weights.at("input.node_proj.w").data);

  CHECK(a.weights.at("struct.l0.eps")(0, 0) == 0.0);
  CHECK(a.weights.at("pos.l1.eps")(0, 0) == 0.0);
}

TEST_CASE("init_params shapes match the config") {
  ModelConfig c;
  c.hidden_dim = 5;
  c.layers = 3;
  c.pe_dim = 4;
  c.node_feature_dim = 2;
  c.edge_attr_dim = 6;
  ModelParams p = init_params(c, 1);
  CHECK(p.weights.at("input.node_proj.w").rows == 2);
  CHECK(p.weights.at("input.node_proj.w").cols == 5);
  CHECK(p.weights.at("input.pos_proj.w").rows == 4);
  CHECK(p.weights.at("edge_c.l0.0.w").rows == 3);
  CHECK(p.weights.at("edge_b.l2.0.w").rows == 6);
  CHECK(p.weights.at("head.graph.struct.0.w").rows == 15);  // layers * d
  CHECK(p.weights.at("struct.l1.mlp0.bn.gamma").cols == 5);
  CHECK(p.state.at("struct.l1.mlp0.bn.var")(0, 0) == 1.0);
}

TEST_CASE("genhop layer preactivation on K3 expands by hand") {
  // scalar feature 1 per node, eps=0, K=2, raw closed-walk counts, no edge
  // embeddings: 1 + 2 + 2 + 1 = 6 per node
  ModelConfig c = tiny_config();
  c.log_scale_closed_walks = false;
  c.use_edge_centrality = false;
  c.use_raw_edge_features = false;

  GraphFeatures f = featurize(gt::complete_graph(3), c);
  ad::Tape tape;
  GraphOperators ops = make_graph_operators(tape, f, c);
  ad::Var h = tape.constant(Matrix(3, 1, 1.0));
  ad::Var eps0 = tape.constant_scalar(0.0);
  ad::Var agg = genhop_layer_preactivation(tape, ops, h, eps0, std::nullopt, c);
  for (int v = 0; v < 3; ++v) CHECK(tape.value(agg)(v, 0) == doctest::Approx(6.0).epsilon(1e-12));

  // eps=1 adds one extra copy of h
  ad::Var eps1 = tape.constant_scalar(1.0);
  ad::Var agg1 = genhop_layer_preactivation(tape, ops, h, eps1, std::nullopt, c);
  for (int v = 0; v < 3; ++v) CHECK(tape.value(agg1)(v, 0) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("isolated node passes through the aggregation untouched") {
  ModelConfig c = tiny_config();
  c.use_edge_centrality = false;
  Graph iso = Graph::from_edge_list(1, {});
  GraphFeatures f = featurize(iso, c);
  ad::Tape tape;
  GraphOperators ops = make_graph_operators(tape, f, c);
  Matrix h0(1, 3);
  h0(0, 0) = 1.5;
  h0(0, 1) = -2.0;
  h0(0, 2) = 0.25;
  ad::Var agg = genhop_layer_preactivation(tape, ops, tape.constant(h0),
                                           tape.constant_scalar(0.0), std::nullopt, c);
  CHECK(tape.value(agg).data == h0.data);
  ad::Var pos = pos_layer_preactivation(tape, ops, tape.constant(h0), tape.constant_scalar(0.0),
                                        std::nullopt, c);
  CHECK(tape.value(pos).data == h0.data);
}

TEST_CASE("one layer with identity MLP reduces to GIN aggregation") {
  ModelConfig c;
  c.layers = 1;
  c.hops = 2;
  c.hidden_dim = 3;
  c.node_feature_dim = 3;
  c.mlp_depth = 2;
  c.use_closed_walks = false;
  c.use_high_order = false;
  c.use_edge_centrality = false;
  c.use_raw_edge_features = false;
  c.use_positional = false;
  c.use_batch_norm = false;

  ModelParams params = init_params(c, 3);
  auto identity = [](std::size_t n) {
    Matrix eye(n, n);
    for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
    return eye;
  };
  params.weights.at("input.node_proj.w") = identity(3);
  params.weights.at("struct.l0.mlp0.w") = identity(3);
  params.weights.at("struct.l0.mlp1.w") = identity(3);
  const double eps_value = 0.25;
  params.weights.at("struct.l0.eps") = Matrix::scalar(eps_value);

  Matrix x(4, 3);
  Rng rng(11);
  for (double& v : x.data) v = rng.uniform(0.1, 2.0);  // positive: relu transparent
  Graph g = Graph::from_edge_list(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, x);

  GraphFeatures f = featurize(g, c);
  ad::Tape tape;
  ParamVars pv = params_to_tape(tape, params, false);
  GraphOperators ops = make_graph_operators(tape, f, c);
  ad::Var h0 = tape.linear(tape.constant(x), pv.at("input.node_proj.w"),
                           pv.at("input.node_proj.b"));
  ad::Var agg = genhop_layer_preactivation(tape, ops, h0, pv.at("struct.l0.eps"), std::nullopt, c);
  // direct GIN-style aggregation: (1+eps) h_v + sum_u h_u
  for (int v = 0; v < 4; ++v) {
    for (std::size_t col = 0; col < 3; ++col) {
      double expect = (1.0 + eps_value) * x(v, col);
      for (int u : g.neighbors()[v]) expect += x(u, col);
      REQUIRE(tape.value(agg)(v, col) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("structural-branch graph embedding is permutation-invariant") {
  ModelConfig c;
  c.layers = 2;
  c.hops = 3;
  c.hidden_dim = 8;
  c.use_positional = false;
  ModelParams params = init_params(c, 5);
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Graph g = gt::random_graph(9, 0.4, seed);
    auto perm = gt::random_permutation(9, seed + 77);
    GraphEmbeddingOutput a = forward_embed(g, params, c, RunMode::kEval, 0);
    GraphEmbeddingOutput b = forward_embed(g.permute(perm), params, c, RunMode::kEval, 0);
    REQUIRE(linf_dist(a.graph_embedding, b.graph_embedding) <= 1e-8);
    // node embeddings are permutation-equivariant
    for (int v = 0; v < 9; ++v)
      for (int col = 0; col < 8; ++col)
        REQUIRE(std::abs(a.node_struct(v, col) - b.node_struct(perm[v], col)) <= 1e-8);
  }
}

TEST_CASE("full embedding is permutation-invariant on discrete-WL simple-spectrum graphs") {
  ModelConfig c;
  c.layers = 2;
  c.hops = 3;
  c.hidden_dim = 8;
  c.pe_dim = 4;
  ModelParams params = init_params(c, 6);
  int tested = 0;
  for (std::uint64_t seed = 0; tested < 8 && seed < 60; ++seed) {
    Graph g = gt::random_graph(9, 0.4, seed * 17 + 3);
    if (!gt::is_connected(g)) continue;
    if (wl_refine(g).histogram.size() != 9) continue;
    auto spectrum = laplacian_spectrum(g);
    bool simple = true;
    for (std::size_t i = 1; i < spectrum.size(); ++i)
      if (spectrum[i] - spectrum[i - 1] < 1e-6) simple = false;
    if (!simple) continue;
    ++tested;
    auto perm = gt::random_permutation(9, seed + 4000);
    GraphEmbeddingOutput a = forward_embed(g, params, c, RunMode::kEval, 0);
    GraphEmbeddingOutput b = forward_embed(g.permute(perm), params, c, RunMode::kEval, 0);
    REQUIRE(linf_dist(a.graph_embedding, b.graph_embedding) <= 1e-6);
  }
  CHECK(tested >= 5);
}

TEST_CASE("permuted K3 embeds identically") {
  ModelConfig c = tiny_config();
  ModelParams params = init_params(c, 9);
  Graph k3 = gt::complete_graph(3);
  GraphEmbeddingOutput a = forward_embed(k3, params, c, RunMode::kEval, 0);
  GraphEmbeddingOutput b = forward_embed(k3.permute({2, 0, 1}), params, c, RunMode::kEval, 0);
  CHECK(linf_dist(a.graph_embedding, b.graph_embedding) <= 1e-9);
}

TEST_CASE("single-node graph embeds in eval mode") {
  ModelConfig c = tiny_config();
  ModelParams params = init_params(c, 2);
  Graph one = Graph::from_edge_list(1, {});
  GraphEmbeddingOutput out = forward_embed(one, params, c, RunMode::kEval, 0);
  CHECK(out.graph_embedding.cols == static_cast<std::size_t>(c.graph_embedding_dim()));
  for (double x : out.graph_embedding.data) CHECK(std::isfinite(x));
}

TEST_CASE("closed-walk term separates 2xC3 from C6 for untrained models") {
  auto [tri, hex] = builtin_fixture("triangles_vs_hexagon");
  ModelConfig c;
  c.layers = 2;
  c.hops = 3;
  c.hidden_dim = 16;
  c.use_closed_walks = true;
  int separated = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ModelParams params = init_params(c, seed);
    GraphEmbeddingOutput a = forward_embed(tri, params, c, RunMode::kEval, 0);
    GraphEmbeddingOutput b = forward_embed(hex, params, c, RunMode::kEval, 0);
    if (l2_dist(a.graph_embedding, b.graph_embedding) > 1e-6) ++separated;
  }
  CHECK(separated >= 9);
}

TEST_CASE("variant flags change the embedding dimension") {
  ModelConfig c = tiny_config();
  CHECK(c.graph_embedding_dim() == 6);
  c.use_positional = false;
  CHECK(c.graph_embedding_dim() == 3);
  c.use_positional = true;
  c.use_structural = false;
  CHECK(c.graph_embedding_dim() == 3);
  c.use_structural = true;

  ModelConfig bad = tiny_config();
  bad.use_structural = false;
  bad.use_positional = false;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("gradients of a scalar head of z pass finite differences") {
  ModelConfig c;
  c.layers = 1;
  c.hops = 2;
  c.hidden_dim = 3;
  c.pe_dim = 2;
  c.mlp_depth = 1;
  ModelParams params = init_params(c, 13);
  Graph g = Graph::from_edge_list(4, {{0, 1}, {1, 2}, {2, 3}, {0, 2}});
  GraphFeatures f = featurize(g, c);

  std::vector<std::string> names;
  std::vector<Matrix> values;
  for (const auto& [name, value] : params.weights) {
    names.push_back(name);
    values.push_back(value);
  }
  auto build = [&](ad::Tape& tape, const std::vector<ad::Var>& vars) {
    ParamVars pv;
    for (std::size_t i = 0; i < names.size(); ++i) pv.vars.emplace(names[i], vars[i]);
    ModelParams scratch = params;  // fresh running stats per evaluation
    ForwardVars fw = forward_on_tape(tape, f, pv, scratch, c, RunMode::kTrain, 99);
    return tape.sum(tape.square(fw.graph_embedding));
  };
  ad::FdResult r = ad::finite_difference_check(build, values, 1e-4);
  CHECK(r.checked > 100);
  CHECK(r.max_rel_error <= 1e-4);
}

TEST_CASE("checkpoint round trip preserves everything") {
  ModelConfig c;
  c.layers = 2;
  c.hidden_dim = 6;
  c.pe_dim = 3;
  c.edge_attr_dim = 0;
  c.log_scale_closed_walks = false;
  ModelParams params = init_params(c, 21);
  params.state.at("struct.l0.mlp0.bn.mean")(0, 2) = 0.123456789012345;

  const std::string path = "test_checkpoint.json";
  save_checkpoint(params, c, path);
  auto [loaded, loaded_config] = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(loaded_config.layers == 2);
  CHECK(loaded_config.hidden_dim == 6);
  CHECK(loaded_config.log_scale_closed_walks == false);
  REQUIRE(loaded.weights.size() == params.weights.size());
  for (const auto& [name, m] : params.weights) REQUIRE(loaded.weights.at(name).data == m.data);
  for (const auto& [name, m] : params.state) REQUIRE(loaded.state.at(name).data == m.data);

  Graph g = gt::cycle_graph(5);
  GraphEmbeddingOutput a = forward_embed(g, params, c, RunMode::kEval, 0);
  GraphEmbeddingOutput b = forward_embed(g, loaded, loaded_config, RunMode::kEval, 0);
  CHECK(a.graph_embedding.data == b.graph_embedding.data);
}
