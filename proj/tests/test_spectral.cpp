#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "genhop/spectral.hpp"
#include "genhop/wl.hpp"
#include "support/oracles.hpp"

using namespace genhop;
namespace gt = genhop::testing;

TEST_CASE("laplacian_matrix examples") {
  Graph p2 = gt::path_graph(2);
  Matrix lap = laplacian_matrix(p2);
  CHECK(lap(0, 0) == 1.0);
  CHECK(lap(0, 1) == -1.0);
  CHECK(lap(1, 0) == -1.0);
  CHECK(lap(1, 1) == 1.0);

  Graph k3 = gt::complete_graph(3);
  Matrix lk3 = laplacian_matrix(k3);
  for (int i = 0; i < 3; ++i) CHECK(lk3(i, i) == 2.0);

  Graph empty = Graph::from_edge_list(3, {});
  Matrix le = laplacian_matrix(empty);
  for (double x : le.data) CHECK(x == 0.0);
}

TEST_CASE("laplacian row sums vanish") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Graph g = gt::random_graph(12, 0.3, seed);
    Matrix lap = laplacian_matrix(g);
    for (std::size_t i = 0; i < lap.rows; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < lap.cols; ++j) row += lap(i, j);
      REQUIRE(std::abs(row) <= 1e-10);
    }
  }
}

TEST_CASE("laplacian_pe on a single edge") {
  Graph p2 = gt::path_graph(2);
  PositionalEncoding enc = laplacian_pe(p2, 1);
  CHECK(enc.used_dims == 1);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(enc.pe(0, 0) == doctest::Approx(r).epsilon(1e-10));
  CHECK(enc.pe(1, 0) == doctest::Approx(-r).epsilon(1e-10));
}

TEST_CASE("C4 spectrum matches the circulant formula") {
  Graph c4 = gt::cycle_graph(4);
  auto spectrum = laplacian_spectrum(c4);
  REQUIRE(spectrum.size() == 4);
  CHECK(spectrum[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(spectrum[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(spectrum[2] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(spectrum[3] == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("padding beyond the available spectrum") {
  Graph k3 = gt::complete_graph(3);
  PositionalEncoding enc = laplacian_pe(k3, 6);
  CHECK(enc.used_dims == 2);
  for (int v = 0; v < 3; ++v)
    for (int c = 2; c < 6; ++c) CHECK(enc.pe(v, c) == 0.0);

  CHECK_THROWS_AS(laplacian_pe(k3, 0), std::invalid_argument);
}

TEST_CASE("used columns are unit norm, canonically signed") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Graph g = gt::random_graph(10, 0.35, seed);
    auto wl = wl_refine(g).colors;
    PositionalEncoding enc = laplacian_pe(g, 6);
    for (int c = 0; c < enc.used_dims; ++c) {
      double norm = 0.0;
      double max_abs = 0.0;
      for (std::size_t v = 0; v < enc.pe.rows; ++v) {
        norm += enc.pe(v, c) * enc.pe(v, c);
        max_abs = std::max(max_abs, std::abs(enc.pe(v, c)));
      }
      REQUIRE(std::abs(std::sqrt(norm) - 1.0) <= 1e-8);
      // the rule's chosen representative must be positive
      int best = -1;
      for (int v = 0; v < static_cast<int>(enc.pe.rows); ++v) {
        if (std::abs(enc.pe(v, c)) < max_abs - 1e-9) continue;
        if (best < 0 || wl[v] < wl[best]) best = v;
      }
      REQUIRE(enc.pe(best, c) > 0.0);
    }
  }
}

TEST_CASE("reconstruction L = U Lambda U^T within 1e-7") {
  for (int m : {8, 50, 200}) {
    Graph g = gt::random_graph(m, 3.0 / m + 0.1, 99 + m);
    Matrix lap = laplacian_matrix(g);
    // reconstruct via full PE including trivial vectors: use spectrum +
    // eigensolver directly through laplacian_pe on the shifted problem is
    // awkward, so assemble from scratch: L v = lambda v checked columnwise.
    PositionalEncoding enc = laplacian_pe(g, m);
    auto spectrum = laplacian_spectrum(g);
    // match used columns to their eigenvalues (skip trivial ones)
    std::vector<double> nontrivial;
    for (double x : spectrum)
      if (x >= 1e-8) nontrivial.push_back(x);
    REQUIRE(static_cast<int>(nontrivial.size()) == enc.used_dims);
    for (int c = 0; c < enc.used_dims; ++c) {
      for (int i = 0; i < m; ++i) {
        double lv = 0.0;
        for (int j = 0; j < m; ++j) lv += lap(i, j) * enc.pe(j, c);
        REQUIRE(std::abs(lv - nontrivial[c] * enc.pe(i, c)) <= 1e-7);
      }
    }
  }
}

TEST_CASE("permutation equivariance on simple-spectrum graphs") {
  // Restricted to graphs whose stable WL coloring is discrete: there the
  // tie-break is label-independent. Nodes sharing a color can carry
  // opposite-signed tied entries, for which no sign rule can commute with
  // relabeling.
  int tested = 0;
  for (std::uint64_t seed = 0; tested < 10 && seed < 60; ++seed) {
    Graph g = gt::random_graph(9, 0.4, seed * 13 + 1);
    if (!gt::is_connected(g)) continue;
    if (wl_refine(g).histogram.size() != 9) continue;
    auto spectrum = laplacian_spectrum(g);
    bool simple = true;
    for (std::size_t i = 1; i < spectrum.size(); ++i)
      if (spectrum[i] - spectrum[i - 1] < 1e-6) simple = false;
    if (!simple) continue;
    ++tested;
    auto perm = gt::random_permutation(9, seed + 1000);
    PositionalEncoding a = laplacian_pe(g, 6);
    PositionalEncoding b = laplacian_pe(g.permute(perm), 6);
    REQUIRE(a.used_dims == b.used_dims);
    for (int v = 0; v < 9; ++v)
      for (int c = 0; c < a.used_dims; ++c)
        REQUIRE(std::abs(a.pe(v, c) - b.pe(perm[v], c)) <= 1e-6);
  }
  CHECK(tested >= 5);
}

TEST_CASE("random_sign_flip determinism and padding") {
  Graph g = gt::random_graph(8, 0.4, 3);
  PositionalEncoding enc = laplacian_pe(g, 10);
  PositionalEncoding f1 = random_sign_flip(enc, 42);
  PositionalEncoding f2 = random_sign_flip(enc, 42);
  CHECK(f1.pe.data == f2.pe.data);
  for (int c = enc.used_dims; c < 10; ++c)
    for (std::size_t v = 0; v < enc.pe.rows; ++v) CHECK(f1.pe(v, c) == 0.0);
}

TEST_CASE("random_sign_flip flips each column at rate ~1/2") {
  Graph g = gt::random_graph(8, 0.4, 5);
  PositionalEncoding enc = laplacian_pe(g, 4);
  REQUIRE(enc.used_dims == 4);
  const int trials = 10000;
  std::vector<int> flips(enc.used_dims, 0);
  for (int s = 0; s < trials; ++s) {
    PositionalEncoding f = random_sign_flip(enc, 10000 + s);
    for (int c = 0; c < enc.used_dims; ++c) {
      bool flipped = false;
      for (std::size_t v = 0; v < enc.pe.rows; ++v)
        if (f.pe(v, c) != enc.pe(v, c)) flipped = true;
      if (flipped) ++flips[c];
    }
  }
  for (int c = 0; c < enc.used_dims; ++c) {
    double rate = static_cast<double>(flips[c]) / trials;
    CHECK(std::abs(rate - 0.5) <= 0.02);
  }
}
