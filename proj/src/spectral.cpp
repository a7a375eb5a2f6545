#include "genhop/spectral.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "genhop/rng.hpp"
#include "genhop/wl.hpp"

namespace genhop {

namespace {
constexpr double kTrivialEigenvalue = 1e-8;

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_laplacian(const Graph& g) {
  const int m = g.node_count();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [u, v] : g.edges()) {
    lap(u, v) = -1.0;
    lap(v, u) = -1.0;
    lap(u, u) += 1.0;
    lap(v, v) += 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("laplacian eigendecomposition failed");
  return solver;
}
}  // namespace

Matrix laplacian_matrix(const Graph& g) {
  const int m = g.node_count();
  Matrix lap(m, m);
  for (const auto& [u, v] : g.edges()) {
    lap(u, v) = -1.0;
    lap(v, u) = -1.0;
    lap(u, u) += 1.0;
    lap(v, v) += 1.0;
  }
  return lap;
}

std::vector<double> laplacian_spectrum(const Graph& g) {
  if (g.node_count() == 0) return {};
  auto solver = solve_laplacian(g);
  std::vector<double> out(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) out[i] = solver.eigenvalues()(i);
  return out;
}

PositionalEncoding laplacian_pe(const Graph& g, int p) {
  if (p < 1) throw std::invalid_argument("laplacian_pe: p must be >= 1");
  const int m = g.node_count();
  PositionalEncoding enc;
  enc.requested_dim = p;
  enc.pe = Matrix(m, p);
  if (m == 0) return enc;

  auto solver = solve_laplacian(g);
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();

  // Sign canonicalization: the maximum-absolute-value entry is made
  // positive. Entries within 1e-9 of the maximum count as tied; ties are
  // broken by the node's stable WL color rank (a label-independent key)
  // and only then by node index, so the rule commutes with relabeling
  // whenever the tied nodes are structurally distinguishable.
  const std::vector<int> wl_colors = wl_refine(g).colors;

  int col = 0;
  for (int i = 0; i < m && col < p; ++i) {
    if (values(i) < kTrivialEigenvalue) continue;  // kernel vector, one per component
    Eigen::VectorXd u = vectors.col(i);
    u.normalize();
    double max_abs = 0.0;
    for (int v = 0; v < m; ++v) max_abs = std::max(max_abs, std::abs(u(v)));
    int best = -1;
    for (int v = 0; v < m; ++v) {
      if (std::abs(u(v)) < max_abs - 1e-9) continue;
      if (best < 0 || wl_colors[v] < wl_colors[best]) best = v;
    }
    if (u(best) < 0.0) u = -u;
    for (int v = 0; v < m; ++v) enc.pe(v, col) = u(v);
    ++col;
  }
  enc.used_dims = col;
  return enc;
}

PositionalEncoding random_sign_flip(const PositionalEncoding& pe, std::uint64_t seed) {
  PositionalEncoding out = pe;
  Rng rng(seed);
  for (int c = 0; c < pe.used_dims; ++c) {
    if (!rng.bernoulli(0.5)) continue;
    for (std::size_t v = 0; v < out.pe.rows; ++v) out.pe(v, c) = -out.pe(v, c);
  }
  return out;
}

}  // namespace genhop
