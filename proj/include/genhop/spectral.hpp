#pragma once

#include <cstdint>

#include "genhop/graph.hpp"

namespace genhop {

/// Laplacian eigenvector positional features. Columns beyond used_dims are
/// zero padding; used columns have unit norm and a canonical sign: the
/// maximum-absolute-value entry is made positive, with ties (within 1e-9)
/// broken by stable WL color rank and then node index. Ties between
/// structurally equivalent nodes stay ambiguous under relabeling; see
/// random_sign_flip for the training-time treatment.
struct PositionalEncoding {
  Matrix pe;             // m x requested_dim
  int requested_dim = 0;
  int used_dims = 0;
};

/// L = D - A, dense symmetric.
Matrix laplacian_matrix(const Graph& g);

/// Eigenvalues sorted ascending; eigenvectors with eigenvalue < 1e-8 are
/// trivial and skipped; the next p eigenvectors fill the columns. p >= 1.
PositionalEncoding laplacian_pe(const Graph& g, int p);

/// Sorted Laplacian eigenvalues (full spectrum), ascending.
std::vector<double> laplacian_spectrum(const Graph& g);

/// Each used column independently multiplied by +-1 with probability 1/2,
/// deterministically per seed. Zero-padded columns are unchanged.
PositionalEncoding random_sign_flip(const PositionalEncoding& pe, std::uint64_t seed);

}  // namespace genhop
