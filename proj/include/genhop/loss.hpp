#pragma once

#include "genhop/autodiff.hpp"

namespace genhop {

/// NT-Xent over a 2n-view batch. Rows of z_i and z_j are the two views of
/// the same graph; cosine similarity, temperature tau, mean over all 2n
/// anchors. Throws on a zero-norm row.
ad::Var nt_xent(ad::Tape& tape, ad::Var z_i, ad::Var z_j, double tau);
double nt_xent_value(const Matrix& z_i, const Matrix& z_j, double tau);

struct VicregWeights {
  double lambda_inv = 1.0;
  double lambda_var = 25.0;
  double lambda_cov = 25.0;
  double gamma = 1.0;     // variance target
  double eps_std = 1e-4;  // std(x, eps) = sqrt(var + eps)
};

/// Node-level regularizer with cross-view variance and covariance terms:
///   L_inv = (1/m) sum_v ||h_i - h_j||^2
///   L_var = (1/d) sum_l |max(0, g - std_i_l) - max(0, g - std_j_l)|
///   L_cov = (1/d) sum_{l != q} |(C_i_lq)^2 - (C_j_lq)^2|
/// With standard_per_view = true the variance and covariance terms instead
/// penalize each view separately (the usual formulation).
/// Rows of h_i and h_j must correspond; m < 2 drops the covariance term.
ad::Var vicreg(ad::Tape& tape, ad::Var h_i, ad::Var h_j, const VicregWeights& weights,
               bool standard_per_view = false);
double vicreg_value(const Matrix& h_i, const Matrix& h_j, const VicregWeights& weights,
                    bool standard_per_view = false);

}  // namespace genhop
