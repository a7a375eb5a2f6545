#include "genhop/loss.hpp"

#include <stdexcept>

namespace genhop {

ad::Var nt_xent(ad::Tape& tape, ad::Var z_i, ad::Var z_j, double tau) {
  const Matrix& vi = tape.value(z_i);
  const Matrix& vj = tape.value(z_j);
  if (tau <= 0.0) throw std::invalid_argument("nt_xent: tau must be > 0");
  if (vi.rows != vj.rows || vi.cols != vj.cols)
    throw std::invalid_argument("nt_xent: view shapes differ");
  const std::size_t n = vi.rows;
  if (n < 1) throw std::invalid_argument("nt_xent: empty batch");

  ad::Var all = tape.concat_rows(z_i, z_j);                      // 2n x d
  ad::Var sims = tape.cosine_similarity(all, all);               // errors on zero rows
  ad::Var logits = tape.scale(sims, 1.0 / tau);
  // exclude self-similarity from every denominator: exp(-1e9/...) underflows
  // to exactly 0, matching the indicator in the loss definition
  Matrix mask(2 * n, 2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) mask(i, i) = -1e9;
  ad::Var log_probs = tape.row_log_softmax(tape.add(logits, tape.constant(std::move(mask))));

  std::vector<std::pair<int, int>> positives;
  positives.reserve(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i)
    positives.emplace_back(static_cast<int>(i), static_cast<int>((i + n) % (2 * n)));
  return tape.scale(tape.sum(tape.pick(log_probs, positives)),
                    -1.0 / static_cast<double>(2 * n));
}

double nt_xent_value(const Matrix& z_i, const Matrix& z_j, double tau) {
  ad::Tape tape;
  return tape.value(nt_xent(tape, tape.constant(z_i), tape.constant(z_j), tau)).data[0];
}

ad::Var vicreg(ad::Tape& tape, ad::Var h_i, ad::Var h_j, const VicregWeights& weights,
               bool standard_per_view) {
  const Matrix& vi = tape.value(h_i);
  const Matrix& vj = tape.value(h_j);
  if (vi.rows != vj.rows || vi.cols != vj.cols)
    throw std::invalid_argument("vicreg: view shapes differ");
  const std::size_t m = vi.rows;
  const std::size_t d = vi.cols;
  if (m == 0 || d == 0) throw std::invalid_argument("vicreg: empty input");

  ad::Var inv = tape.scale(tape.sum(tape.square(tape.sub(h_i, h_j))),
                           1.0 / static_cast<double>(m));

  auto hinge_std = [&](ad::Var h) {
    // std per dimension over nodes; a single node has no spread, so the
    // hinge saturates at gamma - sqrt(eps) for both views and cancels
    ad::Var var = m >= 2 ? tape.col_variance(h) : tape.constant(Matrix(1, d));
    ad::Var std_dev = tape.sqrt(tape.add_scalar(var, weights.eps_std));
    return tape.relu(tape.add_scalar(tape.scale(std_dev, -1.0), weights.gamma));
  };
  ad::Var hinge_i = hinge_std(h_i);
  ad::Var hinge_j = hinge_std(h_j);
  ad::Var var_term =
      standard_per_view
          ? tape.scale(tape.add(tape.sum(hinge_i), tape.sum(hinge_j)),
                       1.0 / static_cast<double>(d))
          : tape.scale(tape.sum(tape.abs(tape.sub(hinge_i, hinge_j))),
                       1.0 / static_cast<double>(d));

  ad::Var cov_term = tape.constant_scalar(0.0);
  if (m >= 2) {
    auto covariance_sq = [&](ad::Var h) {
      ad::Var centered = tape.sub(h, tape.broadcast_row(tape.col_mean(h), m));
      ad::Var cov = tape.scale(tape.matmul(tape.transpose(centered), centered),
                               1.0 / static_cast<double>(m - 1));
      return tape.square(cov);
    };
    Matrix offdiag(d, d, 1.0);
    for (std::size_t l = 0; l < d; ++l) offdiag(l, l) = 0.0;
    ad::Var mask = tape.constant(std::move(offdiag));
    ad::Var sq_i = covariance_sq(h_i);
    ad::Var sq_j = covariance_sq(h_j);
    cov_term = standard_per_view
                   ? tape.scale(tape.add(tape.sum(tape.mul(sq_i, mask)),
                                         tape.sum(tape.mul(sq_j, mask))),
                                1.0 / static_cast<double>(d))
                   : tape.scale(tape.sum(tape.mul(tape.abs(tape.sub(sq_i, sq_j)), mask)),
                                1.0 / static_cast<double>(d));
  }

  ad::Var total = tape.scale(inv, weights.lambda_inv);
  total = tape.add(total, tape.scale(var_term, weights.lambda_var));
  total = tape.add(total, tape.scale(cov_term, weights.lambda_cov));
  return total;
}

double vicreg_value(const Matrix& h_i, const Matrix& h_j, const VicregWeights& weights,
                    bool standard_per_view) {
  ad::Tape tape;
  return tape
      .value(vicreg(tape, tape.constant(h_i), tape.constant(h_j), weights, standard_per_view))
      .data[0];
}

}  // namespace genhop
