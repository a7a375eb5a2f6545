#include "genhop/autodiff.hpp"

#include <cmath>
#include <limits>

namespace genhop::ad {

namespace {
void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
}
}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::at(Var v) {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: invalid var");
  return nodes_[v.id];
}

const Tape::Node& Tape::at(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: invalid var");
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return at(v).value; }

Matrix Tape::grad(Var v) const {
  const Node& n = at(v);
  if (n.grad.size() == 0) return Matrix(n.value.rows, n.value.cols);
  return n.grad;
}

Var Tape::input(Matrix value, bool requires_grad) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  Node n;
  n.op = Op::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.value = genhop::matmul(na.value, nb.value);
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kTranspose;
  n.a = a.id;
  n.value = genhop::transpose(na.value);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  check_same_shape(na.value, nb.value, "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = na.value;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += nb.value.data[i];
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  check_same_shape(na.value, nb.value, "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.value = na.value;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] -= nb.value.data[i];
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  check_same_shape(na.value, nb.value, "mul");
  Node n;
  n.op = Op::kMul;
  n.a = a.id;
  n.b = b.id;
  n.value = na.value;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= nb.value.data[i];
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Var Tape::div(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  check_same_shape(na.value, nb.value, "div");
  Node n;
  n.op = Op::kDiv;
  n.a = a.id;
  n.b = b.id;
  n.value = na.value;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] /= nb.value.data[i];
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.scalar = s;
  n.value = na.value;
  for (double& x : n.value.data) x *= s;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::add_scalar(Var a, double s) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kAddScalar;
  n.a = a.id;
  n.scalar = s;
  n.value = na.value;
  for (double& x : n.value.data) x += s;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::scale_by(Var scalar_var, Var a) {
  const Node& ns = at(scalar_var);
  const Node& na = at(a);
  if (ns.value.rows != 1 || ns.value.cols != 1)
    throw std::invalid_argument("scale_by: scalar var must be 1x1");
  Node n;
  n.op = Op::kScaleBy;
  n.a = scalar_var.id;
  n.b = a.id;
  n.value = na.value;
  const double s = ns.value.data[0];
  for (double& x : n.value.data) x *= s;
  n.requires_grad = ns.requires_grad || na.requires_grad;
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kRelu;
  n.a = a.id;
  n.value = na.value;
  for (double& x : n.value.data) x = x > 0.0 ? x : 0.0;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::abs(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kAbs;
  n.a = a.id;
  n.value = na.value;
  for (double& x : n.value.data) x = std::abs(x);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::square(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kSquare;
  n.a = a.id;
  n.value = na.value;
  for (double& x : n.value.data) x *= x;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::sqrt(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kSqrt;
  n.a = a.id;
  n.value = na.value;
  for (double& x : n.value.data) x = std::sqrt(x);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kExp;
  n.a = a.id;
  n.value = na.value;
  for (double& x : n.value.data) x = std::exp(x);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::log(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kLog;
  n.a = a.id;
  n.value = na.value;
  for (double& x : n.value.data) x = std::log(x);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  double total = 0.0;
  for (double x : na.value.data) total += x;
  n.value = Matrix::scalar(total);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::row_sum(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kRowSum;
  n.a = a.id;
  n.value = Matrix(na.value.rows, 1);
  for (std::size_t i = 0; i < na.value.rows; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < na.value.cols; ++j) total += na.value(i, j);
    n.value(i, 0) = total;
  }
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::col_sum(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kColSum;
  n.a = a.id;
  n.value = Matrix(1, na.value.cols);
  for (std::size_t i = 0; i < na.value.rows; ++i)
    for (std::size_t j = 0; j < na.value.cols; ++j) n.value(0, j) += na.value(i, j);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::broadcast_row(Var a, std::size_t rows) {
  const Node& na = at(a);
  if (na.value.rows != 1) throw std::invalid_argument("broadcast_row: input must be 1 x n");
  Node n;
  n.op = Op::kBroadcastRow;
  n.a = a.id;
  n.value = Matrix(rows, na.value.cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < na.value.cols; ++j) n.value(i, j) = na.value(0, j);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::broadcast_col(Var a, std::size_t cols) {
  const Node& na = at(a);
  if (na.value.cols != 1) throw std::invalid_argument("broadcast_col: input must be m x 1");
  Node n;
  n.op = Op::kBroadcastCol;
  n.a = a.id;
  n.value = Matrix(na.value.rows, cols);
  for (std::size_t i = 0; i < na.value.rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) n.value(i, j) = na.value(i, 0);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.rows != nb.value.rows)
    throw std::invalid_argument("concat_cols: row count mismatch");
  Node n;
  n.op = Op::kConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.value = Matrix(na.value.rows, na.value.cols + nb.value.cols);
  for (std::size_t i = 0; i < na.value.rows; ++i) {
    for (std::size_t j = 0; j < na.value.cols; ++j) n.value(i, j) = na.value(i, j);
    for (std::size_t j = 0; j < nb.value.cols; ++j) n.value(i, na.value.cols + j) = nb.value(i, j);
  }
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Var Tape::concat_rows(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.cols != nb.value.cols)
    throw std::invalid_argument("concat_rows: column count mismatch");
  Node n;
  n.op = Op::kConcatRows;
  n.a = a.id;
  n.b = b.id;
  n.value = Matrix(na.value.rows + nb.value.rows, na.value.cols);
  for (std::size_t i = 0; i < na.value.rows; ++i)
    for (std::size_t j = 0; j < na.value.cols; ++j) n.value(i, j) = na.value(i, j);
  for (std::size_t i = 0; i < nb.value.rows; ++i)
    for (std::size_t j = 0; j < nb.value.cols; ++j) n.value(na.value.rows + i, j) = nb.value(i, j);
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Var Tape::segment_sum(Var a, std::vector<int> segments, int n_segments) {
  const Node& na = at(a);
  if (segments.size() != na.value.rows)
    throw std::invalid_argument("segment_sum: segment count != rows");
  for (int s : segments)
    if (s < 0 || s >= n_segments) throw std::invalid_argument("segment_sum: segment out of range");
  Node n;
  n.op = Op::kSegmentSum;
  n.a = a.id;
  n.segments = std::move(segments);
  n.n_segments = n_segments;
  n.value = Matrix(n_segments, na.value.cols);
  for (std::size_t i = 0; i < na.value.rows; ++i)
    for (std::size_t j = 0; j < na.value.cols; ++j)
      n.value(n.segments[i], j) += na.value(i, j);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::row_log_softmax(Var a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kRowLogSoftmax;
  n.a = a.id;
  n.value = Matrix(na.value.rows, na.value.cols);
  for (std::size_t i = 0; i < na.value.rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < na.value.cols; ++j) mx = std::max(mx, na.value(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < na.value.cols; ++j) total += std::exp(na.value(i, j) - mx);
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < na.value.cols; ++j) n.value(i, j) = na.value(i, j) - lse;
  }
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::pick(Var a, std::vector<std::pair<int, int>> indices) {
  const Node& na = at(a);
  for (const auto& [i, j] : indices)
    if (i < 0 || j < 0 || i >= static_cast<int>(na.value.rows) ||
        j >= static_cast<int>(na.value.cols))
      throw std::invalid_argument("pick: index out of range");
  Node n;
  n.op = Op::kPick;
  n.a = a.id;
  n.indices = std::move(indices);
  n.value = Matrix(n.indices.size(), 1);
  for (std::size_t k = 0; k < n.indices.size(); ++k)
    n.value(k, 0) = na.value(n.indices[k].first, n.indices[k].second);
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  // note: element counts are captured before any push; pushes reallocate
  // the node vector and invalidate references
  const std::size_t count = at(a).value.size();
  if (count == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(count));
}

Var Tape::col_mean(Var a) {
  const std::size_t rows = at(a).value.rows;
  if (rows == 0) throw std::invalid_argument("col_mean: empty tensor");
  return scale(col_sum(a), 1.0 / static_cast<double>(rows));
}

Var Tape::col_variance(Var a) {
  const std::size_t rows = at(a).value.rows;
  if (rows < 2) throw std::invalid_argument("col_variance: needs >= 2 rows");
  Var centered = sub(a, broadcast_row(col_mean(a), rows));
  return scale(col_sum(square(centered)), 1.0 / static_cast<double>(rows - 1));
}

Var Tape::row_normalize(Var a) {
  const std::size_t cols = at(a).value.cols;
  Var norms = sqrt(row_sum(square(a)));
  for (double x : at(norms).value.data)
    if (x == 0.0) throw std::invalid_argument("row_normalize: zero-norm row");
  return div(a, broadcast_col(norms, cols));
}

Var Tape::cosine_similarity(Var a, Var b) {
  if (at(a).value.cols != at(b).value.cols)
    throw std::invalid_argument("cosine_similarity: feature dims differ");
  return matmul(row_normalize(a), transpose(row_normalize(b)));
}

Var Tape::linear(Var x, Var w, Var bias) {
  Var y = matmul(x, w);
  return add(y, broadcast_row(bias, at(y).value.rows));
}

Var Tape::batch_norm(Var x, Var gamma, Var beta, Matrix& running_mean, Matrix& running_var,
                     bool train, double momentum, double eps) {
  const std::size_t rows = at(x).value.rows;
  const std::size_t cols = at(x).value.cols;
  if (running_mean.cols != cols || running_var.cols != cols)
    throw std::invalid_argument("batch_norm: running stats shape mismatch");
  Var xhat;
  if (train) {
    Var mu = col_mean(x);
    Var centered = sub(x, broadcast_row(mu, rows));
    // Biased variance normalizes the batch; the running estimate stores the
    // unbiased version.
    Var var_b = scale(col_sum(square(centered)), 1.0 / static_cast<double>(rows));
    xhat = div(centered, broadcast_row(sqrt(add_scalar(var_b, eps)), rows));
    const Matrix& mu_v = value(mu);
    const Matrix& var_v = value(var_b);
    const double correction =
        rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1) : 1.0;
    for (std::size_t j = 0; j < cols; ++j) {
      running_mean(0, j) = momentum * running_mean(0, j) + (1.0 - momentum) * mu_v(0, j);
      running_var(0, j) =
          momentum * running_var(0, j) + (1.0 - momentum) * var_v(0, j) * correction;
    }
  } else {
    Var mu = constant(running_mean);
    Matrix denom(1, cols);
    for (std::size_t j = 0; j < cols; ++j) denom(0, j) = std::sqrt(running_var(0, j) + eps);
    xhat = div(sub(x, broadcast_row(mu, rows)), broadcast_row(constant(denom), rows));
  }
  return add(mul(xhat, broadcast_row(gamma, rows)), broadcast_row(beta, rows));
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix(n.value.rows, n.value.cols);
  for (std::size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
}

void Tape::backward(Var scalar_loss) {
  const Node& loss = at(scalar_loss);
  if (loss.value.rows != 1 || loss.value.cols != 1)
    throw std::invalid_argument("backward: output must be scalar");
  for (Node& n : nodes_) n.grad = Matrix();
  if (!loss.requires_grad) return;
  nodes_[scalar_loss.id].grad = Matrix::scalar(1.0);

  for (int id = scalar_loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kMatMul: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        if (na.requires_grad) accumulate(n.a, genhop::matmul(g, genhop::transpose(nb.value)));
        if (nb.requires_grad) accumulate(n.b, genhop::matmul(genhop::transpose(na.value), g));
        break;
      }
      case Op::kTranspose:
        accumulate(n.a, genhop::transpose(g));
        break;
      case Op::kAdd:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::kSub: {
        accumulate(n.a, g);
        Matrix neg = g;
        for (double& x : neg.data) x = -x;
        accumulate(n.b, neg);
        break;
      }
      case Op::kMul: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        if (na.requires_grad) {
          Matrix ga = g;
          for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= nb.value.data[i];
          accumulate(n.a, ga);
        }
        if (nb.requires_grad) {
          Matrix gb = g;
          for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] *= na.value.data[i];
          accumulate(n.b, gb);
        }
        break;
      }
      case Op::kDiv: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        if (na.requires_grad) {
          Matrix ga = g;
          for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] /= nb.value.data[i];
          accumulate(n.a, ga);
        }
        if (nb.requires_grad) {
          Matrix gb = g;
          for (std::size_t i = 0; i < gb.data.size(); ++i)
            gb.data[i] *= -n.value.data[i] / nb.value.data[i];
          accumulate(n.b, gb);
        }
        break;
      }
      case Op::kScale: {
        Matrix ga = g;
        for (double& x : ga.data) x *= n.scalar;
        accumulate(n.a, ga);
        break;
      }
      case Op::kAddScalar:
        accumulate(n.a, g);
        break;
      case Op::kScaleBy: {
        const Node& ns = nodes_[n.a];
        const Node& na = nodes_[n.b];
        if (ns.requires_grad) {
          double total = 0.0;
          for (std::size_t i = 0; i < g.data.size(); ++i) total += g.data[i] * na.value.data[i];
          accumulate(n.a, Matrix::scalar(total));
        }
        if (na.requires_grad) {
          Matrix ga = g;
          const double s = ns.value.data[0];
          for (double& x : ga.data) x *= s;
          accumulate(n.b, ga);
        }
        break;
      }
      case Op::kRelu: {
        const Node& na = nodes_[n.a];
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.data.size(); ++i)
          if (na.value.data[i] <= 0.0) ga.data[i] = 0.0;
        accumulate(n.a, ga);
        break;
      }
      case Op::kAbs: {
        const Node& na = nodes_[n.a];
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.data.size(); ++i) {
          const double x = na.value.data[i];
          ga.data[i] *= x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        }
        accumulate(n.a, ga);
        break;
      }
      case Op::kSquare: {
        const Node& na = nodes_[n.a];
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= 2.0 * na.value.data[i];
        accumulate(n.a, ga);
        break;
      }
      case Op::kSqrt: {
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= 0.5 / n.value.data[i];
        accumulate(n.a, ga);
        break;
      }
      case Op::kExp: {
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= n.value.data[i];
        accumulate(n.a, ga);
        break;
      }
      case Op::kLog: {
        const Node& na = nodes_[n.a];
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] /= na.value.data[i];
        accumulate(n.a, ga);
        break;
      }
      case Op::kSum: {
        const Node& na = nodes_[n.a];
        Matrix ga(na.value.rows, na.value.cols, g.data[0]);
        accumulate(n.a, ga);
        break;
      }
      case Op::kRowSum: {
        const Node& na = nodes_[n.a];
        Matrix ga(na.value.rows, na.value.cols);
        for (std::size_t i = 0; i < ga.rows; ++i)
          for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) = g(i, 0);
        accumulate(n.a, ga);
        break;
      }
      case Op::kColSum: {
        const Node& na = nodes_[n.a];
        Matrix ga(na.value.rows, na.value.cols);
        for (std::size_t i = 0; i < ga.rows; ++i)
          for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) = g(0, j);
        accumulate(n.a, ga);
        break;
      }
      case Op::kBroadcastRow: {
        Matrix ga(1, n.value.cols);
        for (std::size_t i = 0; i < n.value.rows; ++i)
          for (std::size_t j = 0; j < n.value.cols; ++j) ga(0, j) += g(i, j);
        accumulate(n.a, ga);
        break;
      }
      case Op::kBroadcastCol: {
        Matrix ga(n.value.rows, 1);
        for (std::size_t i = 0; i < n.value.rows; ++i)
          for (std::size_t j = 0; j < n.value.cols; ++j) ga(i, 0) += g(i, j);
        accumulate(n.a, ga);
        break;
      }
      case Op::kConcatCols: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        if (na.requires_grad) {
          Matrix ga(na.value.rows, na.value.cols);
          for (std::size_t i = 0; i < ga.rows; ++i)
            for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) = g(i, j);
          accumulate(n.a, ga);
        }
        if (nb.requires_grad) {
          Matrix gb(nb.value.rows, nb.value.cols);
          for (std::size_t i = 0; i < gb.rows; ++i)
            for (std::size_t j = 0; j < gb.cols; ++j) gb(i, j) = g(i, na.value.cols + j);
          accumulate(n.b, gb);
        }
        break;
      }
      case Op::kConcatRows: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        if (na.requires_grad) {
          Matrix ga(na.value.rows, na.value.cols);
          for (std::size_t i = 0; i < ga.rows; ++i)
            for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) = g(i, j);
          accumulate(n.a, ga);
        }
        if (nb.requires_grad) {
          Matrix gb(nb.value.rows, nb.value.cols);
          for (std::size_t i = 0; i < gb.rows; ++i)
            for (std::size_t j = 0; j < gb.cols; ++j) gb(i, j) = g(na.value.rows + i, j);
          accumulate(n.b, gb);
        }
        break;
      }
      case Op::kSegmentSum: {
        const Node& na = nodes_[n.a];
        Matrix ga(na.value.rows, na.value.cols);
        for (std::size_t i = 0; i < ga.rows; ++i)
          for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) = g(n.segments[i], j);
        accumulate(n.a, ga);
        break;
      }
      case Op::kRowLogSoftmax: {
        // dx = g - softmax(x) * rowsum(g); softmax = exp(value)
        Matrix ga(n.value.rows, n.value.cols);
        for (std::size_t i = 0; i < n.value.rows; ++i) {
          double row_total = 0.0;
          for (std::size_t j = 0; j < n.value.cols; ++j) row_total += g(i, j);
          for (std::size_t j = 0; j < n.value.cols; ++j)
            ga(i, j) = g(i, j) - std::exp(n.value(i, j)) * row_total;
        }
        accumulate(n.a, ga);
        break;
      }
      case Op::kPick: {
        const Node& na = nodes_[n.a];
        Matrix ga(na.value.rows, na.value.cols);
        for (std::size_t k = 0; k < n.indices.size(); ++k)
          ga(n.indices[k].first, n.indices[k].second) += g(k, 0);
        accumulate(n.a, ga);
        break;
      }
    }
  }
}

double Tape::kink_proximity() const {
  double best = std::numeric_limits<double>::infinity();
  for (const Node& n : nodes_) {
    if (n.op != Op::kRelu && n.op != Op::kAbs) continue;
    const Node& na = nodes_[n.a];
    for (double x : na.value.data) best = std::min(best, std::abs(x));
  }
  return best;
}

std::vector<signed char> Tape::kink_signature(double tol) const {
  std::vector<signed char> signature;
  for (const Node& n : nodes_) {
    if (n.op != Op::kRelu && n.op != Op::kAbs) continue;
    const Node& na = nodes_[n.a];
    for (double x : na.value.data)
      signature.push_back(x > tol ? 1 : (x < -tol ? -1 : 0));
  }
  return signature;
}

FdResult finite_difference_check(const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                                 const std::vector<Matrix>& inputs, double step,
                                 double kink_tol) {
  if (step <= 0.0) throw std::invalid_argument("finite_difference_check: step must be > 0");
  std::vector<Matrix> analytic;
  std::vector<signed char> sig_base;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Matrix& m : inputs) vars.push_back(tape.input(m, true));
    Var loss = build(tape, vars);
    tape.backward(loss);
    for (Var v : vars) analytic.push_back(tape.grad(v));
    sig_base = tape.kink_signature(kink_tol);
  }

  auto evaluate = [&](const std::vector<Matrix>& point, std::vector<signed char>* signature) {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& m : point) vars.push_back(tape.input(m, false));
    Var loss = build(tape, vars);
    *signature = tape.kink_signature(kink_tol);
    return tape.value(loss).data[0];
  };

  FdResult result;
  std::vector<Matrix> point = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t c = 0; c < inputs[i].data.size(); ++c) {
      const double saved = point[i].data[c];
      std::vector<signed char> sig_hi, sig_lo;
      point[i].data[c] = saved + step;
      const double f_hi = evaluate(point, &sig_hi);
      point[i].data[c] = saved - step;
      const double f_lo = evaluate(point, &sig_lo);
      point[i].data[c] = saved;
      // a coordinate is excluded when the perturbation crosses a relu/abs
      // kink: the activation sign pattern differs between the evaluations
      // (a relu input pinned at exactly 0 on both sides is locally smooth
      // along this coordinate and stays checkable)
      if (sig_hi != sig_lo || sig_hi != sig_base) {
        result.excluded.emplace_back(static_cast<int>(i), static_cast<int>(c));
        continue;
      }
      const double fd = (f_hi - f_lo) / (2.0 * step);
      const double g = analytic[i].data[c];
      const double denom = std::max({1.0, std::abs(fd), std::abs(g)});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(fd - g) / denom);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace genhop::ad
