#pragma once

#include <functional>
#include <vector>

#include "genhop/matrix.hpp"

namespace genhop::ad {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Eager reverse-mode tape over dense matrices. Values are computed as ops
/// are recorded; backward() replays the record once in reverse topological
/// order. All reductions run in sequential index order, so identical inputs
/// produce bit-identical outputs.
class Tape {
 public:
  Var input(Matrix value, bool requires_grad = false);
  Var constant(Matrix value) { return input(std::move(value), false); }
  Var constant_scalar(double v) { return constant(Matrix::scalar(v)); }

  // primitives
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var scale_by(Var scalar_var, Var a);  // 1x1 learnable scalar times tensor
  Var relu(Var a);
  Var abs(Var a);
  Var square(Var a);
  Var sqrt(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sum(Var a);      // -> 1x1
  Var row_sum(Var a);  // m x n -> m x 1
  Var col_sum(Var a);  // m x n -> 1 x n
  Var broadcast_row(Var a, std::size_t rows);  // 1 x n -> rows x n
  Var broadcast_col(Var a, std::size_t cols);  // m x 1 -> m x cols
  Var concat_cols(Var a, Var b);
  Var concat_rows(Var a, Var b);
  Var segment_sum(Var a, std::vector<int> segments, int n_segments);
  Var row_log_softmax(Var a);
  Var pick(Var a, std::vector<std::pair<int, int>> indices);  // -> k x 1

  // composites
  Var mean(Var a);
  Var col_mean(Var a);
  /// Sample variance per column (m-1 denominator); m must be >= 2.
  Var col_variance(Var a);
  /// Rows scaled to unit L2 norm; throws on a zero-norm row.
  Var row_normalize(Var a);
  /// Pairwise cosine similarities between rows of a and rows of b.
  Var cosine_similarity(Var a, Var b);
  Var linear(Var x, Var w, Var bias);

  /// Batch normalization over columns. In train mode batch statistics are
  /// used and running statistics are updated in place (momentum convention:
  /// running = momentum * running + (1 - momentum) * batch). In eval mode
  /// the given running statistics are treated as constants.
  Var batch_norm(Var x, Var gamma, Var beta, Matrix& running_mean, Matrix& running_var,
                 bool train, double momentum = 0.9, double eps = 1e-5);

  void backward(Var scalar_loss);

  const Matrix& value(Var v) const;
  /// Gradient after backward(); a zero matrix if the node was not reached.
  Matrix grad(Var v) const;

  /// Minimum |input entry| over all relu/abs nodes recorded so far; +inf if
  /// none. Used by the finite-difference checker to exclude kink-adjacent
  /// coordinates.
  double kink_proximity() const;

  /// Signs of every relu/abs input entry, in recording order, with a dead
  /// band: |x| <= tol counts as 0. Two evaluations of the same record with
  /// different signatures straddle a kink.
  std::vector<signed char> kink_signature(double tol = 0.0) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kInput, kMatMul, kTranspose, kAdd, kSub, kMul, kDiv, kScale, kAddScalar,
    kScaleBy, kRelu, kAbs, kSquare, kSqrt, kExp, kLog, kSum, kRowSum, kColSum,
    kBroadcastRow, kBroadcastCol, kConcatCols, kConcatRows, kSegmentSum,
    kRowLogSoftmax, kPick,
  };
  struct Node {
    Op op = Op::kInput;
    int a = -1, b = -1;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    double scalar = 0.0;
    std::vector<int> segments;
    int n_segments = 0;
    std::vector<std::pair<int, int>> indices;
  };

  Var push(Node node);
  Node& at(Var v);
  const Node& at(Var v) const;
  void accumulate(int id, const Matrix& g);

  std::vector<Node> nodes_;
};

struct FdResult {
  double max_rel_error = 0.0;
  int checked = 0;
  std::vector<std::pair<int, int>> excluded;  // (input index, coordinate)
};

/// Central finite differences against tape gradients. `build` must record a
/// scalar loss from the given input Vars on a fresh tape. Coordinates whose
/// perturbations move any relu/abs input across (or into) the kink_tol band
/// around a kink are excluded from the error maximum and reported.
FdResult finite_difference_check(const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                                 const std::vector<Matrix>& inputs, double step,
                                 double kink_tol = 1e-6);

}  // namespace genhop::ad
