#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "genhop/autodiff.hpp"
#include "genhop/rng.hpp"

using namespace genhop;
using ad::Tape;
using ad::Var;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Matrix m(r, c);
  for (double& x : m.data) x = rng.uniform(lo, hi);
  return m;
}

/// Random matrix with entries kept away from zero (for relu/abs kink-free
/// instances).
Matrix random_matrix_offzero(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& x : m.data) {
    double v = rng.uniform(0.25, 2.0);
    x = rng.bernoulli(0.5) ? v : -v;
  }
  return m;
}

void check_gradients(const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                     const std::vector<Matrix>& inputs, double tol = 1e-4) {
  ad::FdResult r = ad::finite_difference_check(build, inputs, 1e-4);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error <= tol);
}

}  // namespace

TEST_CASE("forward examples") {
  Tape t;
  Matrix eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  Matrix x(2, 3);
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = static_cast<double>(i);
  Var prod = t.matmul(t.constant(eye), t.constant(x));
  CHECK(t.value(prod).data == x.data);

  Matrix rows(2, 2);
  rows(0, 0) = 1;
  rows(0, 1) = 2;
  rows(1, 0) = 3;
  rows(1, 1) = 4;
  Var seg = t.segment_sum(t.constant(rows), {0, 0}, 1);
  CHECK(t.value(seg)(0, 0) == 4.0);
  CHECK(t.value(seg)(0, 1) == 6.0);

  Matrix v(1, 3);
  v(0, 0) = -1;
  v(0, 1) = 0;
  v(0, 2) = 2;
  Var r = t.relu(t.constant(v));
  CHECK(t.value(r)(0, 0) == 0.0);
  CHECK(t.value(r)(0, 1) == 0.0);
  CHECK(t.value(r)(0, 2) == 2.0);
}

TEST_CASE("forward is bit-reproducible") {
  auto run = [] {
    Rng rng(7);
    Tape t;
    Var a = t.input(random_matrix(4, 5, rng), true);
    Var b = t.input(random_matrix(5, 3, rng), true);
    Var y = t.row_log_softmax(t.matmul(t.relu(a), b));
    return t.value(t.sum(y)).data[0];
  };
  const double first = run();
  for (int i = 0; i < 5; ++i) CHECK(run() == first);
}

TEST_CASE("shape mismatches throw") {
  Tape t;
  Var a = t.constant(Matrix(2, 3, 1.0));
  Var b = t.constant(Matrix(2, 2, 1.0));
  CHECK_THROWS_AS(t.add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(t.matmul(a, a), std::invalid_argument);
  CHECK_THROWS_AS(t.backward(a), std::invalid_argument);  // non-scalar output
}

TEST_CASE("d/dx sum(x^2) = 2x") {
  Tape t;
  Matrix x(3, 2);
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = 0.5 * (i + 1);
  Var vx = t.input(x, true);
  t.backward(t.sum(t.square(vx)));
  Matrix g = t.grad(vx);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(g.data[i] == doctest::Approx(2.0 * x.data[i]).epsilon(1e-12));
}

TEST_CASE("every primitive passes finite-difference checks (20 instances each)") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t m = 2 + rng.uniform_index(3);
    const std::size_t n = 2 + rng.uniform_index(3);
    const std::size_t k = 2 + rng.uniform_index(3);

    // matmul + add + scale + transpose
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum(t.scale(t.add(t.matmul(v[0], v[1]), v[2]), 1.7));
        },
        {random_matrix(m, k, rng), random_matrix(k, n, rng), random_matrix(m, n, rng)});

    // sub, mul, div (denominator away from 0)
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum(t.div(t.mul(t.sub(v[0], v[1]), v[0]), v[2]));
        },
        {random_matrix(m, n, rng), random_matrix(m, n, rng), random_matrix_offzero(m, n, rng)});

    // relu / abs away from kinks
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) { return t.sum(t.relu(v[0])); },
        {random_matrix_offzero(m, n, rng)});
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) { return t.sum(t.abs(v[0])); },
        {random_matrix_offzero(m, n, rng)});

    // square, sqrt, exp, log on positive inputs
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum(t.add(t.sqrt(v[0]), t.log(v[0])));
        },
        {random_matrix(m, n, rng, 0.5, 3.0)});
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) { return t.sum(t.exp(t.square(v[0]))); },
        {random_matrix(m, n, rng, -1.0, 1.0)});

    // reductions and broadcasts
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          Var rows = t.row_sum(v[0]);
          Var cols = t.col_sum(v[0]);
          Var back = t.add(t.broadcast_col(rows, t.value(v[0]).cols),
                           t.broadcast_row(cols, t.value(v[0]).rows));
          return t.mean(t.mul(back, v[0]));
        },
        {random_matrix(m, n, rng)});

    // concatenation both ways
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum(t.square(t.concat_cols(v[0], v[1])));
        },
        {random_matrix(m, n, rng), random_matrix(m, k, rng)});
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum(t.square(t.concat_rows(v[0], v[1])));
        },
        {random_matrix(m, n, rng), random_matrix(k, n, rng)});

    // segment_sum
    {
      std::vector<int> segments(m + 2);
      for (auto& s : segments) s = static_cast<int>(rng.uniform_index(3));
      check_gradients(
          [segments](Tape& t, const std::vector<Var>& v) {
            return t.sum(t.square(t.segment_sum(v[0], segments, 3)));
          },
          {random_matrix(m + 2, n, rng)});
    }

    // row_log_softmax and pick
    {
      std::vector<std::pair<int, int>> idx;
      for (std::size_t i = 0; i < m; ++i) idx.emplace_back(i, rng.uniform_index(n));
      check_gradients(
          [idx](Tape& t, const std::vector<Var>& v) {
            return t.mean(t.pick(t.row_log_softmax(v[0]), idx));
          },
          {random_matrix(m, n, rng)});
    }

    // scale_by (learnable scalar) and add_scalar
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum(t.scale_by(v[1], t.add_scalar(v[0], 0.3)));
        },
        {random_matrix(m, n, rng), random_matrix(1, 1, rng)});

    // cosine similarity (nonzero rows guaranteed by off-zero sampling)
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          return t.mean(t.cosine_similarity(v[0], v[1]));
        },
        {random_matrix_offzero(m, 4, rng), random_matrix_offzero(k, 4, rng)});

    // col_variance
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) { return t.sum(t.col_variance(v[0])); },
        {random_matrix(m + 1, n, rng)});
  }
}

TEST_CASE("batch_norm gradient vs finite differences on a 4x3 input") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 11);
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          Matrix running_mean(1, 3), running_var(1, 3, 1.0);
          Var y = t.batch_norm(v[0], v[1], v[2], running_mean, running_var, /*train=*/true);
          return t.sum(t.square(y));
        },
        {random_matrix(4, 3, rng), random_matrix(1, 3, rng, 0.5, 1.5),
         random_matrix(1, 3, rng)});
  }
}

TEST_CASE("batch_norm eval mode uses running statistics") {
  Tape t;
  Matrix x(2, 2);
  x(0, 0) = 3.0;
  x(0, 1) = -1.0;
  x(1, 0) = 5.0;
  x(1, 1) = 1.0;
  Matrix running_mean(1, 2);
  running_mean(0, 0) = 4.0;
  Matrix running_var(1, 2, 1.0);
  Matrix gamma(1, 2, 1.0), beta(1, 2);
  Var y = t.batch_norm(t.constant(x), t.constant(gamma), t.constant(beta), running_mean,
                       running_var, /*train=*/false, 0.9, 0.0);
  CHECK(t.value(y)(0, 0) == doctest::Approx(-1.0));
  CHECK(t.value(y)(1, 0) == doctest::Approx(1.0));
  CHECK(t.value(y)(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("batch_norm updates running statistics in train mode") {
  Tape t;
  Matrix x(4, 1);
  x(0, 0) = 1.0;
  x(1, 0) = 2.0;
  x(2, 0) = 3.0;
  x(3, 0) = 4.0;
  Matrix running_mean(1, 1), running_var(1, 1, 1.0);
  Matrix gamma(1, 1, 1.0), beta(1, 1);
  t.batch_norm(t.constant(x), t.constant(gamma), t.constant(beta), running_mean, running_var,
               /*train=*/true, 0.9);
  CHECK(running_mean(0, 0) == doctest::Approx(0.9 * 0.0 + 0.1 * 2.5));
  // batch var (biased) = 1.25; unbiased = 5/3
  CHECK(running_var(0, 0) == doctest::Approx(0.9 * 1.0 + 0.1 * (5.0 / 3.0)));
}

TEST_CASE("relu at an exact kink is flagged as excluded") {
  Matrix x(1, 3);
  x(0, 0) = 0.0;  // exact kink
  x(0, 1) = 1.0;
  x(0, 2) = -1.0;
  ad::FdResult r = ad::finite_difference_check(
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.relu(v[0])); }, {x}, 1e-4);
  REQUIRE(r.excluded.size() > 0);
  bool kink_flagged = false;
  for (auto [input, coord] : r.excluded)
    if (input == 0 && coord == 0) kink_flagged = true;
  CHECK(kink_flagged);
}

TEST_CASE("quadratic form reaches tight finite-difference agreement") {
  Rng rng(5);
  Matrix a = random_matrix(4, 4, rng);
  ad::FdResult r = ad::finite_difference_check(
      [a](Tape& t, const std::vector<Var>& v) {
        Var mat = t.constant(a);
        return t.sum(t.mul(v[0], t.matmul(mat, v[0])));
      },
      {random_matrix(4, 1, rng)}, 1e-4);
  CHECK(r.max_rel_error <= 1e-7);
}

TEST_CASE("randomized 2-layer MLP loss passes the 1e-4 gate") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 101);
    check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          Var h = t.relu(t.linear(v[0], v[1], v[2]));
          Var out = t.linear(h, v[3], v[4]);
          return t.mean(t.square(out));
        },
        {random_matrix_offzero(3, 4, rng), random_matrix(4, 5, rng),
         random_matrix(1, 5, rng), random_matrix(5, 2, rng), random_matrix(1, 2, rng)});
  }
}
