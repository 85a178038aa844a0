#include <doctest.h>

#include <cmath>
#include <functional>

#include "helpers.hpp"
#include "pmor/features.hpp"
#include "pmor/learn.hpp"
#include "pmor/opinf.hpp"
#include "pmor/tune.hpp"

using namespace pmor;

namespace {

std::vector<double> grid(int k, double dt, double t0 = 0.0) {
  std::vector<double> t(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) t[static_cast<std::size_t>(j)] = t0 + j * dt;
  return t;
}

// Fine RK4 path sampled at `k` points; returns states (r x k).
Matrix trajectory(const std::function<Vector(const Vector&)>& f, Vector s, int k, double dt) {
  Matrix out(s.size(), k);
  const int sub = 50;
  const double h = dt / sub;
  for (int j = 0; j < k; ++j) {
    out.col(j) = s;
    for (int i = 0; i < sub; ++i) {
      const Vector k1 = f(s);
      const Vector k2 = f(s + 0.5 * h * k1);
      const Vector k3 = f(s + 0.5 * h * k2);
      const Vector k4 = f(s + h * k3);
      s += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  return out;
}

Matrix apply(const std::function<Vector(const Vector&)>& f, const Matrix& s) {
  Matrix out(s.rows(), s.cols());
  for (Index j = 0; j < s.cols(); ++j) out.col(j) = f(s.col(j));
  return out;
}

// Several short trajectories from random starts, pooled column-wise.
Matrix pooled_trajectories(const std::function<Vector(const Vector&)>& f, int r) {
  Matrix out(r, 0);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Matrix piece = trajectory(f, testutil::random_matrix(r, 1, seed).col(0), 30, 0.05);
    out.conservativeResize(Eigen::NoChange, out.cols() + piece.cols());
    out.rightCols(piece.cols()) = piece;
  }
  return out;
}

}  // namespace

TEST_CASE("finite differences are exact on low-degree polynomials") {
  const int k = 12;
  const auto t = grid(k, 0.1, 0.3);
  Matrix lin(2, k), quart(1, k);
  for (int j = 0; j < k; ++j) {
    lin(0, j) = t[j];
    lin(1, j) = 3 * t[j] - 1;
    quart(0, j) = std::pow(t[j], 4);
  }
  const Matrix d = time_derivatives(lin, t);
  CHECK((d.row(0).array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK((d.row(1).array() - 3.0).abs().maxCoeff() <= 1e-12);
  const Matrix d4 = time_derivatives(quart, t);
  for (int j = 0; j < k; ++j) {
    const double exact = 4 * std::pow(t[j], 3);
    CHECK(std::abs(d4(0, j) - exact) <= 1e-10 * std::abs(exact));
  }
}

TEST_CASE("finite differences converge at fourth order") {
  auto max_err = [](double dt) {
    const int k = static_cast<int>(std::lround(1.0 / dt)) + 1;
    const auto t = grid(k, dt);
    Matrix s(1, k);
    for (int j = 0; j < k; ++j) s(0, j) = std::sin(t[j]);
    const Matrix d = time_derivatives(s, t);
    double e = 0.0;
    for (int j = 0; j < k; ++j) e = std::max(e, std::abs(d(0, j) - std::cos(t[j])));
    return e;
  };
  const double ratio = max_err(0.02) / max_err(0.01);
  CHECK(ratio > 13.0);
  CHECK(ratio < 19.0);
}

TEST_CASE("stencils do not cross trajectory breaks") {
  // Two linear pieces with different slopes; any crossing stencil would mix them.
  std::vector<double> t = grid(6, 0.5);
  const auto t2 = grid(7, 0.25, 10.0);
  t.insert(t.end(), t2.begin(), t2.end());
  Matrix s(1, 13);
  for (int j = 0; j < 6; ++j) s(0, j) = 2 * t[j];
  for (int j = 6; j < 13; ++j) s(0, j) = -5 * t[j] + 100;
  const Matrix d = time_derivatives(s, t, {6});
  for (int j = 0; j < 6; ++j) CHECK(d(0, j) == doctest::Approx(2.0).epsilon(1e-12));
  for (int j = 6; j < 13; ++j) CHECK(d(0, j) == doctest::Approx(-5.0).epsilon(1e-12));
}

TEST_CASE("finite difference preconditions") {
  auto t = grid(8, 0.1);
  t[5] += 1e-4;
  CHECK_THROWS_WITH_AS(time_derivatives(Matrix::Ones(1, 8), t), "nonuniform time spacing within trajectory",
                       Error);
  CHECK_THROWS_WITH_AS(time_derivatives(Matrix::Ones(1, 4), grid(4, 0.1)), "trajectory shorter than 5 snapshots",
                       Error);
  CHECK_THROWS_AS(time_derivatives(Matrix::Ones(1, 9), grid(9, 0.1), {4}), Error);
}

TEST_CASE("assemble layout") {
  const Matrix zeros = Matrix::Zero(2, 7);
  const RegressionProblem z = assemble(zeros, zeros, ghat_table(2, 3), QuadIndexing(2), {});
  CHECK(z.data.cols() == 22);
  CHECK(z.data.col(0) == Vector::Ones(7));
  CHECK(z.data.rightCols(21).isZero(0.0));
  CHECK(z.higher.begin == 6);
  CHECK(z.higher.size == 16);

  const RegressionProblem lin = assemble(Matrix::Ones(3, 6), Matrix::Zero(3, 6), std::nullopt, QuadIndexing(3), {});
  CHECK(lin.data.cols() == 1 + 3 + 6);
  CHECK(lin.higher.size == 0);

  const Matrix s = testutil::random_matrix(2, 5, 1);
  const Matrix ds = testutil::random_matrix(2, 5, 2);
  const MonomialTable t = ghat_table(2, 2);
  const RegressionProblem p = assemble(s, ds, t, QuadIndexing(2), {});
  for (Index j = 0; j < 5; ++j) {
    Vector row(1 + 2 + 3 + 7);
    row << 1.0, s.col(j), quad_eval(s.col(j), QuadIndexing(2)), ghat_eval(s.col(j), t);
    CHECK((p.data.row(j).transpose() - row).norm() <= 1e-14 * row.norm());
    CHECK(p.target.row(j) == ds.col(j).transpose());
  }

  Matrix bad = s;
  bad(1, 3) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(assemble(bad, ds, t, QuadIndexing(2), {}),
                       "non-finite regression features in snapshot column 3", Error);
}

TEST_CASE("penalty diagonal follows the blocks") {
  const RegressionProblem p =
      assemble(Matrix::Ones(2, 6), Matrix::Zero(2, 6), ghat_table(2, 2), QuadIndexing(2), {1.0, 2.0, 3.0});
  const Vector w = p.penalty_diagonal();
  CHECK(w.head(3) == Vector::Constant(3, 1.0));
  CHECK(w.segment(3, 3) == Vector::Constant(3, 2.0));
  CHECK(w.tail(7) == Vector::Constant(7, 3.0));
}

TEST_CASE("zero target with ridge gives zero operators") {
  const Matrix s = testutil::random_matrix(2, 20, 3);
  const InferredOperators ops =
      solve(assemble(s, Matrix::Zero(2, 20), ghat_table(2, 2), QuadIndexing(2), {1e-3, 1e-3, 1e-3}));
  CHECK(ops.c_hat.isZero(0.0));
  CHECK(ops.A_hat.isZero(0.0));
  CHECK(ops.H_hat.isZero(0.0));
  CHECK(ops.P_hat.isZero(0.0));
}

TEST_CASE("planted linear operators are recovered") {
  Matrix A(3, 3);
  A << -0.5, 1.0, 0.0, -1.0, -0.3, 0.2, 0.0, -0.2, -0.8;
  Vector c(3);
  c << 0.1, -0.2, 0.3;
  const auto f = [&](const Vector& s) -> Vector { return c + A * s; };
  Vector s0(3);
  s0 << 1.0, -0.5, 2.0;
  const Matrix s = trajectory(f, s0, 40, 0.05);
  RegressionProblem p = assemble(s, apply(f, s).eval(), std::nullopt, QuadIndexing(3), {});
  // Linear subspace variant without the quadratic block.
  p.data.conservativeResize(Eigen::NoChange, 4);
  p.quadratic.size = 0;
  p.higher = {4, 0};
  const InferredOperators ops = solve(p);
  CHECK((ops.c_hat - c).norm() <= 1e-8);
  CHECK((ops.A_hat - A).norm() <= 1e-8);
}

TEST_CASE("planted quadratic operator is recovered") {
  Matrix A(2, 2);
  A << -0.2, 1.0, -1.0, -0.1;
  Matrix H(2, 3);
  H << 0.3, -0.1, 0.05, -0.2, 0.15, 0.1;
  Vector c(2);
  c << 0.05, -0.02;
  const QuadIndexing qi(2);
  const auto f = [&](const Vector& s) -> Vector { return c + A * s + H * quad_eval(s, qi); };
  const Matrix s = pooled_trajectories(f, 2);
  const InferredOperators ops = solve(assemble(s, apply(f, s), std::nullopt, qi, {1e-12, 1e-12, 0.0}));
  CHECK((ops.H_hat - H).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((ops.A_hat - A).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("ill-posed regressions are reported") {
  const Matrix s = Matrix::Ones(2, 10);
  CHECK_THROWS_WITH_AS(solve(assemble(s, Matrix::Zero(2, 10), std::nullopt, QuadIndexing(2), {})),
                       "ill-posed regression; increase regularization", Error);
  CHECK_NOTHROW(solve(assemble(s, Matrix::Zero(2, 10), std::nullopt, QuadIndexing(2), {1e-6, 1e-6, 0})));
}

TEST_CASE("solve is invariant to row permutations") {
  const Matrix s = testutil::random_matrix(3, 30, 4);
  const Matrix ds = testutil::random_matrix(3, 30, 5);
  const RegressionProblem p = assemble(s, ds, ghat_table(3, 2), QuadIndexing(3), {1e-2, 1e-1, 1.0});
  RegressionProblem q = p;
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(30);
  perm.setIdentity();
  std::reverse(perm.indices().data(), perm.indices().data() + 30);
  q.data = perm * p.data;
  q.target = perm * p.target;
  const InferredOperators a = solve(p);
  const InferredOperators b = solve(q);
  CHECK((a.A_hat - b.A_hat).norm() <= 1e-10 * a.A_hat.norm());
  CHECK((a.P_hat - b.P_hat).norm() <= 1e-10 * std::max(1.0, a.P_hat.norm()));
}

TEST_CASE("subproblems are independent across target columns") {
  const Matrix s = testutil::random_matrix(3, 40, 6);
  const Matrix ds = testutil::random_matrix(3, 40, 7);
  const RegressionProblem p = assemble(s, ds, ghat_table(3, 2), QuadIndexing(3), {1e-3, 1e-2, 1e-1});
  const InferredOperators joint = solve(p);
  for (int i = 0; i < 3; ++i) {
    RegressionProblem one = p;
    one.target = p.target.col(i);
    one.r = 1;
    const InferredOperators single = solve(one);
    CHECK(std::abs(single.c_hat(0) - joint.c_hat(i)) <= 1e-12);
    CHECK((single.A_hat.row(0) - joint.A_hat.row(i)).norm() <= 1e-12);
    CHECK((single.P_hat.row(0) - joint.P_hat.row(i)).norm() <= 1e-12);
  }
}

TEST_CASE("a huge penalty on one block drives it to zero") {
  const Matrix s = testutil::random_matrix(2, 30, 8);
  const Matrix ds = testutil::random_matrix(2, 30, 9);
  const RegressionProblem p = assemble(s, ds, ghat_table(2, 2), QuadIndexing(2), {1e-6, 1e-6, 1e14});
  const InferredOperators ops = solve(p);
  CHECK(ops.P_hat.norm() <= 1e-6);
  Matrix x(p.data.cols(), 2);
  x << ops.c_hat.transpose(), ops.A_hat.transpose(), ops.H_hat.transpose(), ops.P_hat.transpose();
  CHECK((p.data * x - p.target).norm() <= p.target.norm());
}

TEST_CASE("subspace regression equals the manifold variant without the higher block") {
  const Matrix data = testutil::random_matrix(10, 30, 10);
  std::vector<double> t = grid(30, 0.1);
  const CenteredSnapshots cs = center(SnapshotSet::make(data, t), ColumnMean{});
  LearnConfig cfg;
  cfg.r = 3;
  cfg.q = 0;
  const LearnedManifold lm = learn_pod(cs, cfg);
  const Lambdas lam{1e-3, 1e-2, 0.0};
  const InferredOperators a = solve(build_regression(lm, cs, RomMethod::OpInf, lam));
  const InferredOperators b = solve(build_regression(lm, cs, RomMethod::Mpod, lam));
  CHECK_FALSE(a.has_higher_order());
  CHECK_FALSE(b.has_higher_order());
  CHECK((a.A_hat - b.A_hat).norm() == 0.0);
  CHECK((a.H_hat - b.H_hat).norm() == 0.0);
}
