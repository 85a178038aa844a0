#include "pmor/opinf.hpp"

#include <cmath>

namespace pmor {

Vector RegressionProblem::penalty_diagonal() const {
  Vector w = Vector::Zero(data.cols());
  w.segment(constant.begin, constant.size).setConstant(lambdas.lambda1);
  w.segment(linear.begin, linear.size).setConstant(lambdas.lambda1);
  w.segment(quadratic.begin, quadratic.size).setConstant(lambdas.lambda2);
  if (higher.size > 0) w.segment(higher.begin, higher.size).setConstant(lambdas.lambda3);
  return w;
}

Matrix time_derivatives(const Matrix& s_hat, const std::vector<double>& times,
                        const std::vector<Index>& trajectory_breaks) {
  const Index k = s_hat.cols();
  require(static_cast<Index>(times.size()) == k, "time stamps must match column count");
  Matrix out(s_hat.rows(), k);
  Index begin = 0;
  std::vector<Index> ends = trajectory_breaks;
  ends.push_back(k);
  for (Index end : ends) {
    require(end - begin >= 5, "trajectory shorter than 5 snapshots");
    const double dt = times[static_cast<std::size_t>(begin + 1)] - times[static_cast<std::size_t>(begin)];
    require(dt > 0.0, "time stamps must increase");
    for (Index j = begin + 1; j < end; ++j) {
      const double step = times[static_cast<std::size_t>(j)] - times[static_cast<std::size_t>(j - 1)];
      if (std::abs(step - dt) > 1e-10 * dt) {
        throw Error("nonuniform time spacing within trajectory");
      }
    }
    const double h12 = 12.0 * dt;
    auto f = [&](Index j) { return s_hat.col(j); };
    for (Index j = begin; j < end; ++j) {
      if (j - begin >= 2 && end - 1 - j >= 2) {
        out.col(j) = (f(j - 2) - 8.0 * f(j - 1) + 8.0 * f(j + 1) - f(j + 2)) / h12;
      } else if (j - begin < 2) {
        out.col(j) = (-25.0 * f(j) + 48.0 * f(j + 1) - 36.0 * f(j + 2) + 16.0 * f(j + 3) -
                      3.0 * f(j + 4)) /
                     h12;
      } else {
        out.col(j) = (25.0 * f(j) - 48.0 * f(j - 1) + 36.0 * f(j - 2) - 16.0 * f(j - 3) +
                      3.0 * f(j - 4)) /
                     h12;
      }
    }
    begin = end;
  }
  return out;
}

RegressionProblem assemble(const Matrix& s_hat, const Matrix& derivs,
                           const std::optional<MonomialTable>& table,
                           const QuadIndexing& quad_idx, const Lambdas& lambdas) {
  const Index r = s_hat.rows();
  const Index k = s_hat.cols();
  require(derivs.rows() == r && derivs.cols() == k, "derivative matrix shape mismatch");
  require(quad_idx.r == r, "quadratic indexing dimension mismatch");
  require(!table || table->r == r, "monomial table dimension mismatch");
  require(lambdas.lambda1 >= 0 && lambdas.lambda2 >= 0 && lambdas.lambda3 >= 0,
          "regularization must be nonnegative");

  RegressionProblem prob;
  prob.r = static_cast<int>(r);
  prob.lambdas = lambdas;
  prob.table = table;
  prob.constant = {0, 1};
  prob.linear = {1, r};
  prob.quadratic = {1 + r, quad_idx.size()};
  prob.higher = {1 + r + quad_idx.size(), table ? table->size() : 0};
  const Index cols = prob.higher.begin + prob.higher.size;

  prob.data.resize(k, cols);
  prob.data.col(0).setOnes();
  prob.data.middleCols(prob.linear.begin, r) = s_hat.transpose();
  prob.data.middleCols(prob.quadratic.begin, prob.quadratic.size) =
      quad_columns(s_hat, quad_idx).transpose();
  if (table) {
    prob.data.middleCols(prob.higher.begin, prob.higher.size) =
        ghat_columns(s_hat, *table).transpose();
  }
  for (Index j = 0; j < k; ++j) {
    if (!prob.data.row(j).allFinite()) {
      throw Error("non-finite regression features in snapshot column " + std::to_string(j));
    }
  }
  prob.target = derivs.transpose();
  if (!prob.target.allFinite()) throw Error("non-finite time derivatives");
  return prob;
}

InferredOperators solve(const RegressionProblem& prob) {
  const Index k = prob.data.rows();
  const Index cols = prob.data.cols();
  const Index r = prob.r;
  const Vector w = prob.penalty_diagonal();

  Matrix lhs(k + cols, cols);
  lhs.topRows(k) = prob.data;
  lhs.bottomRows(cols) = w.cwiseSqrt().asDiagonal();
  Matrix rhs = Matrix::Zero(k + cols, r);
  rhs.topRows(k) = prob.target;

  Matrix x;
  if ((w.array() > 0.0).all()) {
    x = lhs.householderQr().solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(lhs);
    if (qr.rank() < cols) throw Error("ill-posed regression; increase regularization");
    x = qr.solve(rhs);
  }

  InferredOperators ops;
  const Matrix xt = x.transpose();  // r x cols
  ops.c_hat = xt.col(prob.constant.begin);
  ops.A_hat = xt.middleCols(prob.linear.begin, prob.linear.size);
  ops.H_hat = xt.middleCols(prob.quadratic.begin, prob.quadratic.size);
  if (prob.table) {
    ops.P_hat = xt.middleCols(prob.higher.begin, prob.higher.size);
    ops.table = prob.table;
  }
  return ops;
}

}  // namespace pmor
