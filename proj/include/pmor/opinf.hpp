#pragma once

#include <optional>
#include <vector>

#include "pmor/common.hpp"
#include "pmor/features.hpp"

namespace pmor {

/// Tikhonov weights: lambda1 on the constant and linear operators, lambda2 on
/// the quadratic operator, lambda3 on the higher-order operator.
struct Lambdas {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
};

struct BlockExtent {
  Index begin = 0;
  Index size = 0;
};

/// Row j of `data` is [1, s_j^T, quad(s_j)^T, ghat(s_j)^T]; row j of
/// `target` is the estimated time derivative at snapshot j.
struct RegressionProblem {
  Matrix data;
  Matrix target;
  BlockExtent constant, linear, quadratic, higher;
  Lambdas lambdas;
  int r = 0;
  std::optional<MonomialTable> table;

  /// Diagonal of the penalty matrix, one entry per data column.
  Vector penalty_diagonal() const;
};

struct InferredOperators {
  Vector c_hat;
  Matrix A_hat;
  Matrix H_hat;  // r x r(r+1)/2, acting on the unique quadratic products
  Matrix P_hat;  // r x d(r,p); 0 x 0 for linear-subspace models
  std::optional<MonomialTable> table;

  int r() const { return static_cast<int>(c_hat.size()); }
  bool has_higher_order() const { return table.has_value() && P_hat.size() > 0; }
};

/// Fourth-order finite differences along each trajectory. Interior points use
/// the five-point central stencil, the two points at each trajectory end use
/// one-sided fourth-order stencils. Stencils never cross a break.
Matrix time_derivatives(const Matrix& s_hat, const std::vector<double>& times,
                        const std::vector<Index>& trajectory_breaks = {});

/// Builds the regression problem. Pass std::nullopt as the table for the
/// linear-subspace variant (constant, linear and quadratic blocks only).
RegressionProblem assemble(const Matrix& s_hat, const Matrix& derivs,
                           const std::optional<MonomialTable>& table,
                           const QuadIndexing& quad_idx, const Lambdas& lambdas);

/// Solves all r decoupled ridge problems through a stacked (augmented)
/// least-squares factorization.
InferredOperators solve(const RegressionProblem& prob);

}  // namespace pmor
