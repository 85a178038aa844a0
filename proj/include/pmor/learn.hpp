#pragma once

#include <optional>
#include <vector>

#include "pmor/common.hpp"
#include "pmor/manifold.hpp"
#include "pmor/snapshot.hpp"

namespace pmor {

struct LearnConfig {
  int r = 1;
  int q = 0;
  int p = 2;
  double gamma = 0.0;
  double am_energy_tolerance = 1e-3;
  int am_max_outer_iterations = 100;
  EncodeSettings encode;

  void validate() const;
};

struct LearnedManifold {
  PolynomialManifold manifold;
  Matrix s_hat;  // r x k coordinates of the training snapshots
};

struct LearnReport {
  // Entry 0 is the initial iterate; entry i the state after outer iteration i.
  std::vector<double> objective_history;
  std::vector<double> energy_history;
  int iterations = 0;
  bool converged = false;
  bool procrustes_degenerate = false;
};

struct ProcrustesResult {
  Matrix omega;
  bool degenerate = false;
};

/// argmin ||centered - Omega C||_F over matrices with orthonormal columns.
ProcrustesResult procrustes(const Matrix& centered, const Matrix& coefficients);

/// Ridge solve for Xi given the basis and coordinates:
/// argmin 1/2 ||V_bar^T centered - Xi g(S_hat)||_F^2 + gamma/2 ||Xi||_F^2.
/// V only participates through the orthonormality precondition.
Matrix solve_xi(const Matrix& V, const Matrix& V_bar, const Matrix& s_hat, const Matrix& centered,
                double gamma, int p);

/// Objective F + gamma/2 ||Xi||^2 of the representation learning problem.
double learning_objective(const PolynomialManifold& m, const Matrix& s_hat,
                          const Matrix& centered, double gamma);

/// Energy fraction of the centered data captured by the representation.
double representation_energy(const PolynomialManifold& m, const Matrix& s_hat,
                             const Matrix& centered);

/// POD-based learner: POD basis split into V and V_bar, coordinates by
/// projection, Xi by ridge regression.
LearnedManifold learn_pod(const CenteredSnapshots& cs, const LearnConfig& cfg);

/// Alternating minimization over (Omega, Xi, S_hat). Defaults to the POD
/// learner's output as the starting point.
LearnedManifold learn_am(const CenteredSnapshots& cs, const LearnConfig& cfg,
                         const std::optional<LearnedManifold>& init = std::nullopt,
                         LearnReport* report = nullptr);

}  // namespace pmor
