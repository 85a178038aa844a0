#include "pmor/learn.hpp"

#include <algorithm>
#include <cmath>

#include "pmor/features.hpp"

namespace pmor {

void LearnConfig::validate() const {
  require(r >= 1, "r must be at least 1");
  require(q >= 0, "q must be nonnegative");
  require(p >= 2, "p must be at least 2");
  require(gamma >= 0.0, "gamma must be nonnegative");
  require(am_energy_tolerance > 0.0, "AM energy tolerance must be positive");
  require(am_max_outer_iterations >= 0, "AM iteration cap must be nonnegative");
}

ProcrustesResult procrustes(const Matrix& centered, const Matrix& coefficients) {
  require(centered.cols() == coefficients.cols(), "procrustes: column count mismatch");
  require(coefficients.rows() <= centered.rows(), "procrustes: more basis vectors than rows");
  const Matrix m = centered * coefficients.transpose();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ProcrustesResult out;
  out.omega = svd.matrixU() * svd.matrixV().transpose();
  const Vector& sigma = svd.singularValues();
  if (sigma.size() > 0) {
    const double scale = std::max(sigma(0), 1e-300);
    if (sigma(sigma.size() - 1) <= 1e-12 * scale) out.degenerate = true;
    for (Index i = 1; i < sigma.size(); ++i) {
      if (sigma(i - 1) - sigma(i) <= 1e-12 * scale) out.degenerate = true;
    }
  }
  return out;
}

Matrix solve_xi(const Matrix& V, const Matrix& V_bar, const Matrix& s_hat, const Matrix& centered,
                double gamma, int p) {
  require(gamma >= 0.0, "gamma must be nonnegative");
  require(V.rows() == V_bar.rows() || V_bar.cols() == 0, "solve_xi: basis row mismatch");
  require(s_hat.rows() == V.cols() && s_hat.cols() == centered.cols(),
          "solve_xi: coordinate shape mismatch");
  const Index q = V_bar.cols();
  if (q == 0) return Matrix(0, 0);
  const Matrix d = V_bar.transpose() * centered;  // q x k
  const Matrix g = g_columns(s_hat, p);          // m x k
  const Index m = g.rows();
  const Index k = g.cols();
  // Stacked system [G^T; sqrt(gamma) I] Xi^T = [D^T; 0].
  Matrix lhs(k + m, m);
  lhs.topRows(k) = g.transpose();
  lhs.bottomRows(m) = std::sqrt(gamma) * Matrix::Identity(m, m);
  Matrix rhs = Matrix::Zero(k + m, q);
  rhs.topRows(k) = d.transpose();
  Matrix xi_t;
  if (gamma > 0.0) {
    xi_t = lhs.householderQr().solve(rhs);
  } else {
    xi_t = lhs.completeOrthogonalDecomposition().solve(rhs);
  }
  return xi_t.transpose();
}

double learning_objective(const PolynomialManifold& m, const Matrix& s_hat,
                          const Matrix& centered, double gamma) {
  Matrix resid = centered - m.V * s_hat;
  if (m.q() > 0) resid.noalias() -= m.V_bar * (m.Xi * g_columns(s_hat, m.p));
  return 0.5 * resid.squaredNorm() + 0.5 * gamma * m.Xi.squaredNorm();
}

double representation_energy(const PolynomialManifold& m, const Matrix& s_hat,
                             const Matrix& centered) {
  Matrix rep = m.V * s_hat;
  if (m.q() > 0) rep.noalias() += m.V_bar * (m.Xi * g_columns(s_hat, m.p));
  const double denom = centered.squaredNorm();
  if (!(denom > 0.0)) throw Error("degenerate data");
  return rep.squaredNorm() / denom;
}

LearnedManifold learn_pod(const CenteredSnapshots& cs, const LearnConfig& cfg) {
  cfg.validate();
  const Matrix& c = cs.centered;
  const Index rq = cfg.r + cfg.q;
  require(rq <= std::min(c.rows(), c.cols()), "r + q exceeds min(n, k)");
  auto [u, sigma] = left_singular_vectors(c);
  const double tol = 1e-12 * static_cast<double>(std::max(c.rows(), c.cols())) *
                     (sigma.size() > 0 ? sigma(0) : 0.0);
  if (!(sigma.size() >= rq && sigma(rq - 1) > tol)) throw Error("insufficient data rank");

  LearnedManifold out;
  PolynomialManifold& m = out.manifold;
  m.p = cfg.p;
  m.s_ref = cs.s_ref;
  m.V = u.leftCols(cfg.r);
  m.V_bar = u.middleCols(cfg.r, cfg.q);
  out.s_hat = m.V.transpose() * c;
  m.Xi = solve_xi(m.V, m.V_bar, out.s_hat, c, cfg.gamma, cfg.p);
  return out;
}

LearnedManifold learn_am(const CenteredSnapshots& cs, const LearnConfig& cfg,
                         const std::optional<LearnedManifold>& init, LearnReport* report) {
  cfg.validate();
  const Matrix& c = cs.centered;
  LearnedManifold cur = init ? *init : learn_pod(cs, cfg);
  require(cur.manifold.r() == cfg.r && cur.manifold.q() == cfg.q && cur.manifold.p == cfg.p,
          "AM initial manifold does not match (r, q, p)");
  require(cur.s_hat.rows() == cfg.r && cur.s_hat.cols() == c.cols(),
          "AM initial coordinates have the wrong shape");

  LearnReport rep;
  double energy = representation_energy(cur.manifold, cur.s_hat, c);
  rep.energy_history.push_back(energy);
  rep.objective_history.push_back(learning_objective(cur.manifold, cur.s_hat, c, cfg.gamma));

  for (int it = 0; it < cfg.am_max_outer_iterations; ++it) {
    PolynomialManifold& m = cur.manifold;
    // Step 1: basis by orthogonal Procrustes against [S_hat; Xi g(S_hat)].
    Matrix coeffs(cfg.r + cfg.q, c.cols());
    coeffs.topRows(cfg.r) = cur.s_hat;
    if (cfg.q > 0) coeffs.bottomRows(cfg.q) = m.Xi * g_columns(cur.s_hat, cfg.p);
    ProcrustesResult pr = procrustes(c, coeffs);
    rep.procrustes_degenerate = rep.procrustes_degenerate || pr.degenerate;
    m.V = pr.omega.leftCols(cfg.r);
    m.V_bar = pr.omega.rightCols(cfg.q);
    // Step 2: coefficient matrix.
    m.Xi = solve_xi(m.V, m.V_bar, cur.s_hat, c, cfg.gamma, cfg.p);
    // Step 3: coordinates, warm-started from the previous iterate.
    try {
      cur.s_hat = encode_nls_columns(m, c, cur.s_hat, cfg.encode);
    } catch (const Error&) {
      throw Error("AM diverged");
    }

    const double obj = learning_objective(m, cur.s_hat, c, cfg.gamma);
    if (!std::isfinite(obj)) throw Error("AM diverged");
    const double new_energy = representation_energy(m, cur.s_hat, c);
    rep.objective_history.push_back(obj);
    rep.energy_history.push_back(new_energy);
    rep.iterations = it + 1;
    const double change = std::abs(new_energy - energy);
    energy = new_energy;
    if (change < cfg.am_energy_tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (report) *report = std::move(rep);
  return cur;
}

}  // namespace pmor
