#include "pmor/manifold.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "pmor/features.hpp"
#include "pmor/serialization.hpp"

namespace pmor {

void PolynomialManifold::validate(double orthonormality_tol) const {
  require(p >= 2, "polynomial order must be at least 2");
  require(s_ref.size() == V.rows(), "s_ref length must equal basis rows");
  require(V.cols() >= 1, "manifold needs r >= 1");
  if (V_bar.cols() > 0) {
    require(V_bar.rows() == V.rows(), "V and V_bar row mismatch");
    require(Xi.rows() == V_bar.cols() && Xi.cols() == (p - 1) * V.cols(),
            "Xi must be q x (p-1)r");
  } else {
    require(Xi.size() == 0, "Xi must be empty when q = 0");
  }
  const double err = orthonormality_error();
  if (!(err <= orthonormality_tol)) {
    throw Error("basis is not orthonormal (max |W^T W - I| = " + std::to_string(err) + ")");
  }
}

double PolynomialManifold::orthonormality_error() const {
  Matrix w(V.rows(), V.cols() + V_bar.cols());
  w << V, V_bar;
  return (w.transpose() * w - Matrix::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff();
}

Vector decode(const PolynomialManifold& m, const Vector& s_hat) {
  require(s_hat.size() == m.r(), "decode: coordinate length mismatch");
  Vector out = m.s_ref + m.V * s_hat;
  if (m.q() > 0) out.noalias() += m.V_bar * (m.Xi * g_eval(s_hat, m.p));
  return out;
}

Matrix decode_columns(const PolynomialManifold& m, const Matrix& s_hat) {
  require(s_hat.rows() == m.r(), "decode: coordinate length mismatch");
  Matrix out = m.V * s_hat;
  if (m.q() > 0) out.noalias() += m.V_bar * (m.Xi * g_columns(s_hat, m.p));
  out.colwise() += m.s_ref;
  return out;
}

Vector encode_linear(const PolynomialManifold& m, const Vector& s) {
  require(s.size() == m.n(), "encode: state length mismatch");
  return m.V.transpose() * (s - m.s_ref);
}

Matrix encode_linear_columns(const PolynomialManifold& m, const Matrix& s) {
  require(s.rows() == m.n(), "encode: state length mismatch");
  return m.V.transpose() * (s.colwise() - m.s_ref);
}

EncodeResult encode_nls_projected(const Vector& target_v, const Vector& target_vbar,
                                  double rest_norm2, const Matrix& Xi, int p,
                                  const Vector& initial_guess, const EncodeSettings& settings) {
  require(settings.function_tolerance > 0.0, "function tolerance must be positive");
  const Index r = target_v.size();
  const Index q = target_vbar.size();
  require(initial_guess.size() == r, "initial guess length mismatch");

  auto residual = [&](const Vector& x, Vector& f) {
    f.resize(r + q);
    f.head(r) = target_v - x;
    if (q > 0) f.tail(q) = target_vbar - Xi * g_eval(x, p);
  };
  auto objective = [&](const Vector& f) { return 0.5 * (f.squaredNorm() + rest_norm2); };

  EncodeResult res;
  Vector x = initial_guess;
  Vector f;
  residual(x, f);
  if (!f.allFinite()) throw Error("encode diverged");
  double phi = objective(f);
  double mu = 1e-3;

  Matrix jac(r + q, r);
  Vector trial_f;
  for (int it = 0; it < settings.max_iterations; ++it) {
    res.iterations = it + 1;
    // J = -[I; Xi dg/ds]
    jac.topRows(r) = -Matrix::Identity(r, r);
    if (q > 0) jac.bottomRows(q) = -(Xi * g_jacobian(x, p));
    const Vector grad = jac.transpose() * f;
    if (grad.norm() <= 1e-14 * std::max(1.0, std::sqrt(2.0 * phi))) {
      res.converged = true;
      break;
    }
    const Matrix jtj = jac.transpose() * jac;
    bool accepted = false;
    while (!accepted) {
      Matrix lhs = jtj;
      lhs.diagonal().array() += mu;
      const Vector step = lhs.ldlt().solve(-grad);
      const Vector trial = x + step;
      if (!trial.allFinite()) throw Error("encode diverged");
      residual(trial, trial_f);
      const double trial_phi = trial_f.allFinite() ? objective(trial_f) : INFINITY;
      if (trial_phi < phi) {
        const double change = phi - trial_phi;
        x = trial;
        f = trial_f;
        phi = trial_phi;
        mu = std::max(mu / 10.0, 1e-15);
        accepted = true;
        if (change <= settings.function_tolerance * std::max(1.0, phi)) res.converged = true;
      } else {
        mu *= 10.0;
        if (mu > 1e16) {
          // No descent possible at machine precision: x is stationary.
          res.converged = true;
          break;
        }
      }
    }
    if (res.converged) break;
  }
  res.s_hat = std::move(x);
  res.residual_norm = std::sqrt(2.0 * phi);
  return res;
}

EncodeResult encode_nls(const PolynomialManifold& m, const Vector& s,
                        const EncodeSettings& settings) {
  require(s.size() == m.n(), "encode: state length mismatch");
  const Vector centered = s - m.s_ref;
  const Vector a = m.V.transpose() * centered;
  Vector b = m.q() > 0 ? Vector(m.V_bar.transpose() * centered) : Vector();
  const double rest = std::max(0.0, centered.squaredNorm() - a.squaredNorm() - b.squaredNorm());
  const Vector guess = settings.initial_guess ? *settings.initial_guess : a;
  return encode_nls_projected(a, b, rest, m.Xi, m.p, guess, settings);
}

Matrix encode_nls_columns(const PolynomialManifold& m, const Matrix& centered,
                          const Matrix& initial, const EncodeSettings& settings,
                          std::vector<EncodeResult>* details) {
  require(centered.rows() == m.n(), "encode: state length mismatch");
  require(initial.rows() == m.r() && initial.cols() == centered.cols(),
          "encode: initial guess shape mismatch");
  const Matrix a = m.V.transpose() * centered;
  const Matrix b = m.q() > 0 ? Matrix(m.V_bar.transpose() * centered) : Matrix(0, centered.cols());
  const Vector col_norm2 = centered.colwise().squaredNorm().transpose();
  const Index k = centered.cols();
  Matrix out(m.r(), k);
  if (details) details->assign(static_cast<std::size_t>(k), EncodeResult{});
  bool diverged = false;
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < k; ++j) {
    const double rest = std::max(
        0.0, col_norm2(j) - a.col(j).squaredNorm() - (b.rows() > 0 ? b.col(j).squaredNorm() : 0.0));
    try {
      EncodeResult res = encode_nls_projected(a.col(j), b.col(j), rest, m.Xi, m.p,
                                              initial.col(j), settings);
      out.col(j) = res.s_hat;
      if (details) (*details)[static_cast<std::size_t>(j)] = std::move(res);
    } catch (const Error&) {
#pragma omp atomic write
      diverged = true;
    }
  }
  if (diverged) throw Error("encode diverged");
  return out;
}

double relative_state_error(const PolynomialManifold& m, const Matrix& s_hat, const Matrix& s,
                            const Vector& s_ref) {
  require(s.rows() == m.n() && s_hat.cols() == s.cols(), "relative error: shape mismatch");
  const double denom = (s.colwise() - s_ref).norm();
  if (!(denom > 0.0)) throw Error("degenerate data");
  return (s - decode_columns(m, s_hat)).norm() / denom;
}

double energy_metric(const PolynomialManifold& m, const Matrix& s_hat, const Matrix& s,
                     const Vector& s_ref) {
  require(s.rows() == m.n() && s_hat.cols() == s.cols(), "energy metric: shape mismatch");
  const double denom = (s.colwise() - s_ref).squaredNorm();
  if (!(denom > 0.0)) throw Error("degenerate data");
  Matrix rep = m.V * s_hat;
  if (m.q() > 0) rep.noalias() += m.V_bar * (m.Xi * g_columns(s_hat, m.p));
  return rep.squaredNorm() / denom;
}

void save_model(const PolynomialManifold& m, const std::filesystem::path& path) {
  write_json(manifold_to_json(m), path);
}

PolynomialManifold load_model(const std::filesystem::path& path) {
  return manifold_from_json(read_json(path));
}

}  // namespace pmor
