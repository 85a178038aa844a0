#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "pmor/common.hpp"

namespace pmor {

/// Gamma(s) = s_ref + V s + V_bar Xi g(s), with [V V_bar] orthonormal.
/// q = 0 (V_bar and Xi empty) is an ordinary affine POD subspace.
struct PolynomialManifold {
  Vector s_ref;
  Matrix V;
  Matrix V_bar;
  Matrix Xi;
  int p = 2;

  Index n() const { return V.rows(); }
  Index r() const { return V.cols(); }
  Index q() const { return V_bar.cols(); }

  /// Throws if dimensions are inconsistent or max|W^T W - I| > tol.
  void validate(double orthonormality_tol = 1e-10) const;
  double orthonormality_error() const;
};

struct EncodeSettings {
  double function_tolerance = 1e-9;
  int max_iterations = 200;
  /// Empty means start from the linear projection.
  std::optional<Vector> initial_guess;
};

struct EncodeResult {
  Vector s_hat;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

Vector decode(const PolynomialManifold& m, const Vector& s_hat);
Matrix decode_columns(const PolynomialManifold& m, const Matrix& s_hat);

Vector encode_linear(const PolynomialManifold& m, const Vector& s);
Matrix encode_linear_columns(const PolynomialManifold& m, const Matrix& s);

/// Gauss-Newton with Levenberg-Marquardt damping on
/// 1/2 || s - s_ref - V s_hat - V_bar Xi g(s_hat) ||^2.
EncodeResult encode_nls(const PolynomialManifold& m, const Vector& s,
                        const EncodeSettings& settings = {});

/// Same problem, expressed in the [V V_bar] coordinates of the centered state
/// (target = [V V_bar]^T (s - s_ref)). `rest_norm2` is the squared norm of the
/// part of s - s_ref orthogonal to [V V_bar]; it only shifts the objective.
EncodeResult encode_nls_projected(const Vector& target_v, const Vector& target_vbar,
                                  double rest_norm2, const Matrix& Xi, int p,
                                  const Vector& initial_guess, const EncodeSettings& settings);

/// Encodes every column of the centered data (already s_ref-subtracted),
/// warm-started from `initial` (r x k). Columns are independent.
Matrix encode_nls_columns(const PolynomialManifold& m, const Matrix& centered,
                          const Matrix& initial, const EncodeSettings& settings,
                          std::vector<EncodeResult>* details = nullptr);

/// ||S - Gamma(S_hat)||_F / ||S - S_ref||_F.
double relative_state_error(const PolynomialManifold& m, const Matrix& s_hat, const Matrix& s,
                            const Vector& s_ref);

/// ||V S_hat + V_bar Xi g(S_hat)||_F^2 / ||S - S_ref||_F^2.
double energy_metric(const PolynomialManifold& m, const Matrix& s_hat, const Matrix& s,
                     const Vector& s_ref);

void save_model(const PolynomialManifold& m, const std::filesystem::path& path);
PolynomialManifold load_model(const std::filesystem::path& path);

}  // namespace pmor
