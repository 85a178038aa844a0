#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "pmor/common.hpp"
#include "pmor/manifold.hpp"

namespace testutil {

inline pmor::Matrix random_matrix(pmor::Index rows, pmor::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  pmor::Matrix m(rows, cols);
  for (pmor::Index j = 0; j < cols; ++j)
    for (pmor::Index i = 0; i < rows; ++i) m(i, j) = dist(gen);
  return m;
}

inline pmor::Matrix random_orthonormal(pmor::Index rows, pmor::Index cols, std::uint64_t seed) {
  Eigen::HouseholderQR<pmor::Matrix> qr(random_matrix(rows, cols, seed));
  return qr.householderQ() * pmor::Matrix::Identity(rows, cols);
}

// Random valid manifold with [V V_bar] orthonormal and small Xi.
inline pmor::PolynomialManifold random_manifold(int n, int r, int q, int p, std::uint64_t seed,
                                                double xi_scale = 0.3) {
  const pmor::Matrix w = random_orthonormal(n, r + q, seed);
  pmor::PolynomialManifold m;
  m.s_ref = random_matrix(n, 1, seed + 1).col(0);
  m.V = w.leftCols(r);
  m.V_bar = w.rightCols(q);
  m.Xi = q > 0 ? pmor::Matrix(xi_scale * random_matrix(q, (p - 1) * r, seed + 2))
               : pmor::Matrix(0, 0);
  m.p = p;
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pmor_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
