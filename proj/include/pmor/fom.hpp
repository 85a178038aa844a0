#pragma once

#include <cstdint>
#include <vector>

#include "pmor/common.hpp"
#include "pmor/snapshot.hpp"

namespace pmor {

/// Samples of (x, y, sin(x) cos(y)) on the 41 x 41 grid over [0, 4]^2,
/// column index = 41 * ix + iy.
Matrix toy_manifold_data();

/// s_t = kappa s_xx + s - s^3 on [-1, 1], s(-1) = -1, s(1) = 1,
/// s(x, 0) = mu x + (1 - mu) sin(-1.5 pi x).
struct AllenCahnConfig {
  double kappa = 0.01;
  double mu = 0.5;
  int n = 512;
  double t_record = 0.1;
  double t_final = 60.0;
  double internal_dt = 0.01;

  void validate() const;
  std::vector<double> grid() const;
};

/// Semi-implicit finite differences: diffusion backward Euler (tridiagonal
/// solve), reaction forward Euler. Records t = 0 and every t_record after.
SnapshotSet allen_cahn_simulate(const AllenCahnConfig& cfg);

/// Stacks (s, s^2) row-wise: the quadratic lifting of the Allen-Cahn state.
Matrix lift(const Matrix& s);

/// s_t = -alpha s s_x - beta s_xxx, periodic on [-pi, pi),
/// s(x, 0) = 1 + 24 sech^2(sqrt(8) x).
struct KdvConfig {
  double alpha = 4.0;
  double beta = 1.0;
  int n = 256;
  double t_record = 2e-4;
  double t_final = 1.0;
  double internal_dt = 1e-5;

  void validate() const;
  std::vector<double> grid() const;
};

/// Fourier pseudospectral in space with 2/3 dealiasing of s^2, ETDRK4 in time.
SnapshotSet kdv_simulate(const KdvConfig& cfg);

/// Speed of s = 1 + A sech^2(w (x - c t)) under KdV: the pedestal advects at
/// alpha, and the sech^2 profile needs A = 12 beta w^2 / alpha, c' = 4 beta w^2.
double kdv_soliton_speed(const KdvConfig& cfg);

/// `count` parameters drawn uniformly from [lo, hi] with a 64-bit Mersenne
/// twister seeded by `seed`.
std::vector<double> draw_uniform(std::uint64_t seed, int count, double lo, double hi);

}  // namespace pmor
