#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmor/fom.hpp"
#include "pmor/serialization.hpp"
#include "pmor/tune.hpp"

namespace pmor {

// ---------------------------------------------------------- snapshot files

/// Sidecar path holding times, trajectory breaks and the generating config.
std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path);

/// Writes the matrix (format by extension) and its JSON sidecar.
void write_snapshot_set(const SnapshotSet& set, const std::filesystem::path& path,
                        const Json& config = Json::object());

/// Reads a snapshot matrix. Without a sidecar the set is a single trajectory
/// with unit spacing.
SnapshotSet read_snapshot_set(const std::filesystem::path& path);

// ------------------------------------------------------------------ toy 3D

struct ToyExperiment {
  LearnConfig learn;  // r = 2, q = 1, p = 3 unless the recipe says otherwise
  ToyExperiment();
};

struct ToyResult {
  double pod_error = 0.0;
  double mpod_error = 0.0;
  double mam_error = 0.0;
  int am_iterations = 0;
  bool am_converged = false;
};

ToyResult run_toy(const ToyExperiment& exp);

// ------------------------------------------------------------- shared bits

/// Outcome of one ROM variant after tuning and evaluation.
struct MethodOutcome {
  std::string label;
  RomMethod method = RomMethod::OpInf;
  int p = 2;
  Hyperparameters params;
  double tune_score = 0.0;
  double training_error = 0.0;
  double prediction_error = 0.0;  // +inf when the prediction blew up
  bool prediction_stable = true;
  double last_valid_time = 0.0;   // only meaningful when !prediction_stable
  double energy = 0.0;
  int am_iterations = 0;
  bool horizon_check_passed = true;
  bool tuned = true;  // false when no grid cell gave a stable model
  std::vector<double> per_trajectory_train;
  std::vector<double> per_trajectory_test;
};

Json outcome_to_json(const MethodOutcome& o);

/// Axis given either as a list or as {"log": [lo, hi, count]}.
std::vector<double> grid_axis_from_json(const Json& j);
Grid grid_from_json(const Json& j, const Grid& defaults);

// -------------------------------------------------------------- Allen-Cahn

struct AllenCahnExperiment {
  AllenCahnConfig fom;
  std::vector<double> train_mu{0.50, 0.55, 0.60};
  int n_test = 10;
  double test_mu_lo = 0.5;
  double test_mu_hi = 0.6;
  std::uint64_t seed = 20240601;
  int r = 2;
  int q = 18;
  std::vector<int> p_values{2, 3, 4};
  double gamma = 1e-2;
  Grid grid = Grid::default_grid();
  int substeps = 10;
  double tie_tolerance = 1e-4;
};

struct AllenCahnResult {
  std::vector<double> test_mu;
  double energy_r = 0.0;               // r-mode energy of the lifted training data
  double projection_error_rq = 0.0;    // sqrt(1 - energy(r + q)), relative Frobenius norm
  std::vector<MethodOutcome> methods;  // OpInf, then MPOD for each p
};

AllenCahnResult run_allen_cahn(const AllenCahnExperiment& exp);

// --------------------------------------------------------------------- KdV

struct KdvExperiment {
  KdvConfig fom;
  double t_train = 0.2;
  int r = 5;
  int q = 9;
  int p = 2;
  double gamma = 1e-3;
  std::vector<RomMethod> methods{RomMethod::OpInf, RomMethod::Mpod, RomMethod::Mam};
  Grid grid = Grid::default_grid();
  int substeps = 2;
  double tie_tolerance = 1e-4;
  /// Require tuned models to stay below the blowup threshold up to t_final.
  bool stability_check = true;
  int spectrum_modes = 14;
};

struct KdvResult {
  double energy_spectrum = 0.0;  // cumulative energy of spectrum_modes modes
  std::vector<double> x;
  Matrix reference;              // full FOM trajectory
  std::vector<double> times;
  std::vector<MethodOutcome> methods;
  std::vector<Matrix> predictions;  // per method; empty when unstable
};

KdvResult run_kdv(const KdvExperiment& exp);

// ----------------------------------------------------------------- recipes

ToyExperiment toy_from_json(const Json& j);
AllenCahnExperiment allen_cahn_from_json(const Json& j);
KdvExperiment kdv_from_json(const Json& j);

/// Runs the recipe, writes artifacts plus summary.json into `out_dir`, and
/// returns the summary document.
Json reproduce(const Json& recipe, const std::filesystem::path& out_dir);

/// CSV rows t,x,reference,<method>... for the requested snapshot times of a
/// KdV run directory written by reproduce().
void export_kdv_slices(const std::filesystem::path& run_dir, const std::vector<double>& times,
                       std::ostream& out);

}  // namespace pmor
