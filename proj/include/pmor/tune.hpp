#pragma once

#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pmor/learn.hpp"
#include "pmor/opinf.hpp"
#include "pmor/rom.hpp"
#include "pmor/snapshot.hpp"

namespace pmor {

/// OpInf: affine POD subspace (q = 0) with a quadratic model.
/// Mpod: POD-based polynomial manifold. Mam: alternating-minimization manifold.
enum class RomMethod { OpInf, Mpod, Mam };

std::string_view method_name(RomMethod m);
std::optional<RomMethod> parse_method(std::string_view name);

/// Linear encoding for the subspace and POD-based models, nonlinear least
/// squares for the alternating-minimization model.
InitialEncoding default_encoding(RomMethod m);

/// Manifold and training coordinates for one method. For OpInf the config's
/// q is ignored.
LearnedManifold fit_manifold(const CenteredSnapshots& cs, RomMethod method, const LearnConfig& cfg,
                             LearnReport* report = nullptr);

/// Regression data for a fitted manifold; lambdas can be swapped afterwards.
RegressionProblem build_regression(const LearnedManifold& lm, const CenteredSnapshots& cs,
                                   RomMethod method, const Lambdas& lambdas = {});

ReducedModel train_rom(const LearnedManifold& lm, const CenteredSnapshots& cs, RomMethod method,
                       const Lambdas& lambdas);

/// Integrates the model from the encoded first column of every trajectory in
/// `set` and returns the predicted snapshots in the same layout.
Matrix predict_trajectories(const ReducedModel& model, const SnapshotSet& set,
                            InitialEncoding ic, const IntegrationConfig& base);

struct Hyperparameters {
  double gamma = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
};

struct Grid {
  std::vector<double> gamma_values;
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;
  std::vector<double> lambda3_values;

  /// 1e-6 ... 1e3, ten log-spaced points per lambda; gamma gets 0 as well.
  static Grid default_grid();
  static std::vector<double> log_points(double lo, double hi, int count);
  void validate() const;
};

struct TuneEntry {
  Hyperparameters params;
  double score = 0.0;  // +inf when unstable
  bool stable = true;
};

struct TuneResult {
  Hyperparameters best;
  double score = 0.0;
  std::vector<TuneEntry> table;
};

struct TuneSettings {
  RomMethod method = RomMethod::Mpod;
  LearnConfig learn;  // gamma is overridden by the grid
  CenterMode centering = ColumnMean{};
  int substeps = 10;
  double blowup_threshold = 1e6;
  /// Extra output steps integrated past the end of each training trajectory.
  /// A cell whose ROM leaves the bound below anywhere in that extended run is
  /// flagged unstable; the score itself only uses the training window.
  Index stability_horizon = 0;
  /// Bound on max|s_hat| during the extended run, as a multiple of the largest
  /// training coordinate magnitude. Infinity disables the check.
  double growth_limit = std::numeric_limits<double>::infinity();
  /// Stable cells scoring within this relative margin of the minimum count as
  /// tied, and the tie goes to the most regularized cell. 0 means exact ties.
  double tie_tolerance = 0.0;
};

/// Scores every grid cell by the relative state error of the integrated ROM
/// against the training snapshots. Manifolds are fitted once per gamma. For
/// OpInf gamma and lambda3 have no effect and are collapsed to 0.
TuneResult grid_search(const SnapshotSet& training, const TuneSettings& settings, const Grid& grid);

/// CSV with columns gamma,lambda1,lambda2,lambda3,error,stable.
void write_tune_table(const TuneResult& result, std::ostream& out);

}  // namespace pmor
