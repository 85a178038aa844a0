#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pmor/common.hpp"

namespace pmor {

/// Snapshot matrix: one state per column, possibly pooled from several
/// trajectories. `trajectory_breaks` holds the first column index of every
/// trajectory after the first one.
struct SnapshotSet {
  Matrix data;
  std::vector<double> times;
  std::vector<Index> trajectory_breaks;
  std::vector<double> param_labels;

  /// Validates the invariants and builds the set. Single-column sets are
  /// allowed here so that centering can be exercised on them; learners
  /// enforce their own minimum column count.
  static SnapshotSet make(Matrix data, std::vector<double> times,
                          std::vector<Index> trajectory_breaks = {},
                          std::vector<double> param_labels = {});

  /// Uniformly spaced single trajectory starting at t0.
  static SnapshotSet uniform(Matrix data, double dt, double t0 = 0.0);

  Index n() const { return data.rows(); }
  Index k() const { return data.cols(); }

  /// [begin, end) column ranges, one per trajectory.
  std::vector<std::pair<Index, Index>> trajectory_ranges() const;
};

/// Concatenates trajectories column-wise, recording the breaks.
SnapshotSet concatenate(const std::vector<SnapshotSet>& parts);

struct CenteredSnapshots {
  Matrix centered;
  Vector s_ref;
  std::vector<double> times;
  std::vector<Index> trajectory_breaks;
  std::vector<double> param_labels;

  std::vector<std::pair<Index, Index>> trajectory_ranges() const;
};

struct ColumnMean {};
struct InitialConditionMean {};
struct CustomReference {
  Vector s_ref;
};
using CenterMode = std::variant<ColumnMean, InitialConditionMean, CustomReference>;

CenteredSnapshots center(const SnapshotSet& set, const CenterMode& mode);

struct SvdSpectrum {
  Vector singular_values;
  // cumulative_energy(r-1) is the energy fraction captured by r modes.
  Vector cumulative_energy;

  double energy(Index r) const;
};

SvdSpectrum svd_spectrum(const CenteredSnapshots& cs);
SvdSpectrum svd_spectrum(const Matrix& centered);

/// Thin SVD wrapper used by the learners: returns (U, sigma).
std::pair<Matrix, Vector> left_singular_vectors(const Matrix& a);

// ---------------------------------------------------------------------------
// Matrix files.
//
// SMAT: "SMAT1\n", rows (u64 LE), cols (u64 LE), then rows*cols float64 LE
// values in column-major order.
// CSV: first line "rows,cols", then one column of the matrix per line.

enum class MatrixFormat { Smat, Csv };

MatrixFormat format_from_path(const std::filesystem::path& path);
std::optional<MatrixFormat> parse_format(std::string_view name);

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
void save_matrix(const Matrix& m, const std::filesystem::path& path, MatrixFormat format);

inline Matrix load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_from_path(path));
}
inline void save_matrix(const Matrix& m, const std::filesystem::path& path) {
  save_matrix(m, path, format_from_path(path));
}

std::string encode_smat(const Matrix& m);
Matrix decode_smat(std::string_view bytes);

std::string encode_csv(const Matrix& m);
Matrix decode_csv(std::string_view text);

inline constexpr std::string_view kSmatMagic = "SMAT1\n";
inline constexpr std::size_t kSmatHeaderBytes = 16;

}  // namespace pmor
