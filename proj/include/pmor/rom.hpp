#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pmor/common.hpp"
#include "pmor/features.hpp"
#include "pmor/manifold.hpp"
#include "pmor/opinf.hpp"
#include "pmor/serialization.hpp"

namespace pmor {

/// ds_hat/dt = c + A s_hat + H quad(s_hat) + P ghat(s_hat).
class ReducedModel {
 public:
  ReducedModel() = default;
  ReducedModel(InferredOperators ops, PolynomialManifold manifold);

  const InferredOperators& ops() const { return ops_; }
  const PolynomialManifold& manifold() const { return manifold_; }
  const QuadIndexing& quad_idx() const { return quad_idx_; }
  int r() const { return ops_.r(); }

  /// Length of the feature vector the operators act on: 1 + r + r(r+1)/2 + d.
  Index feature_length() const { return operator_.cols(); }

  void rhs(const Vector& s_hat, Vector& out) const;
  Vector rhs(const Vector& s_hat) const;

  /// Multiply-adds spent in rhs() since construction (or the last reset).
  std::uint64_t operation_count() const { return op_count_; }
  void reset_operation_count() const { op_count_ = 0; }

 private:
  void features(const Vector& s_hat, Vector& z) const;

  InferredOperators ops_;
  PolynomialManifold manifold_;
  QuadIndexing quad_idx_;
  Matrix operator_;  // [c | A | H | P], r x feature_length
  // Sparse form of each ghat monomial: (variable, exponent) pairs.
  std::vector<std::vector<std::pair<int, int>>> monomials_;
  int max_power_ = 2;
  mutable std::uint64_t op_count_ = 0;
};

struct IntegrationConfig {
  double dt_output = 1.0;
  int substeps = 10;
  double blowup_threshold = 1e6;
  double t0 = 0.0;

  void validate() const;
};

/// Classical fixed-step RK4; column j holds the state at t0 + j dt_output.
Matrix integrate(const ReducedModel& model, const Vector& s_hat0, Index n_outputs,
                 const IntegrationConfig& cfg);

enum class InitialEncoding { Linear, Nls };

Vector encode_initial(const ReducedModel& model, const Vector& s0, InitialEncoding method);

Matrix predict_full(const ReducedModel& model, const Vector& s0, Index n_outputs,
                    const IntegrationConfig& cfg, InitialEncoding method);

Json model_to_json(const ReducedModel& model);
ReducedModel model_from_json(const Json& j);
void save_reduced_model(const ReducedModel& model, const std::filesystem::path& path);
ReducedModel load_reduced_model(const std::filesystem::path& path);

}  // namespace pmor
