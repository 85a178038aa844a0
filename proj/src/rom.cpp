#include "pmor/rom.hpp"

#include <cmath>

namespace pmor {

ReducedModel::ReducedModel(InferredOperators ops, PolynomialManifold manifold)
    : ops_(std::move(ops)), manifold_(std::move(manifold)), quad_idx_(ops_.r()) {
  const Index r = ops_.r();
  require(r >= 1, "reduced model needs r >= 1");
  require(manifold_.r() == r, "operator and manifold dimensions differ");
  require(ops_.A_hat.rows() == r && ops_.A_hat.cols() == r, "A_hat shape mismatch");
  require(ops_.H_hat.rows() == r && ops_.H_hat.cols() == quad_idx_.size(), "H_hat shape mismatch");
  Index d = 0;
  if (ops_.has_higher_order()) {
    const MonomialTable& t = *ops_.table;
    require(t.r == r, "monomial table dimension mismatch");
    require(t.p == manifold_.p, "monomial table degree does not match manifold");
    require(ops_.P_hat.rows() == r && ops_.P_hat.cols() == t.size(), "P_hat shape mismatch");
    d = t.size();
    max_power_ = std::max(2, t.max_exponent());
    for (const auto& e : t.exponents) {
      std::vector<std::pair<int, int>> terms;
      for (int i = 0; i < r; ++i) {
        if (e[static_cast<std::size_t>(i)] > 0) terms.emplace_back(i, e[static_cast<std::size_t>(i)]);
      }
      monomials_.push_back(std::move(terms));
    }
  }
  operator_.resize(r, 1 + r + quad_idx_.size() + d);
  operator_.col(0) = ops_.c_hat;
  operator_.middleCols(1, r) = ops_.A_hat;
  operator_.middleCols(1 + r, quad_idx_.size()) = ops_.H_hat;
  if (d > 0) operator_.rightCols(d) = ops_.P_hat;
}

void ReducedModel::features(const Vector& s, Vector& z) const {
  const Index r = s.size();
  z.resize(operator_.cols());
  z(0) = 1.0;
  z.segment(1, r) = s;
  Index pos = 1 + r;
  for (const auto& [i, j] : quad_idx_.pairs) z(pos++) = s(i) * s(j);
  if (monomials_.empty()) return;
  // pw(i, e) = s_i^e by repeated multiplication.
  Matrix pw(r, max_power_ + 1);
  pw.col(0).setOnes();
  for (int e = 1; e <= max_power_; ++e) pw.col(e) = pw.col(e - 1).cwiseProduct(s);
  for (const auto& terms : monomials_) {
    double v = 1.0;
    for (const auto& [i, e] : terms) v *= pw(i, e);
    z(pos++) = v;
  }
}

void ReducedModel::rhs(const Vector& s_hat, Vector& out) const {
  Vector z;
  features(s_hat, z);
  out.noalias() = operator_ * z;
  op_count_ += static_cast<std::uint64_t>(operator_.rows() * operator_.cols());
}

Vector ReducedModel::rhs(const Vector& s_hat) const {
  require(s_hat.size() == r(), "rhs: state dimension mismatch");
  Vector out;
  rhs(s_hat, out);
  return out;
}

void IntegrationConfig::validate() const {
  require(dt_output > 0.0, "dt_output must be positive");
  require(substeps >= 1, "substeps must be at least 1");
  require(blowup_threshold > 0.0, "blowup threshold must be positive");
}

Matrix integrate(const ReducedModel& model, const Vector& s_hat0, Index n_outputs,
                 const IntegrationConfig& cfg) {
  cfg.validate();
  require(n_outputs >= 0, "n_outputs must be nonnegative");
  require(s_hat0.size() == model.r(), "initial state dimension mismatch");
  if (!s_hat0.allFinite()) throw Error("non-finite initial state");

  const double h = cfg.dt_output / cfg.substeps;
  Matrix out(model.r(), n_outputs + 1);
  out.col(0) = s_hat0;
  Vector s = s_hat0, k1, k2, k3, k4, tmp;
  for (Index j = 1; j <= n_outputs; ++j) {
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      model.rhs(s, k1);
      tmp = s + 0.5 * h * k1;
      model.rhs(tmp, k2);
      tmp = s + 0.5 * h * k2;
      model.rhs(tmp, k3);
      tmp = s + h * k3;
      model.rhs(tmp, k4);
      s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > cfg.blowup_threshold) {
      throw UnstableRomError("unstable ROM", cfg.t0 + static_cast<double>(j - 1) * cfg.dt_output);
    }
    out.col(j) = s;
  }
  return out;
}

Vector encode_initial(const ReducedModel& model, const Vector& s0, InitialEncoding method) {
  if (method == InitialEncoding::Linear) return encode_linear(model.manifold(), s0);
  return encode_nls(model.manifold(), s0).s_hat;
}

Matrix predict_full(const ReducedModel& model, const Vector& s0, Index n_outputs,
                    const IntegrationConfig& cfg, InitialEncoding method) {
  const Vector init = encode_initial(model, s0, method);
  return decode_columns(model.manifold(), integrate(model, init, n_outputs, cfg));
}

Json model_to_json(const ReducedModel& model) {
  const InferredOperators& ops = model.ops();
  Json operators{{"c_hat", matrix_to_b64(ops.c_hat)},
                 {"A_hat", matrix_to_b64(ops.A_hat)},
                 {"H_hat", matrix_to_b64(ops.H_hat)}};
  Json j{{"type", "reduced_model"}, {"r", model.r()}, {"operators", std::move(operators)}};
  if (ops.has_higher_order()) {
    j["operators"]["P_hat"] = matrix_to_b64(ops.P_hat);
    j["monomial_table"] = table_to_json(*ops.table);
  } else {
    j["monomial_table"] = nullptr;
  }
  j["manifold"] = manifold_to_json(model.manifold());
  return j;
}

ReducedModel model_from_json(const Json& j) {
  InferredOperators ops;
  PolynomialManifold m;
  try {
    if (j.at("type").get<std::string>() != "reduced_model") {
      throw Error("schema mismatch: not a reduced_model document");
    }
    const Json& o = j.at("operators");
    const Matrix c = matrix_from_b64(o.at("c_hat").get<std::string>());
    if (c.cols() != 1) throw Error("schema mismatch: c_hat must be a column");
    ops.c_hat = c.col(0);
    ops.A_hat = matrix_from_b64(o.at("A_hat").get<std::string>());
    ops.H_hat = matrix_from_b64(o.at("H_hat").get<std::string>());
    if (!j.at("monomial_table").is_null()) {
      ops.table = table_from_json(j.at("monomial_table"));
      ops.P_hat = matrix_from_b64(o.at("P_hat").get<std::string>());
    }
    m = manifold_from_json(j.at("manifold"));
  } catch (const Json::exception& ex) {
    throw Error(std::string("reduced model schema mismatch: ") + ex.what());
  }
  return ReducedModel(std::move(ops), std::move(m));
}

void save_reduced_model(const ReducedModel& model, const std::filesystem::path& path) {
  write_json(model_to_json(model), path);
}

ReducedModel load_reduced_model(const std::filesystem::path& path) {
  return model_from_json(read_json(path));
}

}  // namespace pmor
