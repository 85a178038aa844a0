#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "pmor/fom.hpp"
#include "pmor/features.hpp"
#include "pmor/learn.hpp"
#include "pmor/manifold.hpp"
#include "pmor/serialization.hpp"
#include "pmor/snapshot.hpp"

using namespace pmor;

namespace {

double objective(const PolynomialManifold& m, const Vector& s, const Vector& s_hat) {
  return 0.5 * (s - decode(m, s_hat)).squaredNorm();
}

}  // namespace

TEST_CASE("decode") {
  const PolynomialManifold m = testutil::random_manifold(8, 2, 3, 3, 1);
  CHECK(decode(m, Vector::Zero(2)) == m.s_ref);

  const PolynomialManifold lin = testutil::random_manifold(8, 2, 0, 2, 2);
  Vector s(2);
  s << 0.3, -1.1;
  CHECK((decode(lin, s) - (lin.s_ref + lin.V * s)).norm() < 1e-14);

  const Vector expect = m.s_ref + m.V * s + m.V_bar * m.Xi * g_eval(s, 3);
  CHECK((decode(m, s) - expect).norm() < 1e-13);
}

TEST_CASE("toy manifold decode has four coefficients") {
  // n = 3, r = 2, q = 1, p = 3: Xi is 1 x 4.
  PolynomialManifold m;
  m.s_ref = Vector::Zero(3);
  m.V = Matrix::Identity(3, 2);
  m.V_bar = Matrix::Identity(3, 3).rightCols(1);
  m.Xi.resize(1, 4);
  m.Xi << 1, 2, 3, 4;
  m.p = 3;
  CHECK_NOTHROW(m.validate());
  Vector s(2);
  s << 0.5, -2;
  const Vector out = decode(m, s);
  CHECK(out(0) == 0.5);
  CHECK(out(1) == -2);
  CHECK(out(2) == doctest::Approx(1 * 0.25 + 2 * 4 + 3 * 0.125 + 4 * -8));
}

TEST_CASE("encode_linear") {
  const PolynomialManifold m = testutil::random_manifold(10, 3, 2, 2, 3);
  CHECK(encode_linear(m, m.s_ref).norm() == 0.0);
  const Vector e1 = encode_linear(m, m.s_ref + m.V.col(0));
  CHECK((e1 - Vector::Unit(3, 0)).norm() < 1e-13);
  CHECK(encode_linear(m, m.s_ref + m.V_bar.col(1)).norm() < 1e-13);
}

TEST_CASE("decode after encode_linear is the identity on the affine span") {
  const PolynomialManifold m = testutil::random_manifold(12, 3, 0, 2, 4);
  const Vector s = m.s_ref + m.V * testutil::random_matrix(3, 1, 5).col(0);
  CHECK((decode(m, encode_linear(m, s)) - s).norm() <= 1e-12 * s.norm());
}

TEST_CASE("encode_nls recovers on-manifold states") {
  const PolynomialManifold m = testutil::random_manifold(15, 2, 4, 3, 6);
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Vector truth = testutil::random_matrix(2, 1, seed).col(0);
    EncodeSettings st;
    st.initial_guess = truth;
    const Vector s = decode(m, truth);
    const EncodeResult res = encode_nls(m, s, st);
    CHECK((res.s_hat - truth).norm() <= 1e-6);
    CHECK((decode(m, res.s_hat) - s).norm() <= 1e-10 * (s - m.s_ref).norm());
    // The reported residual carries the out-of-span part as a difference of
    // squared norms, so it bottoms out near sqrt(eps) relative.
    CHECK(res.residual_norm <= 1e-7 * (s - m.s_ref).norm());
  }
}

TEST_CASE("encode_nls with q = 0 is the linear projection") {
  const PolynomialManifold m = testutil::random_manifold(9, 3, 0, 2, 7);
  const Vector s = testutil::random_matrix(9, 1, 8).col(0);
  const EncodeResult res = encode_nls(m, s);
  CHECK((res.s_hat - encode_linear(m, s)).norm() < 1e-12);
  CHECK(res.iterations <= 1);
}

TEST_CASE("encode_nls never worsens its initial guess") {
  const PolynomialManifold m = testutil::random_manifold(10, 2, 3, 2, 12, 2.0);
  for (std::uint64_t seed = 20; seed < 40; ++seed) {
    const Vector s = m.s_ref + 3.0 * testutil::random_matrix(10, 1, seed).col(0);
    const EncodeResult res = encode_nls(m, s);
    CHECK(objective(m, s, res.s_hat) <= objective(m, s, encode_linear(m, s)) + 1e-15);
  }
}

TEST_CASE("encode_nls improves on linear encoding for the toy data") {
  const Matrix data = toy_manifold_data();
  std::vector<double> t(static_cast<std::size_t>(data.cols()));
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = static_cast<double>(j);
  const CenteredSnapshots cs = center(SnapshotSet::make(data, t), ColumnMean{});
  LearnConfig cfg;
  cfg.r = 2;
  cfg.q = 1;
  cfg.p = 3;
  const LearnedManifold lm = learn_pod(cs, cfg);
  const Matrix lin = encode_linear_columns(lm.manifold, data);
  const Matrix nls = encode_nls_columns(lm.manifold, cs.centered, lin, {});
  const double r_lin = (data - decode_columns(lm.manifold, lin)).colwise().norm().mean();
  const double r_nls = (data - decode_columns(lm.manifold, nls)).colwise().norm().mean();
  CHECK(r_nls < r_lin);
}

TEST_CASE("error and energy metrics") {
  const PolynomialManifold m = testutil::random_manifold(8, 2, 2, 2, 13);
  const Matrix s_hat = testutil::random_matrix(2, 6, 14);
  const Matrix s = decode_columns(m, s_hat);
  CHECK(relative_state_error(m, s_hat, s, m.s_ref) < 1e-14);

  PolynomialManifold zero_xi = m;
  zero_xi.Xi.setZero();
  const Matrix data = testutil::random_matrix(8, 6, 15);
  CHECK(relative_state_error(zero_xi, Matrix::Zero(2, 6), data, m.s_ref) == doctest::Approx(1.0));
  CHECK(energy_metric(zero_xi, Matrix::Zero(2, 6), data, m.s_ref) == 0.0);
  CHECK_THROWS_WITH_AS(relative_state_error(m, s_hat, Matrix(m.s_ref.replicate(1, 6)), m.s_ref),
                       "degenerate data", Error);
}

TEST_CASE("POD energy metric equals the cumulative singular value energy") {
  const Matrix data = testutil::random_matrix(20, 15, 16);
  std::vector<double> t(15);
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = static_cast<double>(j);
  const CenteredSnapshots cs = center(SnapshotSet::make(data, t), ColumnMean{});
  LearnConfig cfg;
  cfg.r = 4;
  const LearnedManifold lm = learn_pod(cs, cfg);
  const double e = energy_metric(lm.manifold, lm.s_hat, data, cs.s_ref);
  CHECK(std::abs(e - svd_spectrum(cs).energy(4)) <= 1e-10);
}

TEST_CASE("relative error is invariant under signed permutations of the basis") {
  const PolynomialManifold m = testutil::random_manifold(10, 3, 2, 2, 17);
  const Matrix s_hat = testutil::random_matrix(3, 7, 18);
  const Matrix data = testutil::random_matrix(10, 7, 19);
  const double base = relative_state_error(m, s_hat, data, m.s_ref);

  // s_hat'_i = sign_i s_hat_perm(i); g-blocks pick up sign^power.
  const int perm[3] = {2, 0, 1};
  const double sign[3] = {-1, 1, -1};
  PolynomialManifold t = m;
  Matrix s2(3, 7);
  for (int i = 0; i < 3; ++i) {
    t.V.col(i) = sign[i] * m.V.col(perm[i]);
    s2.row(i) = sign[i] * s_hat.row(perm[i]);
    t.Xi.col(i) = sign[i] * sign[i] * m.Xi.col(perm[i]);  // p = 2 block
  }
  t.V_bar.col(0) = -m.V_bar.col(1);
  t.V_bar.col(1) = m.V_bar.col(0);
  const Matrix xi = t.Xi;
  t.Xi.row(0) = -xi.row(1);
  t.Xi.row(1) = xi.row(0);
  CHECK(relative_state_error(t, s2, data, m.s_ref) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("manifold file round trip and validation") {
  const auto dir = testutil::temp_dir("manifold");
  const PolynomialManifold m = testutil::random_manifold(9, 2, 3, 3, 21);
  save_model(m, dir / "m.json");
  const PolynomialManifold back = load_model(dir / "m.json");
  CHECK(back.s_ref == m.s_ref);
  CHECK(back.V == m.V);
  CHECK(back.V_bar == m.V_bar);
  CHECK(back.Xi == m.Xi);
  CHECK(back.p == 3);

  const Json j = read_json(dir / "m.json");
  CHECK(j.at("type") == "polynomial_manifold");
  CHECK(j.at("n") == 9);
  CHECK(j.at("q") == 3);

  const PolynomialManifold lin = testutil::random_manifold(9, 2, 0, 2, 22);
  save_model(lin, dir / "lin.json");
  CHECK(load_model(dir / "lin.json").q() == 0);

  PolynomialManifold bad = m;
  bad.V(0, 0) += 1e-3;
  Json jb = manifold_to_json(m);
  jb["V"] = matrix_to_b64(bad.V);
  CHECK_THROWS_AS(manifold_from_json(jb), Error);

  Json schema = manifold_to_json(m);
  schema["type"] = "something_else";
  CHECK_THROWS_AS(manifold_from_json(schema), Error);
}
