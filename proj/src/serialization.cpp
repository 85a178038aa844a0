#include "pmor/serialization.hpp"

#include <fstream>
#include <iostream>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "pmor/snapshot.hpp"

namespace pmor {

namespace bai = boost::archive::iterators;

std::string base64_encode(std::string_view bytes) {
  using It = bai::base64_from_binary<bai::transform_width<const char*, 6, 8>>;
  std::string out(It(bytes.data()), It(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::string base64_decode(std::string_view text) {
  using It = bai::transform_width<bai::binary_from_base64<const char*>, 8, 6>;
  std::size_t pad = 0;
  while (!text.empty() && text.back() == '=') {
    text.remove_suffix(1);
    ++pad;
  }
  if (pad > 2) throw Error("invalid base64 padding");
  try {
    std::string out(It(text.data()), It(text.data() + text.size()));
    // transform_width emits a trailing partial byte for unpadded input.
    const std::size_t expect = text.size() * 6 / 8;
    out.resize(expect);
    return out;
  } catch (const std::exception&) {
    throw Error("invalid base64 text");
  }
}

std::string matrix_to_b64(const Matrix& m) { return base64_encode(encode_smat(m)); }

Matrix matrix_from_b64(std::string_view text) { return decode_smat(base64_decode(text)); }

Json table_to_json(const MonomialTable& t) {
  Json ex = Json::array();
  for (const auto& e : t.exponents) {
    Json row = Json::array();
    for (auto v : e) row.push_back(static_cast<int>(v));
    ex.push_back(std::move(row));
  }
  return Json{{"r", t.r}, {"p", t.p}, {"exponents", std::move(ex)}};
}

MonomialTable table_from_json(const Json& j) {
  MonomialTable t;
  try {
    t.r = j.at("r").get<int>();
    t.p = j.at("p").get<int>();
    for (const auto& row : j.at("exponents")) {
      std::vector<std::uint8_t> e;
      for (const auto& v : row) e.push_back(static_cast<std::uint8_t>(v.get<int>()));
      t.exponents.push_back(std::move(e));
    }
  } catch (const Json::exception& ex) {
    throw Error(std::string("monomial table schema mismatch: ") + ex.what());
  }
  validate_table(t);
  return t;
}

Json manifold_to_json(const PolynomialManifold& m) {
  return Json{{"type", "polynomial_manifold"},
              {"n", m.n()},
              {"r", m.r()},
              {"q", m.q()},
              {"p", m.p},
              {"s_ref", matrix_to_b64(m.s_ref)},
              {"V", matrix_to_b64(m.V)},
              {"V_bar", matrix_to_b64(m.V_bar)},
              {"Xi", matrix_to_b64(m.Xi)}};
}

PolynomialManifold manifold_from_json(const Json& j) {
  PolynomialManifold m;
  Index n = 0, r = 0, q = 0;
  try {
    if (j.at("type").get<std::string>() != "polynomial_manifold") {
      throw Error("schema mismatch: not a polynomial_manifold document");
    }
    n = j.at("n").get<Index>();
    r = j.at("r").get<Index>();
    q = j.at("q").get<Index>();
    m.p = j.at("p").get<int>();
    m.s_ref = matrix_from_b64(j.at("s_ref").get<std::string>());
    m.V = matrix_from_b64(j.at("V").get<std::string>());
    m.V_bar = matrix_from_b64(j.at("V_bar").get<std::string>());
    m.Xi = matrix_from_b64(j.at("Xi").get<std::string>());
  } catch (const Json::exception& ex) {
    throw Error(std::string("manifold schema mismatch: ") + ex.what());
  }
  if (m.s_ref.cols() != 1 || m.s_ref.rows() != n) throw Error("schema mismatch: s_ref shape");
  if (m.V.rows() != n || m.V.cols() != r) throw Error("schema mismatch: V shape");
  if (q == 0) {
    m.V_bar.resize(n, 0);
    m.Xi.resize(0, 0);
  }
  if (m.V_bar.rows() != n || m.V_bar.cols() != q) throw Error("schema mismatch: V_bar shape");
  const double orth = m.orthonormality_error();
  if (!(orth <= 1e-6)) {
    throw Error("loaded basis violates orthonormality (error " + std::to_string(orth) + ")");
  }
  if (orth > 1e-8) {
    std::cerr << "warning: loaded basis orthonormality error " << orth << "\n";
  }
  m.validate(1e-6);
  return m;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& ex) {
    throw ParseError(std::string("invalid JSON in ") + path.string() + ": " + ex.what(), ex.byte);
  }
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace pmor
