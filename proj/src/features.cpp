#include "pmor/features.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace pmor {

namespace {

// x^e by repeated multiplication; exponents here never exceed 2p.
inline double ipow(double x, int e) {
  double acc = 1.0;
  for (int i = 0; i < e; ++i) acc *= x;
  return acc;
}

bool canonical_less(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  const int da = std::accumulate(a.begin(), a.end(), 0);
  const int db = std::accumulate(b.begin(), b.end(), 0);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

Vector g_eval(const Vector& s_hat, int p) {
  require(p >= 2, "polynomial order must be at least 2");
  const Index r = s_hat.size();
  Vector out(static_cast<Index>(p - 1) * r);
  Vector power = s_hat;
  for (int j = 2; j <= p; ++j) {
    power = power.cwiseProduct(s_hat);
    out.segment((j - 2) * r, r) = power;
  }
  return out;
}

Matrix g_jacobian(const Vector& s_hat, int p) {
  require(p >= 2, "polynomial order must be at least 2");
  const Index r = s_hat.size();
  Matrix jac = Matrix::Zero(static_cast<Index>(p - 1) * r, r);
  for (int j = 2; j <= p; ++j) {
    for (Index i = 0; i < r; ++i) {
      jac((j - 2) * r + i, i) = j * ipow(s_hat(i), j - 1);
    }
  }
  return jac;
}

Matrix g_columns(const Matrix& s_hat, int p) {
  require(p >= 2, "polynomial order must be at least 2");
  const Index r = s_hat.rows();
  Matrix out(static_cast<Index>(p - 1) * r, s_hat.cols());
  Matrix power = s_hat;
  for (int j = 2; j <= p; ++j) {
    power = power.cwiseProduct(s_hat);
    out.middleRows((j - 2) * r, r) = power;
  }
  return out;
}

QuadIndexing::QuadIndexing(int r_) : r(r_) {
  require(r >= 0, "negative dimension");
  pairs.reserve(static_cast<std::size_t>(r * (r + 1) / 2));
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) pairs.emplace_back(i, j);
  }
}

Vector quad_eval(const Vector& s_hat, const QuadIndexing& idx) {
  require(s_hat.size() == idx.r, "quadratic indexing dimension mismatch");
  Vector out(idx.size());
  for (Index m = 0; m < idx.size(); ++m) {
    const auto [i, j] = idx.pairs[static_cast<std::size_t>(m)];
    out(m) = s_hat(i) * s_hat(j);
  }
  return out;
}

Matrix quad_columns(const Matrix& s_hat, const QuadIndexing& idx) {
  require(s_hat.rows() == idx.r, "quadratic indexing dimension mismatch");
  Matrix out(idx.size(), s_hat.cols());
  for (Index m = 0; m < idx.size(); ++m) {
    const auto [i, j] = idx.pairs[static_cast<std::size_t>(m)];
    out.row(m) = s_hat.row(i).cwiseProduct(s_hat.row(j));
  }
  return out;
}

int MonomialTable::degree(Index m) const {
  const auto& e = exponents[static_cast<std::size_t>(m)];
  return std::accumulate(e.begin(), e.end(), 0);
}

int MonomialTable::max_exponent() const {
  int mx = 0;
  for (const auto& e : exponents) {
    for (auto v : e) mx = std::max<int>(mx, v);
  }
  return mx;
}

MonomialTable ghat_table(int r, int p) {
  require(r >= 1, "reduced dimension must be at least 1");
  require(p >= 2, "polynomial order must be at least 2");
  std::set<std::vector<std::uint8_t>> unique;
  auto add = [&](int i, int a, int j, int b) {
    std::vector<std::uint8_t> e(static_cast<std::size_t>(r), 0);
    e[static_cast<std::size_t>(i)] += static_cast<std::uint8_t>(a);
    e[static_cast<std::size_t>(j)] += static_cast<std::uint8_t>(b);
    unique.insert(std::move(e));
  };
  // s_i * s_j^b comes from the s (x) g and g (x) s blocks, s_i^a s_j^b from
  // g (x) g. The pure g block (degree <= p) is already contained in these
  // for degree >= 3 and the degree-2 part lives in the quadratic block.
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      for (int b = 2; b <= p; ++b) add(i, 1, j, b);
      for (int a = 2; a <= p; ++a) {
        for (int b = 2; b <= p; ++b) add(i, a, j, b);
      }
    }
  }
  MonomialTable t;
  t.r = r;
  t.p = p;
  t.exponents.assign(unique.begin(), unique.end());
  std::sort(t.exponents.begin(), t.exponents.end(), canonical_less);
  return t;
}

void validate_table(const MonomialTable& table) {
  require(table.r >= 1 && table.p >= 2, "monomial table has invalid (r, p)");
  std::set<std::vector<std::uint8_t>> seen;
  for (Index m = 0; m < table.size(); ++m) {
    const auto& e = table.exponents[static_cast<std::size_t>(m)];
    require(static_cast<int>(e.size()) == table.r, "monomial exponent vector has wrong length");
    const int deg = table.degree(m);
    require(deg >= 3 && deg <= 2 * table.p, "monomial degree outside [3, 2p]");
    require(seen.insert(e).second, "duplicate monomial in table");
    if (m > 0) {
      require(canonical_less(table.exponents[static_cast<std::size_t>(m - 1)], e),
              "monomial table is not in canonical order");
    }
  }
}

Vector ghat_eval(const Vector& s_hat, const MonomialTable& table) {
  require(s_hat.size() == table.r, "monomial table dimension mismatch");
  Vector out(table.size());
  for (Index m = 0; m < table.size(); ++m) {
    const auto& e = table.exponents[static_cast<std::size_t>(m)];
    double v = 1.0;
    for (int i = 0; i < table.r; ++i) {
      if (e[static_cast<std::size_t>(i)] != 0) v *= ipow(s_hat(i), e[static_cast<std::size_t>(i)]);
    }
    out(m) = v;
  }
  return out;
}

Matrix ghat_jacobian(const Vector& s_hat, const MonomialTable& table) {
  require(s_hat.size() == table.r, "monomial table dimension mismatch");
  Matrix jac = Matrix::Zero(table.size(), table.r);
  for (Index m = 0; m < table.size(); ++m) {
    const auto& e = table.exponents[static_cast<std::size_t>(m)];
    for (int i = 0; i < table.r; ++i) {
      const int ei = e[static_cast<std::size_t>(i)];
      if (ei == 0) continue;
      double v = ei * ipow(s_hat(i), ei - 1);
      for (int l = 0; l < table.r; ++l) {
        if (l != i && e[static_cast<std::size_t>(l)] != 0) {
          v *= ipow(s_hat(l), e[static_cast<std::size_t>(l)]);
        }
      }
      jac(m, i) = v;
    }
  }
  return jac;
}

Matrix ghat_columns(const Matrix& s_hat, const MonomialTable& table) {
  require(s_hat.rows() == table.r, "monomial table dimension mismatch");
  Matrix out(table.size(), s_hat.cols());
  for (Index j = 0; j < s_hat.cols(); ++j) out.col(j) = ghat_eval(s_hat.col(j), table);
  return out;
}

}  // namespace pmor
