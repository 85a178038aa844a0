#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pmor/common.hpp"

namespace pmor {

// Elementwise power features g(s) = (s^2, s^3, ..., s^p), blocks of length r.
Vector g_eval(const Vector& s_hat, int p);
Matrix g_jacobian(const Vector& s_hat, int p);
// Columnwise g for an r x k coordinate matrix; result is (p-1)r x k.
Matrix g_columns(const Matrix& s_hat, int p);

// Unique quadratic products s_i s_j, i <= j, ordered by i then j.
struct QuadIndexing {
  int r = 0;
  std::vector<std::pair<int, int>> pairs;

  explicit QuadIndexing(int r);
  QuadIndexing() = default;
  Index size() const { return static_cast<Index>(pairs.size()); }
};

Vector quad_eval(const Vector& s_hat, const QuadIndexing& idx);
Matrix quad_columns(const Matrix& s_hat, const QuadIndexing& idx);

/// The higher-order monomials (total degree 3..2p) that appear when a
/// quadratic system is projected through a degree-p polynomial manifold.
///
/// Ordering is total degree ascending, then exponent vector in descending
/// lexicographic order, so s1^3 precedes s1^2 s2 precedes s2^3.
struct MonomialTable {
  int r = 0;
  int p = 0;
  std::vector<std::vector<std::uint8_t>> exponents;

  Index size() const { return static_cast<Index>(exponents.size()); }
  int degree(Index m) const;
  int max_exponent() const;
};

MonomialTable ghat_table(int r, int p);
/// Checks the structural invariants (used when loading tables from disk).
void validate_table(const MonomialTable& table);

Vector ghat_eval(const Vector& s_hat, const MonomialTable& table);
Matrix ghat_jacobian(const Vector& s_hat, const MonomialTable& table);
Matrix ghat_columns(const Matrix& s_hat, const MonomialTable& table);

}  // namespace pmor
