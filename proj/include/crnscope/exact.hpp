#pragma once

// Exact linear algebra over the rationals. Used for everything structural
// (rank, null spaces) so that dimension and deficiency never depend on a
// floating-point threshold.

#include <cstddef>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace crnscope {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using RationalVector = std::vector<Rational>;
using RationalMatrix = std::vector<RationalVector>;  // row-major

struct Echelon {
  RationalMatrix rref;
  std::vector<std::size_t> pivot_cols;
};

/// Reduced row echelon form. Pivots are taken at the lowest row index with a
/// nonzero entry in the current column.
Echelon reduced_row_echelon(RationalMatrix m);

/// Rank by fraction-free (Bareiss) elimination on an integer matrix.
std::size_t bareiss_rank(std::vector<std::vector<BigInt>> m);

/// Basis of {x : m x = 0}, returned in reduced row echelon form.
std::vector<RationalVector> null_space(const RationalMatrix& m, std::size_t cols);

std::string to_string(const Rational& q);
double to_double(const Rational& q);

}  // namespace crnscope
