#pragma once

// Elimination-based linear algebra shared by both scalar backends. Over the
// rationals every decision is exact; over doubles, "zero" means below
// rel_tol times the largest entry of the matrix being reduced.

#include "svfkit/matrix.hpp"

#include <optional>
#include <utility>

namespace svfkit {

template <typename T>
struct FieldTraits;

template <>
struct FieldTraits<Rational> {
  static constexpr bool exact = true;
  static double magnitude(const Rational& x) { return std::fabs(to_double(x)); }
  static bool is_zero(const Rational& x, double /*threshold*/) { return x == 0; }
  static double scale(const MatrixQ& /*m*/) { return 0.0; }
};

template <>
struct FieldTraits<double> {
  static constexpr bool exact = false;
  static double magnitude(double x) { return std::fabs(x); }
  static bool is_zero(double x, double threshold) { return std::fabs(x) <= threshold; }
  static double scale(const MatrixD& m) { return max_abs(m); }
};

inline constexpr double kDefaultRankTol = 1e-10;

template <typename T>
struct Echelon {
  Matrix<T> reduced;
  std::vector<std::size_t> pivots;
};

/// Reduced row echelon form. Floats use partial pivoting; rationals take the
/// first nonzero pivot.
template <typename T>
Echelon<T> row_reduce(Matrix<T> m, double rel_tol = kDefaultRankTol) {
  using F = FieldTraits<T>;
  const double threshold = rel_tol * F::scale(m);
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
    std::size_t best = m.rows();
    double best_mag = 0.0;
    for (std::size_t r = row; r < m.rows(); ++r) {
      if (F::is_zero(m(r, col), threshold)) continue;
      double mag = F::magnitude(m(r, col));
      if (best == m.rows() || (!F::exact && mag > best_mag)) {
        best = r;
        best_mag = mag;
        if constexpr (F::exact) break;
      }
    }
    if (best == m.rows()) {
      if constexpr (!F::exact)
        for (std::size_t r = row; r < m.rows(); ++r) m(r, col) = 0.0;
      continue;
    }
    if (best != row)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(row, j), m(best, j));
    T inv = T(1) / m(row, col);
    for (std::size_t j = col; j < m.cols(); ++j) m(row, j) *= inv;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (r == row || m(r, col) == T(0)) continue;
      T factor = m(r, col);
      for (std::size_t j = col; j < m.cols(); ++j) m(r, j) -= factor * m(row, j);
      if constexpr (!F::exact) m(r, col) = 0.0;
    }
    pivots.push_back(col);
    ++row;
  }
  return {std::move(m), std::move(pivots)};
}

template <typename T>
std::size_t rank(const Matrix<T>& m, double rel_tol = kDefaultRankTol) {
  return row_reduce(m, rel_tol).pivots.size();
}

/// Basis of the right null space, one vector per column.
template <typename T>
Matrix<T> nullspace(const Matrix<T>& m, double rel_tol = kDefaultRankTol) {
  auto [r, pivots] = row_reduce(m, rel_tol);
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto p : pivots) is_pivot[p] = true;
  Matrix<T> basis(m.cols(), m.cols() - pivots.size());
  std::size_t out = 0;
  for (std::size_t free = 0; free < m.cols(); ++free) {
    if (is_pivot[free]) continue;
    basis(free, out) = T(1);
    for (std::size_t i = 0; i < pivots.size(); ++i) basis(pivots[i], out) = -r(i, free);
    ++out;
  }
  return basis;
}

/// Basis for the column space, chosen among the original columns.
template <typename T>
Matrix<T> column_basis(const Matrix<T>& m, double rel_tol = kDefaultRankTol) {
  auto pivots = row_reduce(m, rel_tol).pivots;
  Matrix<T> basis(m.rows(), pivots.size());
  for (std::size_t j = 0; j < pivots.size(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) basis(i, j) = m(i, pivots[j]);
  return basis;
}

template <typename T>
Matrix<T> hstack(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() && a.cols() != 0 && b.cols() != 0) throw InputError("hstack row mismatch");
  std::size_t rows = a.cols() == 0 ? b.rows() : a.rows();
  Matrix<T> out(rows, a.cols() + b.cols());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
  }
  return out;
}

template <typename T>
Matrix<T> column_matrix(std::span<const T> v) {
  Matrix<T> m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

template <typename T>
T determinant(Matrix<T> m) {
  if (!m.is_square()) throw InputError("determinant of a non-square matrix");
  const std::size_t n = m.rows();
  T det = T(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = n;
    double best_mag = -1.0;
    for (std::size_t r = col; r < n; ++r) {
      if (m(r, col) == T(0)) continue;
      double mag = FieldTraits<T>::magnitude(m(r, col));
      if (mag > best_mag) {
        best = r;
        best_mag = mag;
        if constexpr (FieldTraits<T>::exact) break;
      }
    }
    if (best == n) return T(0);
    if (best != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(col, j), m(best, j));
      det = -det;
    }
    det *= m(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      if (m(r, col) == T(0)) continue;
      T factor = m(r, col) / m(col, col);
      for (std::size_t j = col; j < n; ++j) m(r, j) -= factor * m(col, j);
    }
  }
  return det;
}

/// Solves A X = B. Throws DomainError when A is singular (to tolerance).
template <typename T>
Matrix<T> solve(const Matrix<T>& a, const Matrix<T>& b, double rel_tol = 1e-13) {
  if (!a.is_square() || a.rows() != b.rows()) throw InputError("solve shape mismatch");
  const std::size_t n = a.rows();
  auto [r, pivots] = row_reduce(hstack(a, b), rel_tol);
  if (pivots.size() < n || pivots[n - 1] != n - 1) throw DomainError("singular matrix in solve");
  return r.block(0, n, n, b.cols());
}

template <typename T>
Matrix<T> inverse(const Matrix<T>& a, double rel_tol = 1e-13) {
  return solve(a, Matrix<T>::identity(a.rows()), rel_tol);
}

/// True when every column of `vectors` lies in the column span of `basis`.
template <typename T>
bool columns_in_span(const Matrix<T>& basis, const Matrix<T>& vectors, double rel_tol = kDefaultRankTol) {
  if (vectors.cols() == 0) return true;
  std::size_t r = rank(basis, rel_tol);
  return rank(hstack(basis, vectors), rel_tol) == r;
}

/// Flattens a square matrix into a column vector (row-major).
template <typename T>
std::vector<T> flatten(const Matrix<T>& m) {
  return {m.data().begin(), m.data().end()};
}

/// Orthonormal basis for the column span (modified Gram-Schmidt with one
/// re-orthogonalisation pass).
MatrixD orthonormal_basis(const MatrixD& m, double rel_tol = kDefaultRankTol);

/// Largest principal-angle sine between the column spans, i.e. how far the
/// columns of `vectors` are from span(basis), relative to their length.
double distance_to_span(const MatrixD& basis, const MatrixD& vectors);

}  // namespace svfkit
