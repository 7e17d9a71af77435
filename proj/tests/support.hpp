#pragma once

// Hand-rolled generators shared by the unit and acceptance tests.

#include "svfkit/linalg.hpp"
#include "svfkit/matrix.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace svftest {

using svfkit::MatrixD;
using svfkit::MatrixQ;
using svfkit::Rational;

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline MatrixD random_matrix(Rng& rng, std::size_t d, double lo = -1.0, double hi = 1.0) {
  MatrixD m(d, d);
  for (auto& x : m.data()) x = uniform(rng, lo, hi);
  return m;
}

inline MatrixD random_invertible(Rng& rng, std::size_t d, double min_abs_det = 0.05) {
  for (;;) {
    MatrixD m = random_matrix(rng, d);
    if (std::fabs(svfkit::determinant(m)) > min_abs_det) return m;
  }
}

/// Entries p/q with |p| <= num_max and 1 <= q <= den_max, invertible.
inline MatrixQ random_rational(Rng& rng, std::size_t d, int num_max = 9, int den_max = 9) {
  for (;;) {
    MatrixQ m(d, d);
    for (auto& x : m.data()) x = Rational(uniform_int(rng, -num_max, num_max), uniform_int(rng, 1, den_max));
    if (svfkit::determinant(m) != 0) return m;
  }
}

/// Random orthogonal matrix: Gram-Schmidt on a Gaussian matrix.
inline MatrixD random_orthogonal(Rng& rng, std::size_t d) {
  std::normal_distribution<double> g;
  for (;;) {
    MatrixD m(d, d);
    for (auto& x : m.data()) x = g(rng);
    MatrixD q = svfkit::orthonormal_basis(m);
    if (q.cols() == d) return q;
  }
}

/// Scales a matrix so its operator norm equals `norm`.
inline MatrixD with_norm(MatrixD m, double norm) {
  m *= norm / svfkit::spectral_norm(m);
  return m;
}

inline MatrixD rotation2(double angle) {
  return MatrixD{{std::cos(angle), -std::sin(angle)}, {std::sin(angle), std::cos(angle)}};
}

inline double rel_diff(double a, double b) {
  double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) / scale;
}

inline double max_abs_diff(const MatrixD& a, const MatrixD& b) { return svfkit::max_abs(a - b); }

}  // namespace svftest
