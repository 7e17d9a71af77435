#pragma once

// Entrywise nonnegative matrices: strongly connected components of the
// support digraph, Perron values and vectors, cyclicity.

#include "svfkit/matrix.hpp"

#include <vector>

namespace svfkit {

/// Tarjan's algorithm on the digraph i -> j iff m(i,j) > 0. Components are
/// returned with sorted indices, ordered by their smallest index.
std::vector<std::vector<std::size_t>> strongly_connected_components(const MatrixD& m);

struct PerronData {
  double value = 0.0;
  /// Left vector u and right vector v, strictly positive, u.v = 1, max v = 1.
  std::vector<double> left;
  std::vector<double> right;
  std::size_t iterations = 0;
};

/// Perron value and vectors of an irreducible nonnegative matrix, by power
/// iteration on a shifted copy with Collatz-Wielandt stopping at rel_tol.
PerronData perron(const MatrixD& m, double rel_tol = 1e-13);

/// Spectral radius of an arbitrary nonnegative matrix (max over components).
double spectral_radius_nonneg(const MatrixD& m);

/// gcd of cycle lengths of the support digraph (assumed strongly connected).
int cyclicity(const MatrixD& m);

/// Principal submatrix on the given indices.
MatrixD restrict(const MatrixD& m, const std::vector<std::size_t>& indices);

/// Throws InputError if any entry is negative.
void require_nonnegative(const MatrixD& m, const char* what);

}  // namespace svfkit
