#pragma once

// Small dense kernels: singular values, eigenvalue moduli, exterior powers,
// the Hodge star, and the singular value function phi^s.

#include "svfkit/linalg.hpp"
#include "svfkit/matrix.hpp"

#include <map>
#include <span>
#include <vector>

namespace svfkit {

/// alpha_1 >= ... >= alpha_d >= 0.
struct SingularSpectrum {
  std::vector<double> values;
};

/// |lambda_1| >= ... >= |lambda_d|, with multiplicity.
struct EigenModuli {
  std::vector<double> values;
  /// Set when the input was exact: moduli are irrational in general, so they
  /// are always computed in double precision.
  bool float_precision_only = false;
};

using Combination = std::vector<int>;

/// Lexicographically ordered k-subsets of {0,...,d-1}, the index set for the
/// standard basis e_{i_1} ^ ... ^ e_{i_k} of the k-th exterior power.
class WedgeBasis {
 public:
  WedgeBasis(int d, int k);

  int dim() const { return d_; }
  int degree() const { return k_; }
  std::size_t size() const { return combos_.size(); }
  const Combination& operator[](std::size_t rank) const { return combos_[rank]; }
  const std::vector<Combination>& combinations() const { return combos_; }
  std::size_t rank_of(const Combination& combo) const;

 private:
  int d_;
  int k_;
  std::vector<Combination> combos_;
  std::map<Combination, std::size_t> rank_;
};

long long binomial(int n, int k);

/// Sign of the permutation given as a sequence of distinct integers.
int permutation_sign(std::span<const int> sequence);

SingularSpectrum singular_values(const MatrixD& a);
SingularSpectrum singular_values(const MatrixQ& a);

/// Natural logs of the singular values (no validation; -inf for zeros).
std::vector<double> log_singular_values(const MatrixD& a);

/// The C(d,k) x C(d,k) matrix of k x k minors; entry (S,T) is the minor on
/// rows S and columns T. k = 0 gives the 1x1 identity.
template <typename T>
Matrix<T> exterior_power(const Matrix<T>& a, int k) {
  if (!a.is_square()) throw InputError("exterior_power: matrix must be square");
  const int d = static_cast<int>(a.rows());
  if (k < 0 || k > d) throw InputError("exterior_power: k out of range");
  WedgeBasis basis(d, k);
  const std::size_t n = basis.size();
  Matrix<T> out(n, n);
  if (k == 0) {
    out(0, 0) = T(1);
    return out;
  }
  Matrix<T> minor(k, k);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& rows = basis[r];
    for (std::size_t c = 0; c < n; ++c) {
      const auto& cols = basis[c];
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) minor(i, j) = a(rows[i], cols[j]);
      out(r, c) = determinant(minor);
    }
  }
  return out;
}

/// Hodge star on coordinates in the lexicographic wedge basis:
/// *(e_S) = sgn(S, S^c) e_{S^c}.
template <typename T>
std::vector<T> hodge_star(std::span<const T> v, int d, int k) {
  if (k < 0 || k > d) throw InputError("hodge_star: k out of range");
  WedgeBasis from(d, k);
  WedgeBasis to(d, d - k);
  if (v.size() != from.size()) throw InputError("hodge_star: coordinate length mismatch");
  std::vector<T> out(to.size(), T(0));
  for (std::size_t r = 0; r < from.size(); ++r) {
    const auto& s = from[r];
    Combination complement;
    std::vector<int> sequence(s.begin(), s.end());
    for (int i = 0; i < d; ++i)
      if (std::find(s.begin(), s.end(), i) == s.end()) complement.push_back(i);
    sequence.insert(sequence.end(), complement.begin(), complement.end());
    int sign = permutation_sign(sequence);
    out[to.rank_of(complement)] += sign > 0 ? v[r] : T(-v[r]);
  }
  return out;
}

/// Wedge product of a k-vector and a j-vector in dimension d.
template <typename T>
std::vector<T> wedge(std::span<const T> v, int k, std::span<const T> w, int j, int d) {
  if (k + j > d) return {};
  WedgeBasis bv(d, k), bw(d, j), bout(d, k + j);
  if (v.size() != bv.size() || w.size() != bw.size()) throw InputError("wedge: coordinate length mismatch");
  std::vector<T> out(bout.size(), T(0));
  for (std::size_t a = 0; a < bv.size(); ++a) {
    if (v[a] == T(0)) continue;
    for (std::size_t b = 0; b < bw.size(); ++b) {
      if (w[b] == T(0)) continue;
      std::vector<int> seq(bv[a].begin(), bv[a].end());
      seq.insert(seq.end(), bw[b].begin(), bw[b].end());
      Combination sorted = seq;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;
      T term = v[a] * w[b];
      out[bout.rank_of(sorted)] += permutation_sign(seq) > 0 ? term : T(-term);
    }
  }
  return out;
}

/// <v, w>_k = *(v ^ *w).
template <typename T>
T graded_inner(std::span<const T> v, std::span<const T> w, int d, int k) {
  if (v.size() != w.size()) throw InputError("graded_inner: length mismatch");
  auto star_w = hodge_star<T>(w, d, k);
  auto top = wedge<T>(v, k, std::span<const T>(star_w), d - k, d);
  auto scalar = hodge_star<T>(std::span<const T>(top), d, d);
  return scalar.at(0);
}

/// log phi^s from log singular values; s >= d uses |det|^{s/d}.
double log_svf_from_log_spectrum(std::span<const double> log_alpha, double s);

/// phi^s(A) = alpha_1 ... alpha_k alpha_{k+1}^{s-k}, k = floor(s) < d.
/// Throws DomainError for singular A or s < 0; NumericError on overflow.
double svf(const MatrixD& a, double s);
double log_svf(const MatrixD& a, double s);

EigenModuli eigen_moduli(const MatrixD& a);
EigenModuli eigen_moduli(const MatrixQ& a);
std::vector<double> log_eigen_moduli(const MatrixD& a);

/// Spectral minorant |lambda_1 ... lambda_k| |lambda_{k+1}|^{s-k} <= phi^s.
double chi(const MatrixD& a, double s);
double log_chi_from_log_moduli(std::span<const double> log_moduli, double s);

/// Threshold on alpha_d / alpha_1 below which a float matrix counts as singular.
inline constexpr double kSingularRatio = 1e-14;

}  // namespace svfkit
