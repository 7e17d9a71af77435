#include "svfkit/multilinear.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <numeric>

namespace svfkit {

namespace detail {
std::vector<double> jacobi_singular_values(MatrixD work);
}

namespace {

void combinations_rec(int d, int k, int start, Combination& current, std::vector<Combination>& out) {
  if (static_cast<int>(current.size()) == k) {
    out.push_back(current);
    return;
  }
  for (int i = start; i < d; ++i) {
    current.push_back(i);
    combinations_rec(d, k, i + 1, current, out);
    current.pop_back();
  }
}

void require_square_finite(const MatrixD& a, const char* op) {
  if (!a.is_square() || a.rows() == 0) throw InputError(std::string(op) + ": matrix must be square and nonempty");
  if (!is_finite(a)) throw InputError(std::string(op) + ": non-finite entries");
}

}  // namespace

WedgeBasis::WedgeBasis(int d, int k) : d_(d), k_(k) {
  if (d < 0 || k < 0 || k > d) throw InputError("WedgeBasis: need 0 <= k <= d");
  Combination current;
  combinations_rec(d, k, 0, current, combos_);
  for (std::size_t r = 0; r < combos_.size(); ++r) rank_.emplace(combos_[r], r);
}

std::size_t WedgeBasis::rank_of(const Combination& combo) const {
  auto it = rank_.find(combo);
  if (it == rank_.end()) throw InputError("WedgeBasis: not a basis combination");
  return it->second;
}

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int permutation_sign(std::span<const int> sequence) {
  int inversions = 0;
  for (std::size_t i = 0; i < sequence.size(); ++i)
    for (std::size_t j = i + 1; j < sequence.size(); ++j)
      if (sequence[i] > sequence[j]) ++inversions;
  return inversions % 2 == 0 ? 1 : -1;
}

SingularSpectrum singular_values(const MatrixD& a) {
  require_square_finite(a, "singular_values");
  return {detail::jacobi_singular_values(a)};
}

SingularSpectrum singular_values(const MatrixQ& a) { return singular_values(to_double(a)); }

std::vector<double> log_singular_values(const MatrixD& a) {
  auto values = detail::jacobi_singular_values(a);
  for (double& v : values) v = std::log(v);
  return values;
}

double log_svf_from_log_spectrum(std::span<const double> log_alpha, double s) {
  const auto d = static_cast<double>(log_alpha.size());
  if (s >= d) {
    double log_det = std::accumulate(log_alpha.begin(), log_alpha.end(), 0.0);
    return s / d * log_det;
  }
  const auto k = static_cast<std::size_t>(std::floor(s));
  double out = 0.0;
  for (std::size_t j = 0; j < k; ++j) out += log_alpha[j];
  const double frac = s - static_cast<double>(k);
  if (frac > 0.0) out += frac * log_alpha[k];
  return out;
}

double log_svf(const MatrixD& a, double s) {
  require_square_finite(a, "svf");
  if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("svf: s must be a finite nonnegative number");
  auto alpha = detail::jacobi_singular_values(a);
  if (alpha.back() <= kSingularRatio * alpha.front() || alpha.back() == 0.0)
    throw DomainError("svf: matrix is singular to working precision");
  for (double& v : alpha) v = std::log(v);
  return log_svf_from_log_spectrum(alpha, s);
}

double svf(const MatrixD& a, double s) {
  double l = log_svf(a, s);
  if (l > std::log(std::numeric_limits<double>::max())) throw NumericError("svf: value overflows double");
  return std::exp(l);
}

EigenModuli eigen_moduli(const MatrixD& a) {
  require_square_finite(a, "eigen_moduli");
  const auto n = static_cast<Eigen::Index>(a.rows());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigen_moduli: eigensolver did not converge for " + to_string(a));
  EigenModuli out;
  out.values.reserve(a.rows());
  for (Eigen::Index i = 0; i < n; ++i) out.values.push_back(std::abs(solver.eigenvalues()(i)));
  std::sort(out.values.begin(), out.values.end(), std::greater<>());
  return out;
}

EigenModuli eigen_moduli(const MatrixQ& a) {
  EigenModuli out = eigen_moduli(to_double(a));
  out.float_precision_only = true;
  return out;
}

std::vector<double> log_eigen_moduli(const MatrixD& a) {
  auto moduli = eigen_moduli(a).values;
  for (double& v : moduli) v = std::log(v);
  return moduli;
}

double log_chi_from_log_moduli(std::span<const double> log_moduli, double s) {
  return log_svf_from_log_spectrum(log_moduli, s);
}

double chi(const MatrixD& a, double s) {
  const auto d = static_cast<double>(a.rows());
  if (!(s >= 0.0) || s >= d) throw DomainError("chi: s must lie in [0, d)");
  auto moduli = eigen_moduli(a).values;
  if (moduli.back() == 0.0) throw DomainError("chi: matrix is singular");
  for (double& v : moduli) v = std::log(v);
  return std::exp(log_chi_from_log_moduli(moduli, s));
}

}  // namespace svfkit
