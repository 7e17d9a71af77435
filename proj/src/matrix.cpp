#include "svfkit/linalg.hpp"
#include "svfkit/matrix.hpp"

#include <cstdio>
#include <sstream>

namespace svfkit {

namespace detail {

// One-sided (Hestenes) Jacobi: rotate column pairs of a working copy until
// all columns are mutually orthogonal; the column norms are then the
// singular values. Unconditionally convergent; for the tiny sizes used here a
// few sweeps suffice.
std::vector<double> jacobi_singular_values(MatrixD work) {
  const std::size_t m = work.rows();
  const std::size_t n = work.cols();
  constexpr double kTol = 1e-14;
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += work(i, p) * work(i, p);
          beta += work(i, q) * work(i, q);
          gamma += work(i, p) * work(i, q);
        }
        if (gamma == 0.0) continue;
        double denom = std::sqrt(alpha * beta);
        if (denom == 0.0) continue;
        double rel = std::fabs(gamma) / denom;
        off = std::max(off, rel);
        if (rel <= kTol) continue;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          double xp = work(i, p);
          double xq = work(i, q);
          work(i, p) = c * xp - s * xq;
          work(i, q) = s * xp + c * xq;
        }
      }
    }
    if (off <= kTol) break;
    if (sweep == kMaxSweeps - 1) throw NumericError("Jacobi SVD did not converge");
  }
  std::vector<double> values(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += work(i, j) * work(i, j);
    values[j] = std::sqrt(s);
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

}  // namespace detail

double spectral_norm(const MatrixD& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  // Jacobi on the narrower orientation.
  auto values = m.cols() <= m.rows() ? detail::jacobi_singular_values(m)
                                     : detail::jacobi_singular_values(m.transpose());
  return values.front();
}

bool is_finite(const MatrixD& m) {
  for (double x : m.data())
    if (!std::isfinite(x)) return false;
  return true;
}

std::string to_string(const MatrixD& m) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "");
    for (std::size_t j = 0; j < m.cols(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", m(i, j));
      os << (j ? " " : "") << buf;
    }
  }
  os << "]";
  return os.str();
}

MatrixD orthonormal_basis(const MatrixD& m, double rel_tol) {
  std::vector<std::vector<double>> out;
  const double scale = max_abs(m);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    std::vector<double> v = m.column(j);
    double original = 0.0;
    for (double x : v) original += x * x;
    original = std::sqrt(original);
    if (original <= rel_tol * scale || original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : out) {
        double dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += q[i] * v[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q[i];
      }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= rel_tol * original * 1e2) continue;
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  MatrixD basis(m.rows(), out.size());
  for (std::size_t j = 0; j < out.size(); ++j) basis.set_column(j, out[j]);
  return basis;
}

double distance_to_span(const MatrixD& basis, const MatrixD& vectors) {
  MatrixD q = orthonormal_basis(basis);
  double worst = 0.0;
  for (std::size_t j = 0; j < vectors.cols(); ++j) {
    std::vector<double> v = vectors.column(j);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (std::size_t c = 0; c < q.cols(); ++c) {
      double dot = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) dot += q(i, c) * v[i];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q(i, c);
    }
    double rest = 0.0;
    for (double x : v) rest += x * x;
    worst = std::max(worst, std::sqrt(rest) / norm);
  }
  return worst;
}

}  // namespace svfkit
