#include "svfkit/structure.hpp"

#include "svfkit/linalg.hpp"
#include "svfkit/multilinear.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <complex>
#include <limits>
#include <random>
#include <thread>

namespace svfkit {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Irreducible: return "irreducible";
    case Verdict::Reducible: return "reducible";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

namespace {

constexpr double kClosureTol = 1e-9;
constexpr double kInvarianceTol = 1e-10;
constexpr long long kMaxDen = 1000000;

template <typename T>
constexpr bool kExact = FieldTraits<T>::exact;

// ---------------------------------------------------------------------------
// Incremental span of flattened matrices.

template <typename T>
class SpanBuilder;

template <>
class SpanBuilder<Rational> {
 public:
  // Rows kept in insertion order, each with a unit pivot absent from later rows.
  bool add(std::vector<Rational> v) {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Rational c = v[pivots_[r]];
      if (c == 0) continue;
      for (std::size_t j = 0; j < v.size(); ++j)
        if (rows_[r][j] != 0) v[j] -= c * rows_[r][j];
    }
    std::size_t p = 0;
    while (p < v.size() && v[p] == 0) ++p;
    if (p == v.size()) return false;
    const Rational inv = 1 / v[p];
    for (auto& x : v) x *= inv;
    rows_.push_back(std::move(v));
    pivots_.push_back(p);
    return true;
  }
  const std::vector<Rational>& last() const { return rows_.back(); }

 private:
  std::vector<std::vector<Rational>> rows_;
  std::vector<std::size_t> pivots_;
};

template <>
class SpanBuilder<double> {
 public:
  bool add(std::vector<double> v) {
    const double original = norm(v);
    if (original == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : rows_) {
        double dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += q[i] * v[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q[i];
      }
    const double rest = norm(v);
    if (rest <= kClosureTol * original) return false;
    for (auto& x : v) x /= rest;
    rows_.push_back(std::move(v));
    return true;
  }
  const std::vector<double>& last() const { return rows_.back(); }

 private:
  static double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  std::vector<std::vector<double>> rows_;
};

template <typename T>
Matrix<T> reshape(const std::vector<T>& v, std::size_t d) {
  Matrix<T> m(d, d);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

template <typename T>
std::vector<Matrix<T>> closure(const std::vector<Matrix<T>>& gens) {
  const std::size_t d = gens.front().rows();
  SpanBuilder<T> span;
  std::vector<Matrix<T>> basis;
  auto id = Matrix<T>::identity(d);
  span.add(flatten(id));
  basis.push_back(reshape(span.last(), d));
  for (std::size_t q = 0; q < basis.size() && basis.size() < d * d; ++q) {
    for (const auto& a : gens) {
      if (span.add(flatten(a * basis[q]))) basis.push_back(reshape(span.last(), d));
      if (basis.size() == d * d) break;
    }
  }
  return basis;
}

std::vector<MatrixD> normalized(const std::vector<MatrixD>& gens) {
  std::vector<MatrixD> out;
  for (const auto& g : gens) out.push_back(g * (1.0 / max_abs(g)));
  return out;
}

template <typename T>
T trace_product(const Matrix<T>& a, const Matrix<T>& b) {
  T s = T(0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * b(j, i);
  return s;
}

template <typename T>
bool negligible(const T& x, double tol) {
  if constexpr (kExact<T>)
    return x == 0;
  else
    return std::fabs(x) <= tol;
}

// ---------------------------------------------------------------------------
// Eigen helpers (double only).

Eigen::MatrixXd to_eigen(const MatrixD& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  return m;
}

std::vector<std::complex<double>> eigenvalues(const MatrixD& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(to_eigen(a), false);
  if (solver.info() != Eigen::Success) throw NumericError("eigenvalue computation failed");
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) out.push_back(solver.eigenvalues()(i));
  std::sort(out.begin(), out.end(), [](auto x, auto y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return out;
}

// Right singular vectors for singular values below tol * sigma_1; at least one.
MatrixD numeric_kernel(const MatrixD& a, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Eigen::Index n = a.cols();
  Eigen::Index keep = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i)
    if (sv(i) <= tol * sv(0)) ++keep;
  keep = std::max<Eigen::Index>(keep, 1);
  MatrixD k(a.rows(), keep);
  for (Eigen::Index c = 0; c < keep; ++c)
    for (Eigen::Index i = 0; i < n; ++i) k(i, c) = svd.matrixV()(i, n - keep + c);
  return k;
}

// ---------------------------------------------------------------------------
// Polynomials over Q, coefficients lowest degree first, no trailing zeros.

using Poly = std::vector<Rational>;

void trim(Poly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

Poly monic(Poly p) {
  trim(p);
  if (p.empty()) return p;
  const Rational lead = p.back();
  for (auto& c : p) c /= lead;
  return p;
}

std::pair<Poly, Poly> divmod(Poly a, const Poly& b) {
  trim(a);
  Poly q(a.size() >= b.size() ? a.size() - b.size() + 1 : 0, Rational(0));
  while (a.size() >= b.size() && !a.empty()) {
    const std::size_t shift = a.size() - b.size();
    const Rational f = a.back() / b.back();
    q[shift] = f;
    for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
    a.pop_back();
    trim(a);
  }
  return {q, a};
}

Poly poly_gcd(Poly a, Poly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  return monic(a);
}

Poly derivative(const Poly& p) {
  Poly out;
  for (std::size_t i = 1; i < p.size(); ++i) out.push_back(p[i] * static_cast<long>(i));
  trim(out);
  return out;
}

template <typename T>
Matrix<T> evaluate(const std::vector<T>& p, const Matrix<T>& x) {
  const std::size_t d = x.rows();
  Matrix<T> out(d, d);
  for (std::size_t i = p.size(); i-- > 0;) {
    out = out * x;
    for (std::size_t j = 0; j < d; ++j) out(j, j) += p[i];
  }
  return out;
}

Poly minimal_polynomial(const MatrixQ& x) {
  const std::size_t d = x.rows();
  std::vector<MatrixQ> powers{MatrixQ::identity(d)};
  for (std::size_t k = 1; k <= d; ++k) {
    powers.push_back(powers.back() * x);
    MatrixQ cols(d * d, k + 1);
    for (std::size_t c = 0; c <= k; ++c) cols.set_column(c, flatten(powers[c]));
    MatrixQ ns = nullspace(cols);
    if (ns.cols() > 0) return monic(ns.column(0));
  }
  throw NumericError("minimal polynomial degree exceeds dimension");
}

std::optional<Rational> exact_sqrt(const Rational& x) {
  if (x < 0) return std::nullopt;
  const BigInt n = boost::multiprecision::numerator(x), d = boost::multiprecision::denominator(x);
  const BigInt rn = boost::multiprecision::sqrt(n), rd = boost::multiprecision::sqrt(d);
  if (rn * rn != n || rd * rd != d) return std::nullopt;
  return Rational(rn, rd);
}

// q(x) for a factor q of the minimal polynomial with rational coefficients,
// when one can be found; q(x) is then nonzero and singular.
std::optional<MatrixQ> split_exact(const MatrixQ& x) {
  const Poly m = minimal_polynomial(x);
  const Poly g = divmod(m, poly_gcd(m, derivative(m))).first;
  if (g.size() < m.size()) return evaluate(g, x);
  if (m.size() == 3) {
    // Monic quadratic: rational roots iff the discriminant is a square.
    auto root = exact_sqrt(m[1] * m[1] - 4 * m[0]);
    if (!root) return std::nullopt;
    return evaluate(Poly{(m[1] - *root) / 2, Rational(1)}, x);
  }

  auto lambda = eigenvalues(to_double(x));
  std::vector<Poly> candidates;
  std::vector<double> reals;
  for (auto z : lambda) {
    const double scale = std::max(1.0, std::abs(z));
    if (std::fabs(z.imag()) <= 1e-9 * scale) {
      reals.push_back(z.real());
      candidates.push_back({-rationalize(z.real(), kMaxDen), Rational(1)});
    } else if (z.imag() > 0) {
      candidates.push_back({rationalize(std::norm(z), kMaxDen), -rationalize(2 * z.real(), kMaxDen), Rational(1)});
    }
  }
  for (std::size_t a = 0; a < reals.size(); ++a)
    for (std::size_t b = a + 1; b < reals.size(); ++b)
      candidates.push_back({rationalize(reals[a] * reals[b], kMaxDen), -rationalize(reals[a] + reals[b], kMaxDen),
                            Rational(1)});
  for (const auto& q : candidates) {
    if (q.size() >= m.size()) continue;
    if (!divmod(m, q).second.empty()) continue;
    return evaluate(q, x);
  }
  return std::nullopt;
}

MatrixD split_float(const MatrixD& x) {
  auto lambda = eigenvalues(x);
  const std::size_t d = x.rows();
  const double scale = max_abs(x);
  for (auto z : lambda) {
    if (std::fabs(z.imag()) <= 1e-9 * std::max(scale, std::abs(z))) {
      MatrixD q = x;
      for (std::size_t i = 0; i < d; ++i) q(i, i) -= z.real();
      return q;
    }
  }
  auto z = lambda.back();
  MatrixD q = x * x - x * (2 * z.real());
  for (std::size_t i = 0; i < d; ++i) q(i, i) += std::norm(z);
  return q;
}

// Kernel or image of a singular q(x), whichever is smaller.
MatrixQ smaller_part(const MatrixQ& q) {
  MatrixQ k = nullspace(q), im = column_basis(q);
  return k.cols() <= im.cols() ? k : im;
}

MatrixD smaller_part(const MatrixD& q) {
  MatrixD k = numeric_kernel(q, 1e-8);
  if (2 * k.cols() <= q.cols()) return orthonormal_basis(k);
  // Image: complement of the left kernel.
  MatrixD left = numeric_kernel(q.transpose(), 1e-8);
  return orthonormal_basis(nullspace(left.transpose(), 1e-12));
}

// ---------------------------------------------------------------------------
// Irreducibility decision.

template <typename T>
struct Decision {
  Verdict verdict = Verdict::Unknown;
  std::optional<Matrix<T>> witness;
  std::optional<MatrixD> float_witness;
  std::size_t algebra_dim = 0;
  std::string method;
  std::vector<std::string> notes;
};

template <typename T>
bool invariant(const std::vector<Matrix<T>>& gens, const Matrix<T>& w) {
  for (const auto& a : gens) {
    if constexpr (kExact<T>) {
      if (!columns_in_span(w, a * w)) return false;
    } else {
      if (distance_to_span(w, a * w) > kInvarianceTol) return false;
    }
  }
  return true;
}

bool invariant_float(const std::vector<MatrixD>& gens, const MatrixD& w) {
  for (const auto& a : gens)
    if (distance_to_span(w, a * w) > kInvarianceTol) return false;
  return true;
}

template <typename T>
Matrix<T> commutant_system(const std::vector<Matrix<T>>& gens) {
  const std::size_t d = gens.front().rows();
  Matrix<T> sys(gens.size() * d * d, d * d);
  std::size_t row = 0;
  for (const auto& a : gens)
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c, ++row)
        for (std::size_t m = 0; m < d; ++m) {
          // (XA - AX)(r, c)
          sys(row, r * d + m) += a(m, c);
          sys(row, m * d + c) -= a(r, m);
        }
  return sys;
}

// Diagonalises the trace form on span(elements) (first element must be I).
template <typename T>
std::vector<std::pair<Matrix<T>, T>> orthogonalize(std::vector<Matrix<T>> v, double tol) {
  std::vector<std::pair<Matrix<T>, T>> out;
  auto is_zero_matrix = [tol](const Matrix<T>& m) {
    if constexpr (kExact<T>)
      return std::all_of(m.data().begin(), m.data().end(), [](const T& x) { return x == 0; });
    else
      return frobenius_norm(m) <= tol;
  };
  while (true) {
    v.erase(std::remove_if(v.begin(), v.end(), is_zero_matrix), v.end());
    if (v.empty()) break;
    std::size_t pick = v.size();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!negligible(trace_product(v[i], v[i]), tol)) {
        pick = i;
        break;
      }
    if (pick == v.size()) {
      for (std::size_t i = 0; i < v.size() && pick == v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j)
          if (!negligible(trace_product(v[i], v[j]), tol)) {
            v[i] += v[j];
            pick = i;
            break;
          }
      if (pick == v.size()) break;
    }
    Matrix<T> p = v[pick];
    T pp = trace_product(p, p);
    v.erase(v.begin() + static_cast<std::ptrdiff_t>(pick));
    for (auto& w : v) {
      T f = trace_product(w, p) / pp;
      w -= p * f;
    }
    if constexpr (!kExact<T>) {
      // Keep the float vectors at unit scale.
      for (auto& w : v) {
        double n = frobenius_norm(w);
        if (n > 0) w *= 1.0 / n;
      }
    }
    out.emplace_back(std::move(p), pp);
  }
  return out;
}

template <typename T>
Decision<T> decide(const std::vector<Matrix<T>>& gens) {
  Decision<T> out;
  const std::size_t d = gens.front().rows();
  if (d == 1) {
    out.verdict = Verdict::Irreducible;
    out.algebra_dim = 1;
    out.method = "dimension one";
    return out;
  }
  const auto alg = closure(gens);
  out.algebra_dim = alg.size();
  if (alg.size() == d * d) {
    out.verdict = Verdict::Irreducible;
    out.method = "full matrix algebra";
    return out;
  }

  // Cyclic subspaces A v for standard and a few fixed pseudo-random vectors.
  std::vector<std::vector<T>> probes;
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<T> e(d, T(0));
    e[j] = T(1);
    probes.push_back(e);
  }
  std::mt19937_64 rng(20240611);
  for (int t = 0; t < 4; ++t) {
    std::vector<T> v(d);
    for (auto& x : v) x = T(static_cast<long>(rng() % 7) - 3);
    probes.push_back(v);
  }
  std::optional<Matrix<T>> best;
  for (const auto& v : probes) {
    if (std::all_of(v.begin(), v.end(), [](const T& x) { return x == T(0); })) continue;
    Matrix<T> images(d, alg.size());
    for (std::size_t b = 0; b < alg.size(); ++b) images.set_column(b, alg[b] * std::span<const T>(v));
    Matrix<T> basis = column_basis(images, kClosureTol);
    if (basis.cols() < d && (!best || basis.cols() < best->cols())) best = basis;
  }
  if (best) {
    out.verdict = Verdict::Reducible;
    out.witness = best;
    out.method = "cyclic subspace";
    return out;
  }

  // Radical of the trace form is a nilpotent ideal J; J V is invariant.
  Matrix<T> gram(alg.size(), alg.size());
  for (std::size_t a = 0; a < alg.size(); ++a)
    for (std::size_t b = a; b < alg.size(); ++b) gram(a, b) = gram(b, a) = trace_product(alg[a], alg[b]);
  Matrix<T> radical = nullspace(gram, kClosureTol);
  if (radical.cols() > 0) {
    Matrix<T> images(d, 0);
    for (std::size_t c = 0; c < radical.cols(); ++c) {
      Matrix<T> n(d, d);
      for (std::size_t a = 0; a < alg.size(); ++a) n += alg[a] * radical(a, c);
      images = hstack(images, n);
    }
    out.verdict = Verdict::Reducible;
    out.witness = column_basis(images, kClosureTol);
    out.method = "trace-form radical";
    return out;
  }

  // Semisimple algebra: irreducible iff the commutant is a division algebra,
  // iff the trace form on the commutant has exactly one positive direction.
  Matrix<T> ns = nullspace(commutant_system(gens), kClosureTol);
  if (ns.cols() <= 1) {
    out.verdict = Verdict::Irreducible;
    out.method = "scalar commutant";
    return out;
  }
  std::vector<Matrix<T>> elements{Matrix<T>::identity(d)};
  for (std::size_t c = 0; c < ns.cols(); ++c) {
    Matrix<T> m = reshape(ns.column(c), d);
    if constexpr (!kExact<T>) m *= 1.0 / frobenius_norm(m);
    elements.push_back(m);
  }
  auto diag = orthogonalize(elements, kClosureTol * static_cast<double>(d));
  std::size_t positive = 0;
  std::optional<Matrix<T>> splitter;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    if (negligible(diag[i].second, kClosureTol * static_cast<double>(d)) || diag[i].second < T(0)) continue;
    ++positive;
    if (i > 0 && !splitter) splitter = diag[i].first;
  }
  out.notes.push_back("commutant dimension " + std::to_string(ns.cols()));
  if (positive <= 1) {
    out.verdict = Verdict::Irreducible;
    out.method = "division commutant";
    return out;
  }
  out.verdict = Verdict::Reducible;
  out.method = "commutant splitting";
  if constexpr (kExact<T>) {
    // Basis elements of the commutant have small entries; try them before
    // the orthogonalised splitter.
    for (std::size_t i = 1; i < elements.size(); ++i)
      if (auto q = split_exact(elements[i])) {
        out.witness = smaller_part(*q);
        return out;
      }
    if (auto q = split_exact(*splitter)) {
      out.witness = smaller_part(*q);
      return out;
    }
    out.float_witness = smaller_part(split_float(to_double(*splitter)));
    out.notes.push_back("invariant subspace is irrational; basis given in floating point");
  } else {
    out.witness = smaller_part(split_float(*splitter));
  }
  return out;
}

std::vector<MatrixD> to_double(const std::vector<MatrixQ>& v) {
  std::vector<MatrixD> out;
  for (const auto& m : v) out.push_back(svfkit::to_double(m));
  return out;
}

std::vector<MatrixQ> restrict_to(const std::vector<MatrixQ>& gens, const MatrixQ& w, MatrixQ* rows_out = nullptr) {
  auto pivots = row_reduce(w.transpose()).pivots;
  const std::size_t k = w.cols();
  MatrixQ wr(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) wr(i, j) = w(pivots[i], j);
  std::vector<MatrixQ> out;
  for (const auto& a : gens) {
    MatrixQ aw = a * w;
    MatrixQ rhs(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) rhs(i, j) = aw(pivots[i], j);
    out.push_back(solve(wr, rhs));
  }
  if (rows_out) *rows_out = wr;
  return out;
}

std::vector<MatrixD> restrict_to(const std::vector<MatrixD>& gens, const MatrixD& q) {
  std::vector<MatrixD> out;
  for (const auto& a : gens) out.push_back(q.transpose() * a * q);
  return out;
}

// Shrinks a float invariant subspace (orthonormal columns) to a minimal one.
MatrixD refine_float(const std::vector<MatrixD>& gens, MatrixD w, StructureReport& rep) {
  while (w.cols() > 1) {
    auto sub = decide(normalized(restrict_to(gens, w)));
    if (sub.verdict != Verdict::Reducible) break;
    w = orthonormal_basis(w * *sub.witness);
    if (!invariant_float(gens, w)) {
      rep.notes.push_back("refinement of the witness failed verification; stopped early");
      break;
    }
  }
  return w;
}

StructureReport report_from_float(const std::vector<MatrixD>& gens) {
  StructureReport rep;
  rep.backend = Backend::Float;
  auto dec = decide(gens);
  rep.algebra_dim = dec.algebra_dim;
  rep.method = dec.method;
  rep.notes = dec.notes;
  rep.verdict = dec.verdict;
  if (dec.verdict == Verdict::Irreducible) {
    rep.certified = false;
    rep.notes.push_back("floating-point verdict; irreducibility is not certified");
    return rep;
  }
  MatrixD w = orthonormal_basis(*dec.witness);
  if (w.cols() == 0 || w.cols() >= gens.front().rows() || !invariant_float(gens, w)) {
    rep.verdict = Verdict::Unknown;
    rep.notes.push_back("candidate invariant subspace failed verification at 1e-10");
    return rep;
  }
  rep.witness = refine_float(gens, w, rep);
  rep.certified = true;
  return rep;
}

StructureReport report_from_exact(const std::vector<MatrixQ>& gens) {
  StructureReport rep;
  rep.backend = Backend::Exact;
  auto dec = decide(gens);
  rep.algebra_dim = dec.algebra_dim;
  rep.method = dec.method;
  rep.notes = dec.notes;
  rep.verdict = dec.verdict;
  rep.certified = true;
  if (dec.verdict != Verdict::Reducible) return rep;
  const auto fgens = normalized(to_double(gens));
  if (dec.float_witness) {
    if (!invariant_float(fgens, *dec.float_witness)) {
      rep.verdict = Verdict::Unknown;
      rep.certified = false;
      rep.notes.push_back("floating-point witness failed verification at 1e-10");
      return rep;
    }
    rep.witness = refine_float(fgens, *dec.float_witness, rep);
    return rep;
  }
  MatrixQ w = *dec.witness;
  if (!invariant(gens, w)) throw NumericError("internal: exact witness is not invariant");
  while (w.cols() > 1) {
    auto sub = decide(restrict_to(gens, w));
    if (sub.verdict != Verdict::Reducible) break;
    if (!sub.witness) {
      // sub works in the coordinates of w's columns.
      rep.witness = refine_float(fgens, orthonormal_basis(svfkit::to_double(w) * *sub.float_witness), rep);
      rep.notes.insert(rep.notes.end(), sub.notes.begin(), sub.notes.end());
      return rep;
    }
    w = w * *sub.witness;
  }
  rep.witness_exact = w;
  rep.witness = svfkit::to_double(w);
  return rep;
}

}  // namespace

std::vector<MatrixQ> algebra_closure(const std::vector<MatrixQ>& generators) {
  if (generators.empty()) throw InputError("algebra_closure: empty tuple");
  return closure(generators);
}

std::vector<MatrixD> algebra_closure(const std::vector<MatrixD>& generators) {
  if (generators.empty()) throw InputError("algebra_closure: empty tuple");
  return closure(normalized(generators));
}

std::size_t algebra_dim(const MatrixTuple& tuple) {
  return tuple.is_exact() ? algebra_closure(tuple.exact()).size() : algebra_closure(tuple.matrices()).size();
}

StructureReport irreducibility_test(const MatrixTuple& tuple) {
  if (tuple.is_exact()) return report_from_exact(tuple.exact());
  return report_from_float(normalized(tuple.matrices()));
}

MatrixTuple exterior_power_tuple(const MatrixTuple& tuple, int k) {
  const int d = static_cast<int>(tuple.dim());
  if (k < 0 || k > d) throw InputError("exterior power degree out of range");
  if (tuple.is_exact()) {
    std::vector<MatrixQ> out;
    for (const auto& m : tuple.exact()) out.push_back(exterior_power(m, k));
    return MatrixTuple::from_exact(std::move(out), tuple.labels());
  }
  std::vector<MatrixD> out;
  for (const auto& m : tuple.matrices()) out.push_back(exterior_power(m, k));
  return MatrixTuple::from_float(std::move(out), tuple.labels());
}

StructureReport k_irreducibility(const MatrixTuple& tuple, int k) {
  auto rep = irreducibility_test(exterior_power_tuple(tuple, k));
  rep.notes.push_back("exterior power of degree " + std::to_string(k));
  return rep;
}

// ---------------------------------------------------------------------------
// Block triangular form.

namespace {

template <typename T>
Matrix<T> block_diag(const Matrix<T>& a, const Matrix<T>& b) {
  Matrix<T> out(a.rows() + b.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, a.cols() + j) = b(i, j);
  return out;
}

// Returns false when an exact run meets an irrational invariant subspace.
bool triangularize_exact(const std::vector<MatrixQ>& gens, MatrixQ& x, std::vector<std::size_t>& blocks) {
  const std::size_t d = gens.front().rows();
  auto rep = report_from_exact(gens);
  if (rep.verdict != Verdict::Reducible) {
    x = MatrixQ::identity(d);
    blocks = {d};
    return rep.verdict == Verdict::Irreducible;
  }
  if (!rep.witness_exact) return false;
  MatrixQ x0 = *rep.witness_exact;
  const std::size_t k = x0.cols();
  for (std::size_t j = 0; j < d && x0.cols() < d; ++j) {
    MatrixQ e(d, 1);
    e(j, 0) = 1;
    MatrixQ trial = hstack(x0, e);
    if (rank(trial) > x0.cols()) x0 = trial;
  }
  MatrixQ xi = inverse(x0);
  std::vector<MatrixQ> quotient;
  for (const auto& a : gens) quotient.push_back((xi * a * x0).block(k, k, d - k, d - k));
  MatrixQ xq;
  std::vector<std::size_t> sub;
  if (!triangularize_exact(quotient, xq, sub)) return false;
  x = x0 * block_diag(MatrixQ::identity(k), xq);
  blocks = {k};
  blocks.insert(blocks.end(), sub.begin(), sub.end());
  return true;
}

void triangularize_float(const std::vector<MatrixD>& gens, MatrixD& x, std::vector<std::size_t>& blocks,
                         bool& certified, std::vector<std::string>& notes) {
  const std::size_t d = gens.front().rows();
  auto rep = report_from_float(normalized(gens));
  if (rep.verdict != Verdict::Reducible) {
    if (rep.verdict == Verdict::Unknown) {
      certified = false;
      notes.push_back("a diagonal block of dimension " + std::to_string(d) + " has an unknown verdict");
    }
    x = MatrixD::identity(d);
    blocks = {d};
    return;
  }
  const std::size_t k = rep.witness.cols();
  MatrixD x0 = orthonormal_basis(hstack(rep.witness, MatrixD::identity(d)));
  std::vector<MatrixD> quotient;
  for (const auto& a : gens) quotient.push_back((x0.transpose() * a * x0).block(k, k, d - k, d - k));
  MatrixD xq;
  std::vector<std::size_t> sub;
  triangularize_float(quotient, xq, sub, certified, notes);
  x = x0 * block_diag(MatrixD::identity(k), xq);
  blocks = {k};
  blocks.insert(blocks.end(), sub.begin(), sub.end());
}

}  // namespace

MatrixTuple conjugate_by(const MatrixTuple& tuple, const BlockTriangularization& form) {
  if (tuple.is_exact() && form.basis_exact) return tuple.conjugated(*form.basis_exact);
  return tuple.conjugated(form.basis);
}

std::vector<MatrixTuple> diagonal_blocks(const MatrixTuple& tuple, const BlockTriangularization& form) {
  MatrixTuple conj = conjugate_by(tuple, form);
  std::vector<MatrixTuple> out;
  std::size_t offset = 0;
  for (std::size_t b : form.blocks) {
    if (conj.is_exact()) {
      std::vector<MatrixQ> m;
      for (const auto& a : conj.exact()) m.push_back(a.block(offset, offset, b, b));
      out.push_back(MatrixTuple::from_exact(std::move(m), tuple.labels()));
    } else {
      std::vector<MatrixD> m;
      for (const auto& a : conj.matrices()) m.push_back(a.block(offset, offset, b, b));
      out.push_back(MatrixTuple::from_float(std::move(m), tuple.labels()));
    }
    offset += b;
  }
  return out;
}

std::optional<BlockTriangularization> block_triangularize(const MatrixTuple& tuple) {
  BlockTriangularization form;
  bool done = false;
  if (tuple.is_exact()) {
    MatrixQ x;
    if (triangularize_exact(tuple.exact(), x, form.blocks)) {
      form.basis_exact = x;
      form.basis = to_double(x);
      done = true;
    } else {
      form.blocks.clear();
      form.notes.push_back("irrational invariant subspace; basis change computed in floating point");
    }
  }
  if (!done) triangularize_float(tuple.matrices(), form.basis, form.blocks, form.certified, form.notes);
  if (form.blocks.size() == 1 && form.certified) return std::nullopt;

  // Check the block structure.
  MatrixTuple conj = conjugate_by(tuple, form);
  std::size_t offset = 0;
  for (std::size_t b : form.blocks) {
    const std::size_t end = offset + b;
    for (std::size_t i = 0; i < conj.size(); ++i) {
      const double scale = max_abs(conj[i]);
      for (std::size_t r = end; r < tuple.dim(); ++r)
        for (std::size_t c = offset; c < end; ++c) {
          bool zero = conj.is_exact() ? conj.exact()[i](r, c) == 0 : std::fabs(conj[i](r, c)) <= 1e-10 * scale;
          if (!zero) throw NumericError("block triangular form failed verification");
        }
    }
    offset = end;
  }
  return form;
}

// ---------------------------------------------------------------------------
// Generalised permutation form.

namespace {

template <typename T>
bool generalized_permutation_impl(const Matrix<T>& m, double tol) {
  const std::size_t d = m.rows();
  std::vector<int> row_count(d, 0), col_count(d, 0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (!negligible(m(i, j), tol)) {
        ++row_count[i];
        ++col_count[j];
      }
  for (std::size_t i = 0; i < d; ++i)
    if (row_count[i] != 1 || col_count[i] != 1) return false;
  return true;
}

template <typename T>
void read_permutation(const std::vector<Matrix<T>>& mats, PermutationForm& form, std::vector<std::vector<T>>& scalars) {
  form.permutation.clear();
  scalars.clear();
  for (const auto& m : mats) {
    std::vector<int> pi(m.cols());
    std::vector<T> a(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < m.rows(); ++i)
        if (FieldTraits<T>::magnitude(m(i, j)) > FieldTraits<T>::magnitude(m(best, j))) best = i;
      pi[j] = static_cast<int>(best);
      a[j] = m(best, j);
    }
    form.permutation.push_back(pi);
    scalars.push_back(a);
  }
}

std::vector<double> unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

double line_distance(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  double rest = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) rest += (v[i] - dot * u[i]) * (v[i] - dot * u[i]);
  return std::sqrt(rest);
}

bool contains_line(const std::vector<std::vector<double>>& lines, const std::vector<double>& v, double tol) {
  for (const auto& u : lines)
    if (line_distance(u, v) < tol) return true;
  return false;
}

// Real eigenlines of algebraically simple real eigenvalues.
std::vector<std::vector<double>> simple_eigenlines(const MatrixD& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(to_eigen(a), true);
  std::vector<std::vector<double>> out;
  if (solver.info() != Eigen::Success) return out;
  const auto& ev = solver.eigenvalues();
  const Eigen::Index n = ev.size();
  const double scale = ev.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::fabs(ev(i).imag()) > 1e-9 * scale) continue;
    bool simple = true;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && std::abs(ev(j) - ev(i)) <= 1e-7 * scale) simple = false;
    if (!simple) continue;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) v[static_cast<std::size_t>(r)] = solver.eigenvectors()(r, i).real();
    out.push_back(unit(v));
  }
  return out;
}

bool choose_orbits(const std::vector<std::vector<std::vector<double>>>& orbits, std::size_t index, std::size_t d,
                   std::vector<std::vector<double>>& chosen) {
  if (chosen.size() == d) {
    MatrixD x(d, d);
    for (std::size_t j = 0; j < d; ++j) x.set_column(j, chosen[j]);
    return rank(x, 1e-8) == d;
  }
  for (std::size_t o = index; o < orbits.size(); ++o) {
    if (chosen.size() + orbits[o].size() > d) continue;
    const std::size_t before = chosen.size();
    chosen.insert(chosen.end(), orbits[o].begin(), orbits[o].end());
    if (choose_orbits(orbits, o + 1, d, chosen)) return true;
    chosen.resize(before);
  }
  return false;
}

void fill_float(PermutationForm& form, const std::vector<MatrixD>& conj) {
  std::vector<std::vector<double>> scalars;
  read_permutation(conj, form, scalars);
  form.scalars = scalars;
}

void fill_exact(PermutationForm& form, const std::vector<MatrixQ>& conj) {
  std::vector<std::vector<Rational>> scalars;
  read_permutation(conj, form, scalars);
  form.scalars.clear();
  for (const auto& row : scalars) {
    std::vector<double> r;
    for (const auto& x : row) r.push_back(svfkit::to_double(x));
    form.scalars.push_back(r);
  }
  form.scalars_exact = scalars;
}

}  // namespace

bool is_generalized_permutation(const MatrixD& m) { return generalized_permutation_impl(m, 1e-12 * max_abs(m)); }
bool is_generalized_permutation(const MatrixQ& m) { return generalized_permutation_impl(m, 0.0); }

std::optional<PermutationForm> detect_generalized_permutation(const MatrixTuple& tuple, const PermutationOptions& opts) {
  const std::size_t d = tuple.dim();
  PermutationForm form;
  bool standard = tuple.is_exact()
                      ? std::all_of(tuple.exact().begin(), tuple.exact().end(),
                                    [](const MatrixQ& m) { return is_generalized_permutation(m); })
                      : std::all_of(tuple.matrices().begin(), tuple.matrices().end(),
                                    [](const MatrixD& m) { return is_generalized_permutation(m); });
  if (standard) {
    form.standard_basis = true;
    form.basis = MatrixD::identity(d);
    if (tuple.is_exact()) {
      form.basis_exact = MatrixQ::identity(d);
      fill_exact(form, tuple.exact());
    } else {
      fill_float(form, tuple.matrices());
    }
    return form;
  }

  const auto gens = normalized(tuple.matrices());
  std::vector<std::vector<double>> candidates;
  for (int len = 1; len <= opts.max_word_length; ++len) {
    if (word_count(tuple.size(), static_cast<std::size_t>(len), std::numeric_limits<std::uint64_t>::max()) > 4096) break;
    for_each_word(tuple.size(), static_cast<std::size_t>(len), [&](const Word& w) {
      for (auto& line : simple_eigenlines(word_product(gens, w)))
        if (!contains_line(candidates, line, opts.angle_tol)) candidates.push_back(line);
    });
  }

  std::vector<std::vector<std::vector<double>>> orbits;
  std::vector<std::vector<double>> rejected;
  for (const auto& c : candidates) {
    bool seen = contains_line(rejected, c, opts.angle_tol);
    for (const auto& o : orbits) seen = seen || contains_line(o, c, opts.angle_tol);
    if (seen) continue;
    std::vector<std::vector<double>> orbit{c};
    bool overflow = false;
    for (std::size_t q = 0; q < orbit.size() && !overflow; ++q) {
      for (const auto& a : gens) {
        auto image = unit(a * std::span<const double>(orbit[q]));
        if (contains_line(orbit, image, opts.angle_tol)) continue;
        orbit.push_back(image);
        if (orbit.size() > opts.line_budget) {
          overflow = true;
          break;
        }
      }
    }
    form.lines_examined += orbit.size();
    if (overflow) {
      rejected.insert(rejected.end(), orbit.begin(), orbit.end());
      continue;
    }
    if (orbit.size() <= d) orbits.push_back(orbit);
  }

  std::vector<std::vector<double>> chosen;
  if (!choose_orbits(orbits, 0, d, chosen)) return std::nullopt;
  MatrixD x(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    // Scale so the largest entry is +1.
    std::size_t big = 0;
    for (std::size_t i = 1; i < d; ++i)
      if (std::fabs(chosen[j][i]) > std::fabs(chosen[j][big])) big = i;
    const double f = 1.0 / chosen[j][big];
    for (std::size_t i = 0; i < d; ++i) x(i, j) = chosen[j][i] * f;
  }

  if (tuple.is_exact()) {
    MatrixQ xq(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) xq(i, j) = rationalize(x(i, j), kMaxDen);
    if (determinant(xq) != 0) {
      MatrixQ xi = inverse(xq);
      std::vector<MatrixQ> conj;
      for (const auto& a : tuple.exact()) conj.push_back(xi * a * xq);
      if (std::all_of(conj.begin(), conj.end(), [](const MatrixQ& m) { return is_generalized_permutation(m); })) {
        form.basis_exact = xq;
        form.basis = to_double(xq);
        fill_exact(form, conj);
        return form;
      }
    }
  }
  MatrixD xi = inverse(x);
  std::vector<MatrixD> conj;
  for (const auto& a : tuple.matrices()) {
    MatrixD c = xi * a * x;
    if (!generalized_permutation_impl(c, 1e-8 * max_abs(c))) return std::nullopt;
    conj.push_back(c);
  }
  form.basis = x;
  fill_float(form, conj);
  return form;
}

// ---------------------------------------------------------------------------
// Quasimultiplicativity evidence.

QuasimultReport quasimult_search(const MatrixTuple& tuple, double s, const QuasimultOptions& opts) {
  const double d = static_cast<double>(tuple.dim());
  if (!(s > 0.0 && s < d) || std::floor(s) == s) throw DomainError("quasimult_search needs k < s < k+1 inside (0, d)");
  if (opts.n_max == 0 || opts.K_max < 0) throw InputError("quasimult_search: n_max >= 1 and K_max >= 0 required");
  const std::size_t N = tuple.size();

  struct Entry {
    Word word;
    MatrixD product;
    double log_phi;
  };
  auto collect = [&](std::size_t lo, std::size_t hi) {
    std::vector<Entry> out;
    std::uint64_t total = 0;
    for (std::size_t n = lo; n <= hi; ++n) total += word_count(N, n);
    if (total > (std::uint64_t{1} << 20)) throw BudgetError("quasimult_search: too many words");
    for (std::size_t n = lo; n <= hi; ++n)
      for_each_word(N, n, [&](const Word& w) {
        MatrixD p = word_product(tuple, w);
        out.push_back({w, p, log_svf_from_log_spectrum(log_singular_values(p), s)});
      });
    return out;
  };
  const auto words = collect(1, opts.n_max);
  const auto bridges = collect(0, static_cast<std::size_t>(opts.K_max));
  const std::uint64_t W = words.size();
  const std::uint64_t total_pairs = W * W;

  QuasimultReport rep;
  rep.s = s;
  std::vector<std::uint64_t> pairs;
  if (total_pairs > opts.pair_budget) {
    rep.sampled = true;
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, total_pairs - 1);
    pairs.resize(opts.pair_budget);
    for (auto& p : pairs) p = pick(rng);
    std::sort(pairs.begin(), pairs.end());
  }
  const std::uint64_t count = rep.sampled ? pairs.size() : total_pairs;
  rep.pairs_tested = count;

  const std::size_t K1 = static_cast<std::size_t>(opts.K_max) + 1;
  struct Partial {
    // worst[n][l]: min over pairs at level n of max over bridges of length <= l.
    std::vector<std::vector<double>> worst;
    std::uint64_t worst_pair = 0;
    std::size_t worst_bridge = 0;
    double worst_value = std::numeric_limits<double>::infinity();
  };
  auto work = [&](unsigned t, unsigned T, Partial& part) {
    part.worst.assign(opts.n_max, std::vector<double>(K1, std::numeric_limits<double>::infinity()));
    std::vector<double> by_len(K1);
    for (std::uint64_t idx = t; idx < count; idx += T) {
      const std::uint64_t pair = rep.sampled ? pairs[idx] : idx;
      const Entry& a = words[pair / W];
      const Entry& b = words[pair % W];
      std::fill(by_len.begin(), by_len.end(), -std::numeric_limits<double>::infinity());
      std::size_t best_bridge = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < bridges.size(); ++k) {
        MatrixD p = a.product * bridges[k].product * b.product;
        double r = log_svf_from_log_spectrum(log_singular_values(p), s) - a.log_phi - b.log_phi;
        auto& slot = by_len[bridges[k].word.size()];
        slot = std::max(slot, r);
        if (r > best) {
          best = r;
          best_bridge = k;
        }
      }
      for (std::size_t l = 1; l < K1; ++l) by_len[l] = std::max(by_len[l], by_len[l - 1]);
      const std::size_t level = std::max(a.word.size(), b.word.size()) - 1;
      for (std::size_t l = 0; l < K1; ++l) part.worst[level][l] = std::min(part.worst[level][l], by_len[l]);
      if (best < part.worst_value) {
        part.worst_value = best;
        part.worst_pair = pair;
        part.worst_bridge = best_bridge;
      }
    }
  };
  const unsigned T = std::max(1u, opts.threads);
  std::vector<Partial> parts(T);
  if (T == 1) {
    work(0, 1, parts[0]);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < T; ++t) pool.emplace_back(work, t, T, std::ref(parts[t]));
    for (auto& th : pool) th.join();
  }
  std::vector<std::vector<double>> worst(opts.n_max, std::vector<double>(K1, std::numeric_limits<double>::infinity()));
  const Partial* w_part = nullptr;
  for (const auto& p : parts) {
    for (std::size_t n = 0; n < opts.n_max; ++n)
      for (std::size_t l = 0; l < K1; ++l) worst[n][l] = std::min(worst[n][l], p.worst[n][l]);
    if (!w_part || p.worst_value < w_part->worst_value ||
        (p.worst_value == w_part->worst_value && p.worst_pair < w_part->worst_pair))
      w_part = &p;
  }
  // Cumulative over levels.
  for (std::size_t n = 1; n < opts.n_max; ++n)
    for (std::size_t l = 0; l < K1; ++l) worst[n][l] = std::min(worst[n][l], worst[n - 1][l]);
  for (std::size_t n = 0; n < opts.n_max; ++n) {
    double m = worst[n][K1 - 1];
    rep.c_by_length.push_back(std::isfinite(m) ? std::max(1.0, std::exp(-m)) : 1.0);
  }
  const double m_all = worst[opts.n_max - 1][K1 - 1];
  rep.c = std::isfinite(m_all) ? std::max(1.0, std::exp(-m_all)) : 1.0;
  rep.K = opts.K_max;
  for (std::size_t l = 0; l < K1; ++l)
    if (worst[opts.n_max - 1][l] >= std::min(0.0, m_all) - 1e-12) {
      rep.K = static_cast<int>(l);
      break;
    }
  if (w_part && std::isfinite(w_part->worst_value)) {
    rep.worst_i = words[w_part->worst_pair / W].word;
    rep.worst_j = words[w_part->worst_pair % W].word;
    rep.worst_bridge = bridges[w_part->worst_bridge].word;
  }
  const std::size_t half = (opts.n_max + 1) / 2;
  rep.found = std::isfinite(rep.c) &&
              (opts.n_max == 1 || rep.c_by_length[opts.n_max - 1] <= 1.5 * rep.c_by_length[half - 1]);
  return rep;
}

EqualModulusReport equal_modulus_probe(const MatrixTuple& tuple, std::size_t n, double tol, std::uint64_t budget) {
  EqualModulusReport rep;
  for (std::size_t len = 1; len <= n; ++len) {
    word_count(tuple.size(), len, budget);
    for_each_word(tuple.size(), len, [&](const Word& w) {
      auto moduli = eigen_moduli(word_product(tuple, w)).values;
      auto [lo, hi] = std::minmax_element(moduli.begin(), moduli.end());
      const double spread = *hi / *lo - 1.0;
      ++rep.words_checked;
      if (spread > rep.worst_spread) {
        rep.worst_spread = spread;
        rep.worst_word = w;
      }
    });
  }
  rep.holds = rep.worst_spread <= tol;
  return rep;
}

}  // namespace svfkit
