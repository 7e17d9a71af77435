#include "svfkit/equilibrium.hpp"

#include "svfkit/linalg.hpp"
#include "svfkit/nonneg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

namespace svfkit {

namespace {

constexpr double kTieTol = 1e-10;

// k with k < s <= k + 1 (k = 0 at s = 0): the lift degree used at s.
int lift_degree(double s, int d) {
  if (s < 0.0 || s > d) throw InputError("s must lie in [0, d]");
  if (s == 0.0) return 0;
  return static_cast<int>(std::ceil(s)) - 1;
}

bool is_integer(double s) { return s == std::floor(s); }

int multiplicity_from_lift(double s, int d) {
  if (is_integer(s)) return static_cast<int>(binomial(d, static_cast<int>(s)));
  int k = static_cast<int>(std::floor(s));
  return static_cast<int>((d - k) * binomial(d, k));
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double t = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) t += a[i] * b[i];
  return t;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Linear representation mu([w]) = alpha M_w beta.
struct LinearRep {
  std::vector<double> alpha;
  std::vector<MatrixD> matrices;
  std::vector<double> beta;
};

LinearRep representation(const MeasureSpec& spec) {
  LinearRep r;
  if (const auto* b = std::get_if<BernoulliSpec>(&spec)) {
    r.alpha = {1.0};
    r.beta = {1.0};
    for (double p : b->probs) r.matrices.push_back(MatrixD{{p}});
  } else if (const auto* m = std::get_if<MarkovSpec>(&spec)) {
    const std::size_t S = m->transition.rows();
    r.alpha = m->stationary;
    r.beta.assign(S, 1.0);
    r.matrices.assign(m->alphabet, MatrixD(S, S));
    for (std::size_t a = 0; a < S; ++a)
      for (std::size_t b = 0; b < S; ++b)
        if (m->symbol_map[a][b] >= 0 && m->transition(a, b) > 0.0) r.matrices[m->symbol_map[a][b]](a, b) = m->transition(a, b);
  } else {
    const auto& pg = std::get<PerronGibbsSpec>(spec);
    double uv = dot(pg.left, pg.right);
    for (double x : pg.left) r.alpha.push_back(x / uv);
    r.beta = pg.right;
    for (const auto& m : pg.matrices) r.matrices.push_back(m * (1.0 / pg.perron_value));
  }
  return r;
}

std::vector<double> row_times(const std::vector<double>& x, const MatrixD& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    if (x[i] != 0.0)
      for (std::size_t j = 0; j < m.cols(); ++j) out[j] += x[i] * m(i, j);
  return out;
}

MatrixD block_diag(const MatrixD& a, const MatrixD& b) {
  MatrixD out(a.rows() + b.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, a.cols() + j) = b(i, j);
  return out;
}

bool same_bernoulli(const BernoulliSpec& a, const BernoulliSpec& b) {
  if (a.probs.size() != b.probs.size()) return false;
  for (std::size_t i = 0; i < a.probs.size(); ++i)
    if (std::fabs(a.probs[i] - b.probs[i]) > 1e-12) return false;
  return true;
}

bool is_diagonal(const MatrixD& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

// Largest n <= 8 whose word count stays small.
std::size_t support_check_length(std::size_t N) {
  std::size_t n = 1;
  double count = static_cast<double>(N);
  while (n < 8 && count * static_cast<double>(N) <= 65536.0) {
    count *= static_cast<double>(N);
    ++n;
  }
  return n;
}

PressureEstimate exact_estimate(double p, const std::string& method) {
  PressureEstimate e;
  e.lower = e.upper = p;
  e.exact = true;
  e.methods = {method};
  return e;
}

void check_s(double s, int d) {
  if (!(s > 0.0) || !(s < d)) throw InputError("s must lie strictly between 0 and d");
}

std::vector<double> similitude_factors(const MatrixTuple& tuple) {
  std::vector<double> c;
  for (const auto& a : tuple.matrices()) {
    MatrixD g = a.transpose() * a;
    double t = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) t += g(i, i);
    c.push_back(std::sqrt(t / static_cast<double>(g.rows())));
  }
  return c;
}

EquilibriumReport similitude_report(const MatrixTuple& tuple, double s) {
  auto c = similitude_factors(tuple);
  std::vector<double> w;
  for (double x : c) w.push_back(std::pow(x, s));
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  EquilibriumReport r;
  r.s = s;
  r.route = "quasimultiplicative";
  EquilibriumState st;
  BernoulliSpec b;
  for (double x : w) {
    b.probs.push_back(x / total);
    st.potential.push_back(MatrixD{{x}});
  }
  // Equal factors give exact rational weights 1/N.
  if (std::all_of(c.begin(), c.end(), [&](double x) { return x == c.front(); })) {
    b.exact = std::vector<Rational>(c.size(), Rational(1, static_cast<long>(c.size())));
    for (auto& p : b.probs) p = 1.0 / static_cast<double>(c.size());
  }
  st.spec = b;
  st.pressure = std::log(total);
  st.labels = {"uniform scaling"};
  r.states.push_back(st);
  r.pressure = st.pressure;
  r.pressure_estimate = exact_estimate(r.pressure, "similitude closed form");
  r.multiplicity_bound = 1;
  r.exact = true;
  r.complete = true;
  r.notes.push_back("every matrix is a similitude, so phi^s(A_w) = prod_t c_{w_t}^s is multiplicative");
  return r;
}

}  // namespace

std::string to_string(const LiftLabel& label) {
  std::ostringstream out;
  out << "{";
  for (std::size_t j = 0; j < label.S.size(); ++j) out << (j ? "," : "") << label.S[j] + 1;
  out << "}," << label.i + 1;
  return out.str();
}

std::vector<LiftLabel> lift_labels(int d, int k) {
  if (k < 0 || k >= d) throw InputError("lift: k must satisfy 0 <= k < d");
  std::vector<LiftLabel> out;
  WedgeBasis basis(d, k);
  for (const auto& S : basis.combinations())
    for (int i = 0; i < d; ++i)
      if (std::find(S.begin(), S.end(), i) == S.end()) out.push_back({S, i});
  return out;
}

MatrixD lift_matrix(const std::vector<int>& permutation, const std::vector<double>& scalars, double s, int k) {
  const int d = static_cast<int>(permutation.size());
  if (scalars.size() != permutation.size()) throw InputError("lift: scalar count mismatch");
  if (k < 0 || k >= d) throw InputError("lift: k must satisfy 0 <= k < d");
  if (s < k || s > k + 1) throw InputError("lift: s must satisfy k <= s <= k + 1");
  {
    std::vector<int> sorted = permutation;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < d; ++i)
      if (sorted[i] != i) throw InputError("lift: not a permutation");
  }
  for (double a : scalars)
    if (a == 0.0 || !std::isfinite(a)) throw InputError("lift: scalars must be nonzero and finite");
  auto labels = lift_labels(d, k);
  std::map<std::pair<Combination, int>, std::size_t> index;
  for (std::size_t r = 0; r < labels.size(); ++r) index[{labels[r].S, labels[r].i}] = r;
  MatrixD out(labels.size(), labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const auto& [S, i] = labels[c];
    double value = std::pow(std::fabs(scalars[i]), s - k);
    Combination image;
    for (int j : S) {
      value *= std::fabs(scalars[j]);
      image.push_back(permutation[j]);
    }
    std::sort(image.begin(), image.end());
    out(index.at({image, permutation[i]}), c) = value;
  }
  return out;
}

MatrixD lift_matrix(const MatrixD& a, double s, int k) {
  if (!a.is_square() || !is_generalized_permutation(a)) throw InputError("lift: matrix is not a generalised permutation");
  const std::size_t d = a.rows();
  double scale = max_abs(a);
  std::vector<int> perm(d);
  std::vector<double> scalars(d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i)
      if (std::fabs(a(i, j)) > 1e-12 * scale) {
        perm[j] = static_cast<int>(i);
        scalars[j] = a(i, j);
      }
  return lift_matrix(perm, scalars, s, k);
}

LiftedTuple permutation_lift(const PermutationForm& form, double s, int k) {
  if (form.permutation.empty()) throw InputError("lift: empty permutation form");
  LiftedTuple out;
  out.d = static_cast<int>(form.permutation.front().size());
  out.k = k;
  out.s = s;
  out.labels = lift_labels(out.d, k);
  for (std::size_t i = 0; i < form.permutation.size(); ++i)
    out.matrices.push_back(lift_matrix(form.permutation[i], form.scalars.at(i), s, k));
  return out;
}

LiftedTuple permutation_lift(const MatrixTuple& tuple, double s, int k) {
  LiftedTuple out;
  out.d = static_cast<int>(tuple.dim());
  out.k = k;
  out.s = s;
  out.labels = lift_labels(out.d, k);
  for (const auto& a : tuple.matrices()) out.matrices.push_back(lift_matrix(a, s, k));
  return out;
}

std::optional<Word> distinguishing_word(const MeasureSpec& a, const MeasureSpec& b, double tol) {
  if (alphabet_size(a) != alphabet_size(b)) return Word{};
  LinearRep ra = representation(a), rb = representation(b);
  const std::size_t N = ra.matrices.size();
  std::vector<MatrixD> m;
  for (std::size_t i = 0; i < N; ++i) m.push_back(block_diag(ra.matrices[i], rb.matrices[i]));
  std::vector<double> alpha = ra.alpha, beta = ra.beta;
  alpha.insert(alpha.end(), rb.alpha.begin(), rb.alpha.end());
  for (double x : rb.beta) beta.push_back(-x);

  // Breadth first over words; only words whose vector alpha M_w is new to
  // the span are expanded, so at most dim(a) + dim(b) words are expanded.
  std::vector<std::vector<double>> basis;
  std::deque<std::pair<Word, std::vector<double>>> queue;
  queue.push_back({Word{}, alpha});
  while (!queue.empty()) {
    auto [w, x] = std::move(queue.front());
    queue.pop_front();
    if (std::fabs(dot(x, beta)) > tol) return w;
    std::vector<double> r = x;
    for (const auto& q : basis) {
      double c = dot(r, q);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * q[i];
    }
    double nr = norm2(r), nx = norm2(x);
    if (nr <= 1e-9 * std::max(nx, 1e-300)) continue;
    for (double& t : r) t /= nr;
    basis.push_back(r);
    for (std::size_t i = 0; i < N; ++i) {
      Word next = w;
      next.push_back(static_cast<int>(i));
      queue.push_back({next, row_times(x, m[i])});
    }
  }
  return std::nullopt;
}

EquilibriumReport nonneg_equilibria(const std::vector<MatrixD>& matrices) {
  if (matrices.empty()) throw InputError("nonneg_equilibria: empty tuple");
  const std::size_t D = matrices.front().rows();
  MatrixD sum(D, D);
  for (const auto& m : matrices) {
    if (m.rows() != D || m.cols() != D) throw InputError("nonneg_equilibria: shape mismatch");
    require_nonnegative(m, "nonneg_equilibria");
    sum += m;
  }
  struct Candidate {
    std::vector<std::size_t> component;
    PerronData perron;
    double log_rho;
  };
  std::vector<Candidate> candidates;
  std::size_t nilpotent = 0;
  for (const auto& c : strongly_connected_components(sum)) {
    MatrixD sub = restrict(sum, c);
    if (c.size() == 1 && sub(0, 0) == 0.0) {
      ++nilpotent;
      continue;
    }
    PerronData p = perron(sub);
    candidates.push_back({c, p, std::log(p.value)});
  }
  if (candidates.empty()) throw DomainError("nonneg_equilibria: every component is nilpotent");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::max(best, c.log_rho);

  EquilibriumReport r;
  r.route = "nonnegative (Perron-Gibbs)";
  r.pressure = best;
  r.pressure_estimate = exact_estimate(best, "log Perron value of the sum");
  r.multiplicity_bound = static_cast<int>(D);
  r.exact = true;
  r.complete = true;
  if (nilpotent) r.notes.push_back(std::to_string(nilpotent) + " nilpotent component(s) excluded");

  std::size_t merged = 0;
  bool periodic = false;
  for (const auto& c : candidates) {
    if (c.log_rho < best - kTieTol) continue;
    EquilibriumState st;
    st.component = c.component;
    st.pressure = c.log_rho;
    for (const auto& m : matrices) st.potential.push_back(restrict(m, c.component));
    if (c.component.size() == 1) {
      BernoulliSpec b;
      for (const auto& m : st.potential) b.probs.push_back(m(0, 0) / c.perron.value);
      st.spec = b;
      st.gibbs_constant = 1.0;
    } else {
      PerronGibbsSpec pg;
      pg.matrices = st.potential;
      pg.perron_value = c.perron.value;
      pg.left = c.perron.left;
      pg.right = c.perron.right;
      pg.period = cyclicity(restrict(sum, c.component));
      st.period = pg.period;
      periodic = periodic || pg.period > 1;
      const double uv = dot(pg.left, pg.right);
      const double umin = *std::min_element(pg.left.begin(), pg.left.end());
      const double vmin = *std::min_element(pg.right.begin(), pg.right.end());
      st.gibbs_constant = std::max(norm2(pg.left) * norm2(pg.right) / uv, uv / (umin * vmin));
      st.spec = pg;
    }
    bool duplicate = false;
    for (const auto& other : r.states) {
      const auto* b1 = std::get_if<BernoulliSpec>(&st.spec);
      const auto* b2 = std::get_if<BernoulliSpec>(&other.spec);
      duplicate = (b1 && b2) ? same_bernoulli(*b1, *b2) : !distinguishing_word(st.spec, other.spec).has_value();
      if (duplicate) break;
    }
    if (duplicate) {
      ++merged;
      continue;
    }
    std::size_t n = support_check_length(matrices.size());
    st.fully_supported = min_cylinder(st.spec, n) > 0.0;
    r.states.push_back(std::move(st));
  }
  if (merged) r.notes.push_back(std::to_string(merged) + " component state(s) coincide with an earlier one and were merged");
  if (periodic) r.notes.push_back("a component has period > 1: its state is invariant but ergodicity is not asserted");
  return r;
}

EquilibriumReport permutation_equilibria(const MatrixTuple& tuple, const PermutationForm& form, double s) {
  const int d = static_cast<int>(tuple.dim());
  if (s < 0.0 || s > d) throw InputError("s must lie in [0, d]");
  const int k = lift_degree(s, d);
  LiftedTuple lift = permutation_lift(form, s, k);
  EquilibriumReport r = nonneg_equilibria(lift.matrices);
  r.s = s;
  r.route = "generalized permutation";
  r.multiplicity_bound = multiplicity_from_lift(s, d);
  for (auto& st : r.states)
    for (std::size_t idx : st.component) st.labels.push_back(to_string(lift.labels[idx]));
  if (!form.standard_basis) r.notes.push_back("generalised permutation form found after a change of basis");
  return r;
}

EquilibriumReport diagonal_equilibria(const MatrixTuple& tuple, double s) {
  for (const auto& a : tuple.matrices())
    if (!is_diagonal(a)) throw InputError("diagonal_equilibria: matrices must be diagonal");
  const int d = static_cast<int>(tuple.dim());
  if (s < 0.0 || s > d) throw InputError("s must lie in [0, d]");
  LiftedTuple lift = permutation_lift(tuple, s, lift_degree(s, d));
  EquilibriumReport r = nonneg_equilibria(lift.matrices);
  r.s = s;
  r.route = "diagonal";
  r.multiplicity_bound = multiplicity_from_lift(s, d);
  for (auto& st : r.states)
    for (std::size_t idx : st.component) st.labels.push_back(to_string(lift.labels[idx]));
  return r;
}

MatrixTuple block_diagonal_reduce(const MatrixTuple& tuple, const BlockTriangularization& form) {
  MatrixTuple conj = conjugate_by(tuple, form);
  const std::size_t d = tuple.dim();
  std::vector<std::size_t> block_of(d);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < form.blocks.size(); ++b)
    for (std::size_t t = 0; t < form.blocks[b]; ++t) block_of[pos++] = b;
  if (pos != d) throw InputError("block_diagonal_reduce: block sizes do not add up to d");
  if (conj.is_exact()) {
    std::vector<MatrixQ> out = conj.exact();
    for (auto& m : out)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          if (block_of[i] != block_of[j]) m(i, j) = 0;
    return MatrixTuple::from_exact(std::move(out), tuple.labels());
  }
  std::vector<MatrixD> out = conj.matrices();
  for (auto& m : out)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (block_of[i] != block_of[j]) m(i, j) = 0.0;
  return MatrixTuple::from_float(std::move(out), tuple.labels());
}

CandidateExponents candidate_exponents(double b, const MatrixD& c, double s) {
  if (c.rows() != 2 || c.cols() != 2) throw InputError("candidate_exponents: C must be 2x2");
  auto alpha = singular_values(c).values;
  const double lb = std::log(std::fabs(b)), l1 = std::log(alpha[0]), l2 = std::log(alpha[1]);
  CandidateExponents e;
  e.e1 = lb + (s - 1.0) * l1;
  e.e2 = l1 + (s - 1.0) * lb;
  e.e3 = l1 + (s - 1.0) * l2;
  e.log_svf = log_svf(block_diag(MatrixD{{b}}, c), s);
  return e;
}

ThreeCandidateReport reducible3d_pressure(const std::vector<double>& b, const std::vector<MatrixD>& C, double s,
                                          std::size_t n_max, const ComputeOptions& opts) {
  if (!(s > 1.0 && s < 2.0)) throw InputError("reducible3d_pressure: s must lie strictly between 1 and 2");
  if (b.size() != C.size() || b.empty()) throw InputError("reducible3d_pressure: size mismatch");
  std::vector<MatrixD> a1, a2, a3;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (C[i].rows() != 2 || C[i].cols() != 2) throw InputError("reducible3d_pressure: C must be 2x2");
    if (b[i] == 0.0) throw DomainError("reducible3d_pressure: b must be nonzero");
    const double ab = std::fabs(b[i]);
    const double det = std::fabs(determinant(C[i]));
    a1.push_back(C[i] * std::pow(ab, 1.0 / (s - 1.0)));
    a2.push_back(C[i] * std::pow(ab, s - 1.0));
    a3.push_back(C[i] * std::pow(det, (s - 1.0) / (2.0 - s)));
  }
  ThreeCandidateReport out;
  out.s = s;
  auto run = [&](const char* name, std::vector<MatrixD> m, Potential pot) {
    TupleSpectra spectra(MatrixTuple::from_float(m), opts);
    out.candidates.push_back({name, std::move(m), pot, estimate_pressure(spectra, pot, n_max)});
  };
  run("|b|^{1/(s-1)} C, norm^{s-1}", std::move(a1), Potential::norm(s - 1.0));
  run("|b|^{s-1} C, norm", std::move(a2), Potential::norm(1.0));
  run("|det C|^{(s-1)/(2-s)} C, norm^{2-s}", std::move(a3), Potential::norm(2.0 - s));
  out.combined.lower = -std::numeric_limits<double>::infinity();
  out.combined.upper = -std::numeric_limits<double>::infinity();
  for (const auto& c : out.candidates) {
    out.combined.lower = std::max(out.combined.lower, c.estimate.lower);
    out.combined.upper = std::max(out.combined.upper, c.estimate.upper);
  }
  out.combined.n_used = n_max;
  out.combined.methods = {"max of three candidate norm pressures"};
  return out;
}

void split_one_two(const MatrixTuple& reduced, const std::vector<std::size_t>& blocks, std::vector<double>& b,
                   std::vector<MatrixD>& C) {
  if (reduced.dim() != 3) throw InputError("split_one_two: tuple must be 3x3");
  b.clear();
  C.clear();
  const bool one_first = blocks == std::vector<std::size_t>{1, 2};
  if (!one_first && blocks != std::vector<std::size_t>{2, 1}) throw InputError("split_one_two: blocks must be (1,2) or (2,1)");
  for (const auto& a : reduced.matrices()) {
    b.push_back(one_first ? a(0, 0) : a(2, 2));
    C.push_back(one_first ? a.block(1, 1, 2, 2) : a.block(0, 0, 2, 2));
  }
}

bool is_similitude_tuple(const MatrixTuple& tuple, double tol) {
  const std::size_t d = tuple.dim();
  if (tuple.is_exact()) {
    for (const auto& a : tuple.exact()) {
      MatrixQ g = a.transpose() * a;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          if (g(i, j) != (i == j ? g(0, 0) : Rational(0))) return false;
    }
    return true;
  }
  for (const auto& a : tuple.matrices()) {
    MatrixD g = a.transpose() * a;
    double c = 0.0;
    for (std::size_t i = 0; i < d; ++i) c += g(i, i);
    c /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (std::fabs(g(i, j) - (i == j ? c : 0.0)) > tol * c) return false;
  }
  return true;
}

namespace {

struct ExplicitForm {
  MatrixTuple tuple;
  PermutationForm form;
  bool reduced = false;
};

// A generalised permutation form of the tuple or of its block diagonal
// reduction (which has the same equilibrium states and pressure).
std::optional<ExplicitForm> explicit_form(const MatrixTuple& tuple, const StructureReport* structure) {
  if (auto f = detect_generalized_permutation(tuple)) return ExplicitForm{tuple, *f, false};
  if (structure && structure->verdict != Verdict::Reducible) return std::nullopt;
  auto tri = block_triangularize(tuple);
  if (!tri || !tri->certified) return std::nullopt;
  MatrixTuple reduced = block_diagonal_reduce(tuple, *tri);
  if (auto f = detect_generalized_permutation(reduced)) return ExplicitForm{reduced, *f, true};
  return std::nullopt;
}

EquilibriumReport from_explicit(const ExplicitForm& ef, double s) {
  EquilibriumReport r = permutation_equilibria(ef.tuple, ef.form, s);
  bool diagonal = ef.form.standard_basis;
  for (const auto& p : ef.form.permutation)
    for (std::size_t j = 0; j < p.size(); ++j) diagonal = diagonal && p[j] == static_cast<int>(j);
  if (diagonal) r.route = "diagonal";
  if (ef.reduced) {
    r.route = "block reduction + " + r.route;
    r.notes.push_back("blocks above the diagonal were dropped; equilibrium states and pressure are unchanged");
  }
  return r;
}

PressureEstimate generic_estimate(const MatrixTuple& tuple, double s, const ClassifyOptions& opts) {
  TupleSpectra spectra(tuple, opts.compute);
  return estimate_pressure(spectra, Potential::svf(s), opts.n_max);
}

void bounds_only(EquilibriumReport& r, const MatrixTuple& tuple, double s, const ClassifyOptions& opts) {
  r.pressure_estimate = generic_estimate(tuple, s, opts);
  r.pressure = 0.5 * (r.pressure_estimate.lower + r.pressure_estimate.upper);
  r.exact = false;
  r.complete = false;
}

}  // namespace

EquilibriumReport classify3d(const MatrixTuple& tuple, double s, const ClassifyOptions& opts) {
  if (tuple.dim() != 3) throw InputError("classify3d: tuple must be 3x3");
  check_s(s, 3);
  if (is_similitude_tuple(tuple)) return similitude_report(tuple, s);
  const bool middle = s > 1.0 && s < 2.0;
  StructureReport structure = irreducibility_test(tuple);

  if (structure.verdict != Verdict::Unknown) {
    if (auto ef = explicit_form(tuple, &structure)) {
      auto r = from_explicit(*ef, s);
      r.structure = structure;
      return r;
    }
  }

  EquilibriumReport r;
  r.s = s;
  r.structure = structure;
  if (structure.verdict == Verdict::Unknown) {
    bounds_only(r, tuple, s, opts);
    r.route = "bounds only";
    r.multiplicity_bound = middle ? 6 : 3;
    r.notes.push_back("irreducibility could not be decided; only pressure bounds and the worst-case multiplicity are reported");
    return r;
  }

  if (!middle) {
    bounds_only(r, tuple, s, opts);
    r.route = "norm pressure";
    if (structure.verdict == Verdict::Irreducible && structure.certified) {
      r.multiplicity_bound = 1;
      r.notes.push_back("phi^s is a power of the norm of A or of its second exterior power (times |det|); "
                        "irreducibility gives a unique, fully supported equilibrium state (not constructed here)");
    } else {
      r.multiplicity_bound = 3;
      r.notes.push_back("phi^s reduces to a norm potential: at most 3 ergodic equilibrium states, all fully supported");
    }
    return r;
  }

  if (structure.verdict == Verdict::Reducible) {
    auto tri = block_triangularize(tuple);
    if (tri && tri->certified && tri->blocks.size() == 2) {
      MatrixTuple reduced = block_diagonal_reduce(tuple, *tri);
      std::vector<double> b;
      std::vector<MatrixD> C;
      split_one_two(reduced, tri->blocks, b, C);
      auto three = reducible3d_pressure(b, C, s, opts.n_max, opts.compute);
      r.route = "reducible 1+2 (three candidates)";
      r.candidates = three.candidates;
      r.pressure_estimate = three.combined;
      r.pressure = 0.5 * (three.combined.lower + three.combined.upper);
      r.multiplicity_bound = 3;
      r.notes.push_back("each ergodic equilibrium state is the unique norm equilibrium state of a candidate attaining "
                        "the maximal pressure; the candidates are irreducible 2x2 tuples, so states are not constructed");
      return r;
    }
    bounds_only(r, tuple, s, opts);
    r.route = "bounds only";
    r.multiplicity_bound = 6;
    r.notes.push_back("block triangular form could not be certified");
    return r;
  }

  // Irreducible, not a generalised permutation tuple in any basis found.
  bounds_only(r, tuple, s, opts);
  r.route = "quasimultiplicative";
  r.multiplicity_bound = 6;
  r.quasimult = quasimult_search(tuple, s, opts.quasimult);
  r.notes.push_back("no invariant finite union of lines or planes was found; if the tuple is strongly irreducible "
                    "there is a unique equilibrium state, fully supported, whose existence is known but which is not "
                    "explicitly constructible here");
  r.notes.push_back("strong irreducibility cannot be certified numerically, so the multiplicity bound stays at 6");
  return r;
}

EquilibriumReport equilibria(const MatrixTuple& tuple, double s, const ClassifyOptions& opts) {
  const int d = static_cast<int>(tuple.dim());
  if (d == 3) return classify3d(tuple, s, opts);
  check_s(s, d);
  if (is_similitude_tuple(tuple)) return similitude_report(tuple, s);
  if (auto ef = explicit_form(tuple, nullptr)) return from_explicit(*ef, s);
  EquilibriumReport r;
  r.s = s;
  bounds_only(r, tuple, s, opts);
  r.route = "bounds only";
  if (s < 1.0 || s > d - 1) {
    r.multiplicity_bound = d;
  } else if (is_integer(s)) {
    r.multiplicity_bound = static_cast<int>(binomial(d, static_cast<int>(s)));
  } else {
    r.multiplicity_bound = 0;
    r.notes.push_back("no multiplicity bound is available for this d and s");
  }
  r.notes.push_back("no explicit route applies; only pressure bounds are reported");
  return r;
}

std::vector<GibbsRow> gibbs_check(const EquilibriumReport& report, const MatrixTuple& tuple, double s, std::size_t n,
                                  std::uint64_t budget) {
  std::vector<GibbsRow> rows;
  if (!report.exact) throw InputError("gibbs_check: the report has no exact pressure");
  std::vector<Word> words = enumerate_words(tuple.size(), n, budget);
  std::vector<double> log_svf_w;
  log_svf_w.reserve(words.size());
  for (const auto& w : words) log_svf_w.push_back(log_svf(word_product(tuple, w), s));
  const double nn = static_cast<double>(n);
  for (const auto& st : report.states) {
    GibbsRow row;
    row.gibbs_constant = st.gibbs_constant;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, slo = lo, shi = -lo;
    for (std::size_t t = 0; t < words.size(); ++t) {
      const double mu = cylinder_measure(st.spec, words[t]);
      const double norm = spectral_norm(word_product(st.potential, words[t]));
      const double ratio = std::exp(std::log(mu) + nn * st.pressure - std::log(norm));
      const double svf_ratio = std::exp(std::log(mu) + nn * report.pressure - log_svf_w[t]);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      slo = std::min(slo, svf_ratio);
      shi = std::max(shi, svf_ratio);
    }
    row.min_ratio = lo;
    row.max_ratio = hi;
    row.min_svf_ratio = slo;
    row.max_svf_ratio = shi;
    const double c = st.gibbs_constant * (1.0 + 1e-9);
    row.within = lo >= 1.0 / c && hi <= c;
    rows.push_back(row);
  }
  return rows;
}

std::optional<ExactRoute> find_exact_route(const MatrixTuple& tuple) {
  const int d = static_cast<int>(tuple.dim());
  std::vector<double> log_det;
  for (const auto& a : tuple.matrices()) log_det.push_back(std::log(std::fabs(determinant(a))));
  auto beyond = [log_det, d](double s) {
    std::vector<double> v;
    for (double x : log_det) v.push_back(x * s / d);
    return log_sum_exp(v);
  };
  if (is_similitude_tuple(tuple)) {
    std::vector<double> log_c;
    for (double c : similitude_factors(tuple)) log_c.push_back(std::log(c));
    ExactPressure p = [log_c](double s) -> std::optional<double> {
      if (s < 0.0) return std::nullopt;
      std::vector<double> v;
      for (double x : log_c) v.push_back(x * s);
      return log_sum_exp(v);
    };
    return ExactRoute{"similitude", p};
  }
  auto ef = explicit_form(tuple, nullptr);
  if (!ef) return std::nullopt;
  auto form = std::make_shared<PermutationForm>(ef->form);
  ExactPressure p = [form, d, beyond](double s) -> std::optional<double> {
    if (s < 0.0) return std::nullopt;
    if (s >= d) return beyond(s);
    const int k = lift_degree(s, d);
    return pressure_exact_nonneg(permutation_lift(*form, s, k).matrices);
  };
  bool diagonal = ef->form.standard_basis;
  for (const auto& perm : ef->form.permutation)
    for (std::size_t j = 0; j < perm.size(); ++j) diagonal = diagonal && perm[j] == static_cast<int>(j);
  std::string name = diagonal ? "diagonal" : "generalized permutation";
  if (ef->reduced) name = "block reduction + " + name;
  return ExactRoute{name, p};
}

}  // namespace svfkit
