#include "svfkit/pressure.hpp"

#include "svfkit/linalg.hpp"
#include "svfkit/multilinear.hpp"
#include "svfkit/nonneg.hpp"

#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace svfkit {

std::string Potential::name() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, kind == Kind::SVF ? "svf(s=%.17g)" : "norm^s(s=%.17g)", s);
  return buf;
}

double log_potential(const Potential& pot, std::span<const double> log_alpha) {
  if (pot.kind == Potential::Kind::NormPow) return pot.s == 0.0 ? 0.0 : pot.s * log_alpha.front();
  return log_svf_from_log_spectrum(log_alpha, pot.s);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) terms[i] = std::exp(values[i] - top);
  while (terms.size() > 1) {
    std::vector<double> next((terms.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i)
      next[i] = terms[2 * i] + (2 * i + 1 < terms.size() ? terms[2 * i + 1] : 0.0);
    terms.swap(next);
  }
  return top + std::log(terms.front());
}

namespace {

std::size_t prefix_length(std::size_t N, std::size_t n) {
  std::size_t p = 0;
  std::uint64_t blocks = 1;
  while (p < n && blocks < 64) {
    blocks *= N;
    ++p;
  }
  return p;
}

template <typename F>
void parallel_blocks(std::size_t count, unsigned threads, F&& work) {
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    for (std::size_t b = 0; b < count; ++b) work(b);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t b = t; b < count; b += threads) work(b);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

TupleSpectra::TupleSpectra(MatrixTuple tuple, ComputeOptions opts) : tuple_(std::move(tuple)), opts_(opts) {
  for (const auto& m : tuple_.matrices()) log_det_.push_back(std::log(std::fabs(determinant(m))));
}

std::size_t TupleSpectra::spectral_length(std::size_t n_max) const {
  std::uint64_t total = 0, level = 1;
  std::size_t length = 0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    level *= count();
    total += level;
    if (total > opts_.spectral_budget) break;
    length = n;
  }
  return std::max<std::size_t>(length, 1);
}

TupleSpectra::Level TupleSpectra::compute_level(std::size_t n, bool eigen) const {
  const std::size_t N = count(), d = dim();
  word_count(N, n, opts_.budget);
  const std::size_t p = prefix_length(N, n);
  const std::size_t r = n - p;
  std::size_t blocks = 1;
  for (std::size_t i = 0; i < p; ++i) blocks *= N;
  Level level;
  level.n = n;
  level.blocks.resize(blocks);
  const auto& mats = tuple_.matrices();

  parallel_blocks(blocks, opts_.threads, [&](std::size_t b) {
    Word prefix = word_at(N, p, b);
    double prefix_log_det = 0.0;
    for (int symbol : prefix) prefix_log_det += log_det_[symbol];
    std::vector<MatrixD> stack(r + 1);
    std::vector<double> log_dets(r + 1);
    stack[0] = word_product(mats, prefix);
    log_dets[0] = prefix_log_det;
    Word suffix(r, 0);
    auto& out = level.blocks[b];
    std::uint64_t words = 1;
    for (std::size_t i = 0; i < r; ++i) words *= N;
    out.reserve(words * d);
    // Fill the stack for the first suffix 00...0.
    for (std::size_t depth = 0; depth < r; ++depth) {
      stack[depth + 1] = stack[depth] * mats[0];
      log_dets[depth + 1] = log_dets[depth] + log_det_[0];
    }
    for (;;) {
      std::vector<double> logs = eigen ? log_eigen_moduli(stack[r]) : log_singular_values(stack[r]);
      double partial = 0.0;
      for (std::size_t j = 0; j + 1 < d; ++j) partial += logs[j];
      // The smallest value from the determinant is accurate even when it is
      // tiny relative to the largest.
      logs[d - 1] = log_dets[r] - partial;
      out.insert(out.end(), logs.begin(), logs.end());
      std::size_t pos = r;
      while (pos > 0 && static_cast<std::size_t>(suffix[pos - 1]) + 1 == N) suffix[--pos] = 0;
      if (pos == 0) break;
      ++suffix[pos - 1];
      for (std::size_t depth = pos - 1; depth < r; ++depth) {
        stack[depth + 1] = stack[depth] * mats[suffix[depth]];
        log_dets[depth + 1] = log_dets[depth] + log_det_[suffix[depth]];
      }
    }
  });
  return level;
}

const TupleSpectra::Level& TupleSpectra::singular_level(std::size_t n) {
  if (n == 0) throw InputError("word length must be at least 1");
  if (singular_.size() <= n) singular_.resize(n + 1);
  if (!singular_[n]) singular_[n] = std::make_unique<Level>(compute_level(n, false));
  return *singular_[n];
}

const TupleSpectra::Level& TupleSpectra::eigen_level(std::size_t n) {
  if (n == 0) throw InputError("word length must be at least 1");
  if (eigen_.size() <= n) eigen_.resize(n + 1);
  if (!eigen_[n]) eigen_[n] = std::make_unique<Level>(compute_level(n, true));
  return *eigen_[n];
}

double partition_sum(TupleSpectra& spectra, const Potential& pot, std::size_t n) {
  if (pot.s < 0.0 || !std::isfinite(pot.s)) throw DomainError("potential exponent must be a finite s >= 0");
  const auto& level = spectra.singular_level(n);
  const std::size_t d = spectra.dim();
  std::vector<double> values;
  for (const auto& block : level.blocks)
    for (std::size_t i = 0; i < block.size(); i += d)
      values.push_back(log_potential(pot, std::span<const double>(block.data() + i, d)));
  return log_sum_exp(values);
}

double partition_sum(const MatrixTuple& tuple, const Potential& pot, std::size_t n, const ComputeOptions& opts) {
  TupleSpectra spectra(tuple, opts);
  return partition_sum(spectra, pot, n);
}

UpperBound pressure_upper(TupleSpectra& spectra, const Potential& pot, std::size_t n_max) {
  if (n_max == 0) throw InputError("n_max must be at least 1");
  UpperBound out;
  out.value = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= n_max; ++n) {
    double term = partition_sum(spectra, pot, n) / static_cast<double>(n);
    out.sequence.push_back(term);
    if (term < out.value) {
      out.value = term;
      out.n_at_min = n;
    }
  }
  return out;
}

double pressure_upper(const MatrixTuple& tuple, const Potential& pot, std::size_t n_max, const ComputeOptions& opts) {
  TupleSpectra spectra(tuple, opts);
  return pressure_upper(spectra, pot, n_max).value;
}

LowerBound pressure_lower(TupleSpectra& spectra, const Potential& pot, std::size_t n_max) {
  if (n_max == 0) throw InputError("n_max must be at least 1");
  const std::size_t d = spectra.dim();
  const double dd = static_cast<double>(d);
  LowerBound out;
  std::vector<double> det_terms;
  for (const auto& m : spectra.tuple().matrices())
    det_terms.push_back(pot.s / dd * std::log(std::fabs(determinant(m))));
  out.determinant_bound = log_sum_exp(det_terms);

  out.spectral_bound = -std::numeric_limits<double>::infinity();
  out.spectral_length = spectra.spectral_length(n_max);
  const std::size_t N = spectra.count();
  for (std::size_t n = 1; n <= out.spectral_length; ++n) {
    const auto& level = spectra.eigen_level(n);
    std::uint64_t index = 0;
    for (std::size_t b = 0; b < level.blocks.size(); ++b) {
      const auto& block = level.blocks[b];
      for (std::size_t i = 0; i < block.size(); i += d, ++index) {
        double value = log_potential(pot, std::span<const double>(block.data() + i, d)) / static_cast<double>(n);
        if (value > out.spectral_bound) {
          out.spectral_bound = value;
          out.spectral_word = word_at(N, n, index);
        }
      }
    }
  }
  if (out.spectral_bound > out.determinant_bound) {
    out.value = out.spectral_bound;
    out.active = "spectral";
  } else {
    out.value = out.determinant_bound;
    out.active = "determinant";
  }
  return out;
}

double pressure_lower(const MatrixTuple& tuple, const Potential& pot, std::size_t n_max, const ComputeOptions& opts) {
  TupleSpectra spectra(tuple, opts);
  return pressure_lower(spectra, pot, n_max).value;
}

PressureEstimate estimate_pressure(TupleSpectra& spectra, const Potential& pot, std::size_t n_max) {
  auto up = pressure_upper(spectra, pot, n_max);
  auto lo = pressure_lower(spectra, pot, n_max);
  PressureEstimate est;
  est.upper = up.value;
  est.lower = lo.value;
  est.n_used = n_max;
  if (est.lower > est.upper) {
    // Both bounds are tight (e.g. similitudes) and differ only by rounding.
    if (est.lower - est.upper > 1e-12 * std::max(1.0, std::fabs(est.upper)))
      throw NumericError("pressure lower bound exceeds upper bound by more than rounding");
    est.lower = est.upper;
  }
  est.methods.push_back("upper: min_n (1/n) log Z_n, attained at n=" + std::to_string(up.n_at_min));
  if (lo.active == "spectral")
    est.methods.push_back("lower: spectral minorant on word " + word_to_string(lo.spectral_word));
  else
    est.methods.push_back("lower: determinant minorant");
  return est;
}

double pressure_exact_nonneg(const std::vector<MatrixD>& matrices) {
  if (matrices.empty()) throw InputError("pressure_exact_nonneg: no matrices");
  MatrixD sum(matrices.front().rows(), matrices.front().cols());
  for (const auto& m : matrices) {
    require_nonnegative(m, "pressure_exact_nonneg");
    sum += m;
  }
  double rho = spectral_radius_nonneg(sum);
  if (!(rho > 0.0)) throw DomainError("pressure_exact_nonneg: sum matrix has spectral radius 0");
  return std::log(rho);
}

std::vector<CurvePoint> pressure_curve(TupleSpectra& spectra, const std::vector<double>& s_grid, std::size_t n_max,
                                       const ExactPressure& exact) {
  const double d = static_cast<double>(spectra.dim());
  std::vector<CurvePoint> out;
  for (double s : s_grid) {
    if (s < 0.0 || s > d) throw InputError("grid point outside [0, d]");
    CurvePoint point;
    point.s = s;
    point.estimate = estimate_pressure(spectra, Potential::svf(s), n_max);
    if (exact) point.exact = exact(s);
    out.push_back(std::move(point));
  }
  return out;
}

namespace {
std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "s,lower,upper,exact,n_used\n";
  for (const auto& p : curve)
    out << g17(p.s) << ',' << g17(p.estimate.lower) << ',' << g17(p.estimate.upper) << ','
        << (p.exact ? g17(*p.exact) : std::string()) << ',' << p.estimate.n_used << '\n';
}

std::vector<double> parse_grid(const std::string& text) {
  double a, b, step;
  char c1, c2;
  std::istringstream in(text);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof())
    throw InputError("grid must look like a:b:step, got '" + text + "'");
  if (!(step > 0.0) || b < a) throw InputError("grid needs step > 0 and a <= b");
  auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  if (count > 100000) throw InputError("grid has too many points");
  std::vector<double> grid;
  for (std::size_t i = 0; i < count; ++i) grid.push_back(a + static_cast<double>(i) * step);
  return grid;
}

std::pair<double, double> bisect_root(const std::function<double(double)>& f, double cap, double tol,
                                      int max_iterations, int* iterations) {
  int it = 0;
  if (f(cap) >= 0.0) {
    if (iterations) *iterations = 0;
    return {cap, cap};
  }
  double a = 0.0, b = cap;
  if (f(a) < 0.0) {
    if (iterations) *iterations = 0;
    return {0.0, 0.0};
  }
  while (b - a > tol && it < max_iterations) {
    double mid = 0.5 * (a + b);
    if (f(mid) >= 0.0)
      a = mid;
    else
      b = mid;
    ++it;
  }
  if (iterations) *iterations = it;
  return {a, b};
}

AffinityDimension affinity_dimension(TupleSpectra& spectra, const AffinityOptions& opts) {
  const double d = static_cast<double>(spectra.dim());
  AffinityDimension out;
  out.contractive = spectra.tuple().is_contractive();
  if (!out.contractive) {
    out.certified = false;
    out.notes.push_back("tuple is not contractive: s -> P(s) need not be decreasing, root not certified");
  }
  int it_lo = 0, it_hi = 0;
  auto lower = [&](double s) { return pressure_lower(spectra, Potential::svf(s), opts.n_max).value; };
  auto upper = [&](double s) { return pressure_upper(spectra, Potential::svf(s), opts.n_max).value; };
  // The lower-bound curve sits below P, so its root is a lower bound for the
  // root of P; symmetrically for the upper-bound curve.
  out.bound_lo = bisect_root(lower, d, opts.tol, opts.max_iterations, &it_lo).first;
  out.bound_hi = bisect_root(upper, d, opts.tol, opts.max_iterations, &it_hi).second;
  out.iterations = std::max(it_lo, it_hi);
  out.lo = out.bound_lo;
  out.hi = out.bound_hi;
  out.route = "bounds";

  if (opts.exact) {
    bool available = true;
    auto exact = [&](double s) {
      auto v = opts.exact(s);
      if (!v) {
        available = false;
        return 0.0;
      }
      return *v;
    };
    int it = 0;
    auto bracket = bisect_root(exact, d, opts.tol, opts.max_iterations, &it);
    if (available) {
      out.lo = bracket.first;
      out.hi = bracket.second;
      out.exact = true;
      out.iterations = it;
      out.route = opts.exact_route.empty() ? "exact" : opts.exact_route;
      if (out.lo < out.bound_lo - 1e-6 || out.hi > out.bound_hi + 1e-6)
        out.notes.push_back("exact root lies outside the generic bracket; check the exact route");
    } else {
      out.notes.push_back("exact route unavailable on part of [0, d]; using bounds");
    }
  }
  out.capped = out.hi >= d;
  if (out.capped) out.notes.push_back("pressure is nonnegative at s = d; dimension capped at d");
  return out;
}

}  // namespace svfkit
