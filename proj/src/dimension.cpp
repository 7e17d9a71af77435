#include "svfkit/dimension.hpp"

#include "svfkit/equilibrium.hpp"
#include "svfkit/multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

namespace svfkit {

namespace {

std::string g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool all_diagonal(const MatrixTuple& tuple) {
  for (const auto& a : tuple.matrices())
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j)
        if (i != j && a(i, j) != 0.0) return false;
  return true;
}

void finish_from_partials(LyapunovSpectrum& out) {
  const std::size_t d = out.partial_sums.size() - 1;
  out.exponents.assign(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) out.exponents[k] = out.partial_sums[k + 1] - out.partial_sums[k];
}

LyapunovSpectrum closed_form(const MatrixTuple& tuple, const BernoulliSpec& b) {
  const std::size_t d = tuple.dim();
  LyapunovSpectrum out;
  out.method = LyapunovMethod::ClosedForm;
  std::vector<double> axis(d, 0.0);
  if (all_diagonal(tuple)) {
    for (std::size_t i = 0; i < tuple.size(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (b.probs[i] > 0.0) axis[j] += b.probs[i] * std::log(std::fabs(tuple[i](j, j)));
  } else {
    // Similitudes: every exponent is the mean log scaling factor.
    double mean = 0.0;
    for (std::size_t i = 0; i < tuple.size(); ++i)
      if (b.probs[i] > 0.0) mean += b.probs[i] * std::log(std::fabs(determinant(tuple[i]))) / static_cast<double>(d);
    axis.assign(d, mean);
  }
  std::sort(axis.begin(), axis.end(), std::greater<>());
  out.exponents = axis;
  out.half_widths.assign(d, 0.0);
  out.std_errors.assign(d, 0.0);
  out.partial_sums.assign(d + 1, 0.0);
  for (std::size_t k = 0; k < d; ++k) out.partial_sums[k + 1] = out.partial_sums[k] + axis[k];
  out.partial_half_widths.assign(d + 1, 0.0);
  return out;
}

LyapunovSpectrum deterministic(const MatrixTuple& tuple, const MeasureSpec& mu, const LyapunovOptions& opts) {
  const std::size_t d = tuple.dim();
  if (opts.n == 0) throw InputError("lyapunov: n must be at least 1");
  LyapunovSpectrum out;
  out.method = LyapunovMethod::Deterministic;
  out.n = opts.n;
  out.partial_sums_upper = true;
  std::vector<double> sums(d + 1, 0.0);
  // Small singular values of long products are inaccurate; the top sum
  // comes from the determinants instead.
  std::vector<double> log_det;
  for (const auto& a : tuple.matrices()) log_det.push_back(std::log(std::fabs(determinant(a))));
  for_each_word(
      tuple.size(), opts.n,
      [&](const Word& w) {
        const double p = cylinder_measure(mu, w);
        if (p <= 0.0) return;
        auto la = log_singular_values(word_product(tuple, w));
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < d; ++k) {
          acc += la[k];
          sums[k + 1] += p * acc;
        }
        double det = 0.0;
        for (int symbol : w) det += log_det[symbol];
        sums[d] += p * det;
      },
      opts.budget);
  out.partial_sums.resize(d + 1);
  for (std::size_t k = 0; k <= d; ++k) out.partial_sums[k] = sums[k] / static_cast<double>(opts.n);
  out.partial_half_widths.assign(d + 1, 0.0);
  out.half_widths.assign(d, 0.0);
  out.std_errors.assign(d, 0.0);
  finish_from_partials(out);
  return out;
}

LyapunovSpectrum monte_carlo(const MatrixTuple& tuple, const MeasureSpec& mu, const LyapunovOptions& opts) {
  if (!opts.seed) throw InputError("lyapunov: the Monte Carlo method needs an explicit seed");
  if (opts.samples < 2 || opts.length == 0) throw InputError("lyapunov: need at least 2 samples of positive length");
  const std::size_t d = tuple.dim();
  const std::uint64_t seed = *opts.seed;
  // Exterior powers k = 1..d-1; the top one is the determinant.
  std::vector<std::vector<MatrixD>> wedge(d);
  std::vector<double> log_det;
  for (const auto& a : tuple.matrices()) log_det.push_back(std::log(std::fabs(determinant(a))));
  for (std::size_t k = 1; k < d; ++k)
    for (const auto& a : tuple.matrices()) wedge[k].push_back(exterior_power(a, static_cast<int>(k)));

  // per[t][k] = (1/L) log ||A_w^{wedge k}|| for trajectory t.
  std::vector<std::vector<double>> per(opts.samples, std::vector<double>(d + 1, 0.0));
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t t = begin; t < opts.samples; t += stride) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
      std::mt19937_64 rng(seq);
      Word w = sample_word(mu, opts.length, rng);
      const double L = static_cast<double>(opts.length);
      for (std::size_t k = 1; k < d; ++k) {
        MatrixD m = MatrixD::identity(wedge[k].front().rows());
        double log_scale = 0.0;
        for (int symbol : w) {
          m = m * wedge[k][symbol];
          double s = max_abs(m);
          m *= 1.0 / s;
          log_scale += std::log(s);
        }
        per[t][k] = (log_scale + std::log(spectral_norm(m))) / L;
      }
      double det = 0.0;
      for (int symbol : w) det += log_det[symbol];
      per[t][d] = det / L;
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(opts.samples)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(work, i, threads);
    for (auto& th : pool) th.join();
  }

  LyapunovSpectrum out;
  out.method = LyapunovMethod::MonteCarlo;
  out.samples = opts.samples;
  out.length = opts.length;
  out.seed = seed;
  const double S = static_cast<double>(opts.samples);
  auto mean_se = [&](auto value) {
    double m = 0.0;
    for (std::size_t t = 0; t < opts.samples; ++t) m += value(t);
    m /= S;
    double v = 0.0;
    for (std::size_t t = 0; t < opts.samples; ++t) v += (value(t) - m) * (value(t) - m);
    return std::pair<double, double>{m, std::sqrt(v / (S - 1.0) / S)};
  };
  out.partial_sums.assign(d + 1, 0.0);
  out.partial_half_widths.assign(d + 1, 0.0);
  for (std::size_t k = 1; k <= d; ++k) {
    auto [m, se] = mean_se([&](std::size_t t) { return per[t][k]; });
    out.partial_sums[k] = m;
    out.partial_half_widths[k] = 3.0 * se;
  }
  finish_from_partials(out);
  for (std::size_t k = 0; k < d; ++k) {
    auto [m, se] = mean_se([&](std::size_t t) { return per[t][k + 1] - per[t][k]; });
    (void)m;
    out.std_errors.push_back(se);
    out.half_widths.push_back(3.0 * se);
  }
  return out;
}

}  // namespace

std::string to_string(LyapunovMethod m) {
  switch (m) {
    case LyapunovMethod::Auto: return "auto";
    case LyapunovMethod::ClosedForm: return "closed-form";
    case LyapunovMethod::Deterministic: return "deterministic-n";
    case LyapunovMethod::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

LyapunovMethod parse_lyapunov_method(const std::string& text) {
  if (text == "auto") return LyapunovMethod::Auto;
  if (text == "closed-form" || text == "closed") return LyapunovMethod::ClosedForm;
  if (text == "deterministic-n" || text == "deterministic") return LyapunovMethod::Deterministic;
  if (text == "monte-carlo" || text == "mc") return LyapunovMethod::MonteCarlo;
  throw InputError("unknown Lyapunov method '" + text + "'");
}

LyapunovSpectrum lyapunov_exponents(const MatrixTuple& tuple, const MeasureSpec& mu, const LyapunovOptions& opts) {
  validate(mu);
  if (alphabet_size(mu) != tuple.size()) throw InputError("lyapunov: measure alphabet does not match the tuple");
  const auto* b = std::get_if<BernoulliSpec>(&mu);
  const bool closed_ok = b && (all_diagonal(tuple) || is_similitude_tuple(tuple));
  switch (opts.method) {
    case LyapunovMethod::ClosedForm:
      if (!closed_ok) throw InputError("lyapunov: closed form needs a Bernoulli measure on diagonal or similitude matrices");
      return closed_form(tuple, *b);
    case LyapunovMethod::Deterministic: return deterministic(tuple, mu, opts);
    case LyapunovMethod::MonteCarlo: return monte_carlo(tuple, mu, opts);
    case LyapunovMethod::Auto: break;
  }
  if (closed_ok) return closed_form(tuple, *b);
  bool fits = true;
  try {
    word_count(tuple.size(), opts.n, opts.budget);
  } catch (const BudgetError&) {
    fits = false;
  }
  if (fits) return deterministic(tuple, mu, opts);
  return monte_carlo(tuple, mu, opts);
}

double svf_exponent(const LyapunovSpectrum& spectrum, double s) {
  const std::size_t d = spectrum.partial_sums.size() - 1;
  if (s < 0.0) throw DomainError("s must be nonnegative");
  if (s >= static_cast<double>(d)) return s / static_cast<double>(d) * spectrum.partial_sums[d];
  const auto k = static_cast<std::size_t>(std::floor(s));
  const double t = s - static_cast<double>(k);
  return (1.0 - t) * spectrum.partial_sums[k] + t * spectrum.partial_sums[k + 1];
}

LyapunovDimension lyapunov_dimension(const MatrixTuple& tuple, const MeasureSpec& mu, const LyapunovOptions& opts,
                                     double tol) {
  LyapunovDimension out;
  out.spectrum = lyapunov_exponents(tuple, mu, opts);
  const double d = static_cast<double>(tuple.dim());

  // Entropy: closed form, or the finite-n conditional entropy (an upper bound).
  const std::size_t n_ent = std::max<std::size_t>(2, std::min<std::size_t>(opts.n, 12));
  SamplingOptions sopts;
  sopts.budget = opts.budget;
  sopts.seed = opts.seed.value_or(0);
  auto est = entropy_rate(mu, n_ent, sopts);
  double h_lo = est.value, h_hi = est.value;
  out.entropy_exact = est.closed_form;
  if (!est.closed_form) {
    auto prev = block_entropy(mu, n_ent - 1, sopts);
    const double conditional = static_cast<double>(n_ent) * est.value - static_cast<double>(n_ent - 1) * prev.value;
    h_hi = std::min(est.value, conditional);
    h_lo = h_hi;
    out.certified = false;
    out.notes.push_back("entropy is a finite-n upper bound; the lower end of the interval is not certified");
  }
  out.entropy = h_hi;

  const auto& sp = out.spectrum;
  auto shifted = [&](double sign) {
    LyapunovSpectrum t = sp;
    for (std::size_t k = 0; k < t.partial_sums.size(); ++k) t.partial_sums[k] += sign * sp.partial_half_widths[k];
    return t;
  };
  LyapunovSpectrum low = shifted(-1.0), high = shifted(1.0);
  auto f_lo = [&](double s) { return h_lo + svf_exponent(low, s); };
  auto f_hi = [&](double s) { return h_hi + svf_exponent(high, s); };
  out.lo = bisect_root(f_lo, d, tol, 400).first;
  out.hi = bisect_root(f_hi, d, tol, 400).second;
  if (sp.partial_sums_upper) {
    out.certified = false;
    out.notes.push_back("deterministic-n exponents bound the limit partial sums from above only");
  }
  if (sp.exponents.front() >= 0.0) {
    out.certified = false;
    out.notes.push_back("the top exponent is not negative, so the root need not be unique");
  }
  out.capped = out.hi >= d;
  if (out.capped) out.notes.push_back("no zero in [0, d]: dimension capped at d");
  return out;
}

std::string to_string(DropVerdict v) { return v == DropVerdict::StrictDrop ? "StrictDrop" : "Inconclusive"; }

AffinityDimension affinity_dimension_auto(const MatrixTuple& tuple, AffinityOptions opts, bool use_exact,
                                          const ComputeOptions& compute) {
  if (use_exact && !opts.exact) {
    if (auto route = find_exact_route(tuple)) {
      opts.exact = route->pressure;
      opts.exact_route = route->name;
    }
  }
  TupleSpectra spectra(tuple, compute);
  return affinity_dimension(spectra, opts);
}

DropReport dimension_drop(const MatrixTuple& tuple, std::size_t remove, const DropOptions& opts) {
  if (tuple.size() < 3) throw InputError("drop: need at least 3 matrices so that 2 remain");
  if (remove >= tuple.size()) throw InputError("drop: remove index out of range");
  MatrixTuple reduced = tuple.without(remove);
  DropReport out;
  out.removed = remove;

  std::optional<ExactRoute> full_route, reduced_route;
  if (opts.use_exact) {
    full_route = find_exact_route(tuple);
    reduced_route = find_exact_route(reduced);
  }
  TupleSpectra full_spectra(tuple, opts.compute), reduced_spectra(reduced, opts.compute);
  AffinityOptions fo = opts.affinity, ro = opts.affinity;
  if (full_route) {
    fo.exact = full_route->pressure;
    fo.exact_route = full_route->name;
  }
  if (reduced_route) {
    ro.exact = reduced_route->pressure;
    ro.exact_route = reduced_route->name;
  }
  out.full = affinity_dimension(full_spectra, fo);
  out.reduced = affinity_dimension(reduced_spectra, ro);
  out.gap = out.full.lo - out.reduced.hi;
  out.verdict = out.reduced.hi < out.full.lo ? DropVerdict::StrictDrop : DropVerdict::Inconclusive;
  if (out.verdict == DropVerdict::Inconclusive)
    out.notes.push_back("the two dimension intervals overlap; no strict drop is claimed");

  std::vector<double> grid = opts.s_grid;
  if (grid.empty())
    for (double s = 0.0; s <= static_cast<double>(tuple.dim()) + 1e-12; s += 0.25) grid.push_back(s);
  for (double s : grid) {
    auto side = [&](TupleSpectra& sp, const std::optional<ExactRoute>& route) {
      if (route)
        if (auto v = route->pressure(s)) return std::pair<double, double>{*v, *v};
      auto e = estimate_pressure(sp, Potential::svf(s), opts.affinity.n_max);
      return std::pair<double, double>{e.lower, e.upper};
    };
    auto [fl, fu] = side(full_spectra, full_route);
    auto [rl, ru] = side(reduced_spectra, reduced_route);
    out.gaps.push_back({s, fl - ru, fu - rl});
  }
  return out;
}

void write_gap_csv(std::ostream& out, const std::vector<GapRow>& rows) {
  out << "s,gap_lower,gap_upper\n";
  for (const auto& r : rows) out << g17(r.s) << ',' << g17(r.gap_lower) << ',' << g17(r.gap_upper) << '\n';
}

}  // namespace svfkit
