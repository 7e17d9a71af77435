#include "svfkit/symbolic.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace svfkit {

std::uint64_t word_count(std::size_t N, std::size_t n, std::uint64_t budget) {
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (count > budget / std::max<std::size_t>(N, 1))
      throw BudgetError(std::to_string(N) + "^" + std::to_string(n) + " words exceed the budget of " +
                        std::to_string(budget));
    count *= N;
  }
  if (count > budget) throw BudgetError("word count exceeds the budget");
  return count;
}

void for_each_word(std::size_t N, std::size_t n, const std::function<void(const Word&)>& visit,
                   std::uint64_t budget) {
  if (N == 0) throw InputError("alphabet must be nonempty");
  word_count(N, n, budget);
  Word w(n, 0);
  for (;;) {
    visit(w);
    std::size_t pos = n;
    while (pos > 0 && static_cast<std::size_t>(w[pos - 1]) + 1 == N) w[--pos] = 0;
    if (pos == 0) return;
    ++w[pos - 1];
  }
}

std::vector<Word> enumerate_words(std::size_t N, std::size_t n, std::uint64_t budget) {
  std::vector<Word> out;
  out.reserve(word_count(N, n, budget));
  for_each_word(N, n, [&](const Word& w) { out.push_back(w); }, budget);
  return out;
}

Word word_at(std::size_t N, std::size_t n, std::uint64_t index) {
  Word w(n, 0);
  for (std::size_t pos = n; pos > 0; --pos) {
    w[pos - 1] = static_cast<int>(index % N);
    index /= N;
  }
  return w;
}

std::string word_to_string(const Word& w) {
  std::string out;
  bool wide = std::any_of(w.begin(), w.end(), [](int s) { return s >= 9; });
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (wide && i) out += ' ';
    out += std::to_string(w[i] + 1);
  }
  return out;
}

Word parse_word(const std::string& text, std::size_t N) {
  Word w;
  auto push = [&](long value) {
    if (value < 1 || static_cast<std::size_t>(value) > N)
      throw InputError("symbol " + std::to_string(value) + " out of range 1.." + std::to_string(N));
    w.push_back(static_cast<int>(value - 1));
  };
  if (text.find(' ') == std::string::npos) {
    for (char c : text) {
      if (!std::isdigit(static_cast<unsigned char>(c))) throw InputError("malformed word '" + text + "'");
      push(c - '0');
    }
    return w;
  }
  std::istringstream in(text);
  long value;
  while (in >> value) push(value);
  if (!in.eof()) throw InputError("malformed word '" + text + "'");
  return w;
}

namespace {

// Every supported measure is mu([w]) = a M_w b / (rho^|w| a.b).
struct ProductForm {
  std::vector<MatrixD> m;
  std::vector<double> a;
  std::vector<double> b;
  double rho = 1.0;
};

ProductForm product_form(const MeasureSpec& spec) {
  ProductForm f;
  if (const auto* bern = std::get_if<BernoulliSpec>(&spec)) {
    for (double p : bern->probs) f.m.push_back(MatrixD(1, 1, p));
    f.a = {1.0};
    f.b = {1.0};
  } else if (const auto* mk = std::get_if<MarkovSpec>(&spec)) {
    const std::size_t S = mk->transition.rows();
    f.m.assign(mk->alphabet, MatrixD(S, S));
    for (std::size_t x = 0; x < S; ++x)
      for (std::size_t y = 0; y < S; ++y) {
        int symbol = mk->symbol_map[x][y];
        if (symbol >= 0) f.m[symbol](x, y) = mk->transition(x, y);
      }
    f.a = mk->stationary;
    f.b.assign(S, 1.0);
  } else {
    const auto& pg = std::get<PerronGibbsSpec>(spec);
    f.m = pg.matrices;
    f.a = pg.left;
    f.b = pg.right;
    f.rho = pg.perron_value;
  }
  return f;
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// Row vector times matrix.
std::vector<double> row_times(std::span<const double> x, const MatrixD& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (x[i] == 0.0) continue;
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += x[i] * m(i, j);
  }
  return out;
}

double cylinder_in(const ProductForm& f, const Word& w) {
  std::vector<double> x = f.a;
  for (int symbol : w) {
    if (symbol < 0 || static_cast<std::size_t>(symbol) >= f.m.size()) throw InputError("cylinder: symbol out of range");
    x = row_times(x, f.m[symbol]);
    for (double& v : x) v /= f.rho;
  }
  return dot(x, f.b) / dot(f.a, f.b);
}

// Samples a word and returns log mu([w]) alongside it.
double sample_in(const ProductForm& f, std::size_t length, std::mt19937_64& rng, Word* out) {
  std::vector<double> x = f.a;
  double log_mu = 0.0;
  std::vector<double> weights(f.m.size());
  std::vector<std::vector<double>> next(f.m.size());
  for (std::size_t t = 0; t < length; ++t) {
    double total = 0.0;
    for (std::size_t i = 0; i < f.m.size(); ++i) {
      next[i] = row_times(x, f.m[i]);
      weights[i] = dot(next[i], f.b);
      total += weights[i];
    }
    if (!(total > 0.0)) throw NumericError("sampling from a measure with zero mass");
    double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = 0;
    double acc = weights[0];
    while (pick + 1 < weights.size() && (r >= acc || weights[pick] == 0.0)) acc += weights[++pick];
    log_mu += std::log(weights[pick] / total);
    x = std::move(next[pick]);
    for (double& v : x) v /= weights[pick];
    if (out) out->push_back(static_cast<int>(pick));
  }
  return log_mu;
}

}  // namespace

std::size_t alphabet_size(const MeasureSpec& spec) {
  if (const auto* b = std::get_if<BernoulliSpec>(&spec)) return b->probs.size();
  if (const auto* m = std::get_if<MarkovSpec>(&spec)) return m->alphabet;
  return std::get<PerronGibbsSpec>(spec).matrices.size();
}

std::string spec_kind(const MeasureSpec& spec) {
  switch (spec.index()) {
    case 0: return "bernoulli";
    case 1: return "markov";
    default: return "perron-gibbs";
  }
}

void validate(const MeasureSpec& spec, double tol) {
  if (const auto* b = std::get_if<BernoulliSpec>(&spec)) {
    if (b->probs.empty()) throw InputError("Bernoulli: empty probability vector");
    double sum = 0.0;
    for (double p : b->probs) {
      if (!(p >= 0.0)) throw InputError("Bernoulli: negative probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > tol) throw InputError("Bernoulli: probabilities do not sum to 1");
    if (b->exact) {
      Rational s = 0;
      for (const auto& p : *b->exact) {
        if (p < 0) throw InputError("Bernoulli: negative probability");
        s += p;
      }
      if (s != 1) throw InputError("Bernoulli: exact probabilities do not sum to 1");
    }
  } else if (const auto* m = std::get_if<MarkovSpec>(&spec)) {
    const std::size_t S = m->transition.rows();
    if (!m->transition.is_square() || m->stationary.size() != S || m->symbol_map.size() != S)
      throw InputError("Markov: shape mismatch");
    for (std::size_t x = 0; x < S; ++x) {
      if (m->symbol_map[x].size() != S) throw InputError("Markov: symbol map shape mismatch");
      double row = 0.0;
      for (std::size_t y = 0; y < S; ++y) {
        double p = m->transition(x, y);
        if (p < 0.0) throw InputError("Markov: negative transition probability");
        int symbol = m->symbol_map[x][y];
        if (p > 0.0 && (symbol < 0 || static_cast<std::size_t>(symbol) >= m->alphabet))
          throw InputError("Markov: allowed transition without a valid symbol");
        row += p;
      }
      if (std::fabs(row - 1.0) > tol) throw InputError("Markov: transition rows must sum to 1");
    }
  } else {
    const auto& pg = std::get<PerronGibbsSpec>(spec);
    if (pg.matrices.empty()) throw InputError("Perron-Gibbs: no matrices");
    const std::size_t D = pg.matrices.front().rows();
    if (pg.left.size() != D || pg.right.size() != D) throw InputError("Perron-Gibbs: vector length mismatch");
    if (!(pg.perron_value > 0.0)) throw InputError("Perron-Gibbs: Perron value must be positive");
    for (const auto& m : pg.matrices) {
      if (m.rows() != D || m.cols() != D) throw InputError("Perron-Gibbs: matrix shape mismatch");
      for (double x : m.data())
        if (x < 0.0) throw InputError("Perron-Gibbs: negative entry");
    }
  }
}

double cylinder_measure(const MeasureSpec& spec, const Word& w) {
  if (const auto* b = std::get_if<BernoulliSpec>(&spec)) {
    double p = 1.0;
    for (int symbol : w) {
      if (symbol < 0 || static_cast<std::size_t>(symbol) >= b->probs.size()) throw InputError("cylinder: symbol out of range");
      p *= b->probs[symbol];
    }
    return p;
  }
  return cylinder_in(product_form(spec), w);
}

Rational cylinder_measure_exact(const BernoulliSpec& spec, const Word& w) {
  if (!spec.exact) throw InputError("Bernoulli spec has no exact weights");
  Rational p = 1;
  for (int symbol : w) p *= spec.exact->at(symbol);
  return p;
}

Word sample_word(const MeasureSpec& spec, std::size_t length, std::mt19937_64& rng) {
  Word w;
  w.reserve(length);
  sample_in(product_form(spec), length, rng, &w);
  return w;
}

bool is_right_resolving(const MarkovSpec& spec) {
  for (std::size_t x = 0; x < spec.symbol_map.size(); ++x) {
    std::vector<int> seen;
    for (std::size_t y = 0; y < spec.symbol_map[x].size(); ++y) {
      if (spec.transition(x, y) <= 0.0) continue;
      int symbol = spec.symbol_map[x][y];
      if (std::find(seen.begin(), seen.end(), symbol) != seen.end()) return false;
      seen.push_back(symbol);
    }
  }
  return true;
}

EntropyEstimate block_entropy(const MeasureSpec& spec, std::size_t n, const SamplingOptions& opts) {
  if (n == 0) throw InputError("entropy: n must be at least 1");
  const std::size_t N = alphabet_size(spec);
  EntropyEstimate est;
  est.n = n;
  est.upper_bound = true;
  ProductForm f = product_form(spec);
  bool fits = true;
  try {
    word_count(N, n, opts.budget);
  } catch (const BudgetError&) {
    fits = false;
  }
  if (fits) {
    double h = 0.0;
    for_each_word(N, n, [&](const Word& w) {
      double mu = cylinder_in(f, w);
      if (mu > 0.0) h -= mu * std::log(mu);
    }, opts.budget);
    est.value = h / static_cast<double>(n);
    return est;
  }
  std::mt19937_64 rng(opts.seed);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t t = 0; t < opts.samples; ++t) {
    double x = -sample_in(f, n, rng, nullptr) / static_cast<double>(n);
    sum += x;
    sum2 += x * x;
  }
  const auto S = static_cast<double>(opts.samples);
  est.value = sum / S;
  est.sampled = true;
  est.samples = opts.samples;
  est.std_error = std::sqrt(std::max(0.0, sum2 / S - est.value * est.value) / S);
  return est;
}

EntropyEstimate entropy_rate(const MeasureSpec& spec, std::size_t n, const SamplingOptions& opts) {
  if (n == 0) throw InputError("entropy: n must be at least 1");
  EntropyEstimate est;
  est.n = n;
  if (const auto* b = std::get_if<BernoulliSpec>(&spec)) {
    for (double p : b->probs)
      if (p > 0.0) est.value -= p * std::log(p);
    est.closed_form = true;
    return est;
  }
  if (const auto* m = std::get_if<MarkovSpec>(&spec); m && is_right_resolving(*m)) {
    for (std::size_t x = 0; x < m->transition.rows(); ++x)
      for (std::size_t y = 0; y < m->transition.cols(); ++y) {
        double p = m->transition(x, y);
        if (p > 0.0) est.value -= m->stationary[x] * p * std::log(p);
      }
    est.closed_form = true;
    return est;
  }
  return block_entropy(spec, n, opts);
}

InvarianceReport invariance_check(const MeasureSpec& spec, std::size_t n, const SamplingOptions& opts) {
  const std::size_t N = alphabet_size(spec);
  ProductForm f = product_form(spec);
  InvarianceReport report;
  auto check = [&](const Word& w) {
    double total = 0.0;
    Word iw(w.size() + 1);
    std::copy(w.begin(), w.end(), iw.begin() + 1);
    for (std::size_t i = 0; i < N; ++i) {
      iw[0] = static_cast<int>(i);
      total += cylinder_in(f, iw);
    }
    double defect = std::fabs(total - cylinder_in(f, w));
    if (++report.words_checked == 1 || defect > report.max_defect) {
      report.max_defect = defect;
      report.worst_word = w;
    }
  };
  bool fits = true;
  try {
    word_count(N, n + 1, opts.budget);
  } catch (const BudgetError&) {
    fits = false;
  }
  if (fits) {
    for_each_word(N, n, check, opts.budget);
    return report;
  }
  report.sampled = true;
  std::mt19937_64 rng(opts.seed);
  for (std::size_t t = 0; t < opts.samples; ++t) {
    Word w;
    for (std::size_t i = 0; i < n; ++i) w.push_back(static_cast<int>(rng() % N));
    check(w);
  }
  return report;
}

double total_mass(const MeasureSpec& spec, std::size_t n, std::uint64_t budget) {
  ProductForm f = product_form(spec);
  std::vector<double> masses;
  for_each_word(alphabet_size(spec), n, [&](const Word& w) { masses.push_back(cylinder_in(f, w)); }, budget);
  // Pairwise summation.
  while (masses.size() > 1) {
    std::vector<double> next((masses.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i)
      next[i] = masses[2 * i] + (2 * i + 1 < masses.size() ? masses[2 * i + 1] : 0.0);
    masses.swap(next);
  }
  return masses.empty() ? 0.0 : masses.front();
}

double min_cylinder(const MeasureSpec& spec, std::size_t n, std::uint64_t budget) {
  ProductForm f = product_form(spec);
  double lowest = 1.0;
  for_each_word(alphabet_size(spec), n, [&](const Word& w) { lowest = std::min(lowest, cylinder_in(f, w)); }, budget);
  return lowest;
}

}  // namespace svfkit
