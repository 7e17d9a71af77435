#pragma once

// Words over {0,...,N-1}, cylinder sets and shift-invariant measures.
// Symbols are 0-based internally; reports print them 1-based.

#include "svfkit/matrix.hpp"
#include "svfkit/tuple.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace svfkit {

using Word = std::vector<int>;

inline constexpr std::uint64_t kDefaultWordBudget = std::uint64_t{1} << 24;

/// N^n, or BudgetError when it exceeds `budget`.
std::uint64_t word_count(std::size_t N, std::size_t n, std::uint64_t budget = kDefaultWordBudget);

/// Visits every word of length n in lexicographic order.
void for_each_word(std::size_t N, std::size_t n, const std::function<void(const Word&)>& visit,
                   std::uint64_t budget = kDefaultWordBudget);

/// All words of length n, lexicographic.
std::vector<Word> enumerate_words(std::size_t N, std::size_t n, std::uint64_t budget = kDefaultWordBudget);

/// The index-th word of length n in lexicographic order.
Word word_at(std::size_t N, std::size_t n, std::uint64_t index);

/// "1 2 1" style 1-based rendering.
std::string word_to_string(const Word& w);
/// Parses "112122" (digits, 1-based) or "1 12 3" (space separated).
Word parse_word(const std::string& text, std::size_t N);

template <typename T>
Matrix<T> word_product(const std::vector<Matrix<T>>& matrices, const Word& w) {
  if (matrices.empty()) throw InputError("word_product: empty tuple");
  Matrix<T> out = Matrix<T>::identity(matrices.front().rows());
  for (int symbol : w) {
    if (symbol < 0 || static_cast<std::size_t>(symbol) >= matrices.size())
      throw InputError("word_product: symbol out of range");
    out = out * matrices[symbol];
  }
  return out;
}

inline MatrixD word_product(const MatrixTuple& tuple, const Word& w) { return word_product(tuple.matrices(), w); }

struct BernoulliSpec {
  std::vector<double> probs;
  /// Present when the weights are known exactly.
  std::optional<std::vector<Rational>> exact;
};

/// Symbols are emitted on transitions: moving from state a to state b emits
/// symbol_map(a, b) (or nothing is allowed when it is -1).
struct MarkovSpec {
  MatrixD transition;
  std::vector<double> stationary;
  std::vector<std::vector<int>> symbol_map;
  std::size_t alphabet = 0;
};

/// mu([w]) = u^T M_w v / (rho^|w| u^T v), with u^T v = 1 and max v = 1.
struct PerronGibbsSpec {
  std::vector<MatrixD> matrices;
  double perron_value = 0.0;
  std::vector<double> left;
  std::vector<double> right;
  /// Cyclicity index of the sum matrix; ergodicity is not asserted when > 1.
  int period = 1;
};

using MeasureSpec = std::variant<BernoulliSpec, MarkovSpec, PerronGibbsSpec>;

std::size_t alphabet_size(const MeasureSpec& spec);
std::string spec_kind(const MeasureSpec& spec);

/// Throws InputError when the defining data is inconsistent (negative
/// probabilities, rows not summing to one, shape mismatches).
void validate(const MeasureSpec& spec, double tol = 1e-12);

double cylinder_measure(const MeasureSpec& spec, const Word& w);

/// Exact cylinder mass for Bernoulli measures with rational weights.
Rational cylinder_measure_exact(const BernoulliSpec& spec, const Word& w);

/// Draws a mu-random word of the given length (conditional cylinder ratios).
Word sample_word(const MeasureSpec& spec, std::size_t length, std::mt19937_64& rng);

struct EntropyEstimate {
  double value = 0.0;
  std::size_t n = 0;
  bool closed_form = false;
  /// Finite-n values (1/n) H_n decrease to h, so they bound it from above.
  bool upper_bound = false;
  bool sampled = false;
  std::size_t samples = 0;
  double std_error = 0.0;
};

struct SamplingOptions {
  std::uint64_t budget = kDefaultWordBudget;
  std::uint64_t seed = 0;
  std::size_t samples = 100000;
};

/// Closed form for Bernoulli and right-resolving Markov specs, otherwise the
/// finite-n cylinder entropy (sampled when N^n exceeds the budget).
EntropyEstimate entropy_rate(const MeasureSpec& spec, std::size_t n, const SamplingOptions& opts = {});

/// The finite-n quantity (1/n) sum -mu log mu, even when a closed form exists.
EntropyEstimate block_entropy(const MeasureSpec& spec, std::size_t n, const SamplingOptions& opts = {});

struct InvarianceReport {
  double max_defect = 0.0;
  Word worst_word;
  std::uint64_t words_checked = 0;
  bool sampled = false;
};

/// max over |w| = n of |sum_i mu([iw]) - mu([w])|.
InvarianceReport invariance_check(const MeasureSpec& spec, std::size_t n, const SamplingOptions& opts = {});

/// Sum of cylinder masses over all words of length n.
double total_mass(const MeasureSpec& spec, std::size_t n, std::uint64_t budget = kDefaultWordBudget);

/// Smallest cylinder mass over all words of length n.
double min_cylinder(const MeasureSpec& spec, std::size_t n, std::uint64_t budget = kDefaultWordBudget);

/// Whether each state emits distinct symbols on its outgoing transitions.
bool is_right_resolving(const MarkovSpec& spec);

}  // namespace svfkit
