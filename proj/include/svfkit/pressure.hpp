#pragma once

// Partition sums, certified bounds for the singular value pressure, exact
// pressure of nonnegative tuples, and the affinity dimension.

#include "svfkit/symbolic.hpp"
#include "svfkit/tuple.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace svfkit {

struct Potential {
  enum class Kind { SVF, NormPow };
  Kind kind = Kind::SVF;
  double s = 0.0;

  static Potential svf(double s) { return {Kind::SVF, s}; }
  static Potential norm(double s) { return {Kind::NormPow, s}; }
  std::string name() const;
};

/// log pot(A) from the log singular values of A.
double log_potential(const Potential& pot, std::span<const double> log_alpha);

struct ComputeOptions {
  unsigned threads = 1;
  std::uint64_t budget = kDefaultWordBudget;
  /// Cap on the number of words whose eigenvalues feed the spectral lower
  /// bound (eigensolves are far costlier than the SVDs).
  std::uint64_t spectral_budget = std::uint64_t{1} << 17;
};

/// Per-word log singular values (and lazily, log eigenvalue moduli) by word
/// length. Words are grouped into fixed lexicographic prefix blocks whose
/// layout does not depend on the thread count, so every reduction over them
/// is reproducible.
class TupleSpectra {
 public:
  explicit TupleSpectra(MatrixTuple tuple, ComputeOptions opts = {});

  const MatrixTuple& tuple() const { return tuple_; }
  const ComputeOptions& options() const { return opts_; }
  std::size_t dim() const { return tuple_.dim(); }
  std::size_t count() const { return tuple_.size(); }

  struct Level {
    std::size_t n = 0;
    /// blocks[b] holds d log singular values per word, words in order.
    std::vector<std::vector<double>> blocks;
  };

  const Level& singular_level(std::size_t n);
  const Level& eigen_level(std::size_t n);

  /// Longest word length whose eigenvalue levels fit the spectral budget.
  std::size_t spectral_length(std::size_t n_max) const;

 private:
  Level compute_level(std::size_t n, bool eigen) const;

  MatrixTuple tuple_;
  ComputeOptions opts_;
  std::vector<double> log_det_;
  std::vector<std::unique_ptr<Level>> singular_;
  std::vector<std::unique_ptr<Level>> eigen_;
};

/// log sum over |w| = n of pot(A_w).
double partition_sum(TupleSpectra& spectra, const Potential& pot, std::size_t n);
double partition_sum(const MatrixTuple& tuple, const Potential& pot, std::size_t n, const ComputeOptions& opts = {});

struct UpperBound {
  double value = 0.0;
  std::size_t n_at_min = 0;
  /// sequence[n-1] = (1/n) partition_sum(n).
  std::vector<double> sequence;
};

struct LowerBound {
  double value = 0.0;
  double determinant_bound = 0.0;
  double spectral_bound = 0.0;
  Word spectral_word;
  std::size_t spectral_length = 0;
  std::string active;
};

/// min over n <= n_max of (1/n) log Z_n (Fekete).
UpperBound pressure_upper(TupleSpectra& spectra, const Potential& pot, std::size_t n_max);
double pressure_upper(const MatrixTuple& tuple, const Potential& pot, std::size_t n_max, const ComputeOptions& opts = {});

/// max of the determinant minorant log sum |det A_i|^{s/d} and the spectral
/// minorant max (1/|w|) log chi^s(A_w).
LowerBound pressure_lower(TupleSpectra& spectra, const Potential& pot, std::size_t n_max);
double pressure_lower(const MatrixTuple& tuple, const Potential& pot, std::size_t n_max, const ComputeOptions& opts = {});

struct PressureEstimate {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n_used = 0;
  std::vector<std::string> methods;
  bool exact = false;
};

PressureEstimate estimate_pressure(TupleSpectra& spectra, const Potential& pot, std::size_t n_max);

/// Exact pressure source for tuples in a class with closed-form pressure;
/// returns nullopt at s values where it does not apply.
using ExactPressure = std::function<std::optional<double>(double s)>;

/// log rho(sum M_i) for entrywise nonnegative matrices.
double pressure_exact_nonneg(const std::vector<MatrixD>& matrices);

struct CurvePoint {
  double s = 0.0;
  PressureEstimate estimate;
  std::optional<double> exact;
};

std::vector<CurvePoint> pressure_curve(TupleSpectra& spectra, const std::vector<double>& s_grid, std::size_t n_max,
                                       const ExactPressure& exact = {});

/// Header `s,lower,upper,exact,n_used`, 17 significant digits.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

/// Parses "a:b:step" into an inclusive grid.
std::vector<double> parse_grid(const std::string& text);

struct AffinityOptions {
  std::size_t n_max = 8;
  double tol = 1e-9;
  int max_iterations = 200;
  ExactPressure exact;
  std::string exact_route;
};

struct AffinityDimension {
  double lo = 0.0;
  double hi = 0.0;
  /// Bracket from the generic bound curves, always computed.
  double bound_lo = 0.0;
  double bound_hi = 0.0;
  bool exact = false;
  bool contractive = true;
  bool certified = true;
  bool capped = false;
  std::string route;
  int iterations = 0;
  std::vector<std::string> notes;
};

AffinityDimension affinity_dimension(TupleSpectra& spectra, const AffinityOptions& opts);

/// Deterministic pairwise log-sum-exp.
double log_sum_exp(std::span<const double> values);

/// Last root of a decreasing function on [0, cap] by bisection; returns the
/// final bracket [a, b] with f(a) >= 0 > f(b), or [cap, cap] when f(cap) >= 0.
std::pair<double, double> bisect_root(const std::function<double(double)>& f, double cap, double tol,
                                      int max_iterations, int* iterations = nullptr);

}  // namespace svfkit
