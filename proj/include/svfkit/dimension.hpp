#pragma once

// Lyapunov exponents and Lyapunov dimension of a measure, and the
// affinity-dimension drop when one map is removed.

#include "svfkit/pressure.hpp"
#include "svfkit/symbolic.hpp"
#include "svfkit/tuple.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace svfkit {

enum class LyapunovMethod { Auto, ClosedForm, Deterministic, MonteCarlo };

std::string to_string(LyapunovMethod m);
LyapunovMethod parse_lyapunov_method(const std::string& text);

struct LyapunovOptions {
  LyapunovMethod method = LyapunovMethod::Auto;
  /// Word length for the deterministic method.
  std::size_t n = 10;
  std::size_t samples = 10000;
  std::size_t length = 200;
  /// Required by the Monte Carlo method.
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::uint64_t budget = kDefaultWordBudget;
};

struct LyapunovSpectrum {
  /// lambda_1 >= ... >= lambda_d, nats per symbol.
  std::vector<double> exponents;
  /// 3 standard errors for Monte Carlo, 0 otherwise.
  std::vector<double> half_widths;
  std::vector<double> std_errors;
  /// partial_sums[k] = lambda_1 + ... + lambda_k, k = 0..d.
  std::vector<double> partial_sums;
  std::vector<double> partial_half_widths;
  LyapunovMethod method = LyapunovMethod::ClosedForm;
  std::size_t n = 0;
  std::size_t samples = 0;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  /// Deterministic-n partial sums decrease to their limits, so they are
  /// upper bounds.
  bool partial_sums_upper = false;
};

LyapunovSpectrum lyapunov_exponents(const MatrixTuple& tuple, const MeasureSpec& mu, const LyapunovOptions& opts = {});

/// lambda(phi^s, mu) assembled from the partial sums (piecewise affine in s).
double svf_exponent(const LyapunovSpectrum& spectrum, double s);

struct LyapunovDimension {
  double lo = 0.0;
  double hi = 0.0;
  double entropy = 0.0;
  bool entropy_exact = false;
  bool capped = false;
  bool certified = true;
  LyapunovSpectrum spectrum;
  std::vector<std::string> notes;
};

LyapunovDimension lyapunov_dimension(const MatrixTuple& tuple, const MeasureSpec& mu, const LyapunovOptions& opts = {},
                                     double tol = 1e-12);

enum class DropVerdict { StrictDrop, Inconclusive };
std::string to_string(DropVerdict v);

struct GapRow {
  double s = 0.0;
  double gap_lower = 0.0;
  double gap_upper = 0.0;
};

struct DropOptions {
  AffinityOptions affinity;
  bool use_exact = true;
  std::vector<double> s_grid;
  ComputeOptions compute;
};

struct DropReport {
  std::size_t removed = 0;
  AffinityDimension full;
  AffinityDimension reduced;
  DropVerdict verdict = DropVerdict::Inconclusive;
  /// full.lo - reduced.hi (positive exactly for StrictDrop).
  double gap = 0.0;
  std::vector<GapRow> gaps;
  std::vector<std::string> notes;
};

/// Affinity dimension of the tuple and of the tuple without matrix `remove`
/// (0-based). Requires N >= 3.
DropReport dimension_drop(const MatrixTuple& tuple, std::size_t remove, const DropOptions& opts = {});

/// Header `s,gap_lower,gap_upper`, 17 significant digits.
void write_gap_csv(std::ostream& out, const std::vector<GapRow>& rows);

/// Affinity dimension using the exact route when one is found.
AffinityDimension affinity_dimension_auto(const MatrixTuple& tuple, AffinityOptions opts, bool use_exact = true,
                                          const ComputeOptions& compute = {});

}  // namespace svfkit
