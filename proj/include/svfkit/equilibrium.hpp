#pragma once

// Equilibrium states for the classes where they can be written down:
// generalised permutation tuples (through the lift h_s), diagonal tuples,
// block triangular reductions, and the 3x3 pipeline.

#include "svfkit/multilinear.hpp"
#include "svfkit/pressure.hpp"
#include "svfkit/structure.hpp"
#include "svfkit/symbolic.hpp"
#include "svfkit/tuple.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svfkit {

/// Basis vector e_{S,i} of the lift: S a k-subset, i outside S (0-based).
struct LiftLabel {
  Combination S;
  int i = 0;
};

std::string to_string(const LiftLabel& label);

/// Labels in lexicographic order of S, then i.
std::vector<LiftLabel> lift_labels(int d, int k);

struct LiftedTuple {
  int d = 0;
  int k = 0;
  double s = 0.0;
  std::vector<MatrixD> matrices;
  std::vector<LiftLabel> labels;
};

/// h_s(A) e_{S,i} = (prod_{j in S} |a_j|) |a_i|^{s-k} e_{pi(S), pi(i)} where
/// A e_j = a_j e_{pi(j)}. Requires 0 <= k < d and k <= s <= k + 1.
MatrixD lift_matrix(const std::vector<int>& permutation, const std::vector<double>& scalars, double s, int k);
/// Same, reading pi and a from a generalised permutation matrix.
MatrixD lift_matrix(const MatrixD& a, double s, int k);

LiftedTuple permutation_lift(const PermutationForm& form, double s, int k);
/// For tuples that are generalised permutations in the standard basis.
LiftedTuple permutation_lift(const MatrixTuple& tuple, double s, int k);

struct EquilibriumState {
  MeasureSpec spec;
  /// log of the Perron value of the component (its norm pressure).
  double pressure = 0.0;
  /// The matrices whose norm the state is Gibbs for: the restriction of the
  /// lift to the component, or 1x1 weights.
  std::vector<MatrixD> potential;
  /// Indices of the component inside the lift and their labels if known.
  std::vector<std::size_t> component;
  std::vector<std::string> labels;
  /// mu([w]) e^{|w| P} / ||M_w|| lies in [1/C, C].
  double gibbs_constant = 1.0;
  int period = 1;
  bool fully_supported = true;
};

struct CandidatePressure {
  std::string name;
  std::vector<MatrixD> matrices;
  Potential potential;
  PressureEstimate estimate;
};

struct EquilibriumReport {
  double s = 0.0;
  std::string route;
  std::vector<EquilibriumState> states;
  /// Upper bound on the number of ergodic equilibrium states.
  int multiplicity_bound = 0;
  /// States are explicit and the pressure is exact.
  bool exact = false;
  /// Whether the listed states are all of them (otherwise only bounds).
  bool complete = false;
  double pressure = 0.0;
  PressureEstimate pressure_estimate;
  std::vector<CandidatePressure> candidates;
  std::optional<StructureReport> structure;
  std::optional<QuasimultReport> quasimult;
  std::vector<std::string> notes;
};

/// One Perron-Gibbs (or Bernoulli, for 1x1 blocks) state per strongly
/// connected component of sum M_i whose Perron value is maximal; duplicates
/// (equal as measures) are merged.
EquilibriumReport nonneg_equilibria(const std::vector<MatrixD>& matrices);

/// Diagonal tuples: the lift is diagonal and every slot gives a Bernoulli
/// state. Requires k < s < k + 1 for some k < d (s not an integer).
EquilibriumReport diagonal_equilibria(const MatrixTuple& tuple, double s);

/// Equilibria of a tuple in generalised permutation form.
EquilibriumReport permutation_equilibria(const MatrixTuple& tuple, const PermutationForm& form, double s);

/// Shortest word whose cylinder masses differ by more than tol, or nullopt
/// if the two measures coincide. Decided exactly through the linear
/// representations, so only Bernoulli and Perron-Gibbs specs are accepted.
std::optional<Word> distinguishing_word(const MeasureSpec& a, const MeasureSpec& b, double tol = 1e-10);

/// X^{-1} A_i X with everything above the diagonal blocks zeroed.
MatrixTuple block_diagonal_reduce(const MatrixTuple& tuple, const BlockTriangularization& form);

struct ThreeCandidateReport {
  double s = 0.0;
  /// A' = |b|^{1/(s-1)} C with ||.||^{s-1}, A'' = |b|^{s-1} C with ||.||,
  /// A''' = |det C|^{(s-1)/(2-s)} C with ||.||^{2-s}.
  std::vector<CandidatePressure> candidates;
  /// [max of lowers, max of uppers].
  PressureEstimate combined;
};

/// The three auxiliary norm pressures of b (+) C for 1 < s < 2. On every
/// word phi^s(diag(b, C)) is the largest of the three potentials, so the
/// pressure is the largest of the three pressures.
ThreeCandidateReport reducible3d_pressure(const std::vector<double>& b, const std::vector<MatrixD>& C, double s,
                                          std::size_t n_max, const ComputeOptions& opts = {});

/// log phi^s of the word b_w (+) C_w and the three exponents e1, e2, e3.
struct CandidateExponents {
  double log_svf = 0.0;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
};
CandidateExponents candidate_exponents(double b, const MatrixD& c, double s);

/// Splits a block diagonal 3x3 tuple with blocks (1,2) or (2,1).
void split_one_two(const MatrixTuple& reduced, const std::vector<std::size_t>& blocks, std::vector<double>& b,
                   std::vector<MatrixD>& C);

struct ClassifyOptions {
  std::size_t n_max = 8;
  QuasimultOptions quasimult;
  ComputeOptions compute;
};

/// Equilibrium analysis of a 3x3 tuple at 0 < s < 3.
EquilibriumReport classify3d(const MatrixTuple& tuple, double s, const ClassifyOptions& opts = {});

/// General entry point: the explicit routes for any d, classify3d for d = 3.
EquilibriumReport equilibria(const MatrixTuple& tuple, double s, const ClassifyOptions& opts = {});

struct GibbsRow {
  double gibbs_constant = 1.0;
  /// mu([w]) e^{nP} / ||M_w|| over |w| = n with M the state's potential.
  double min_ratio = 0.0, max_ratio = 0.0;
  /// mu([w]) e^{nP} / phi^s(A_w). Only the upper side is guaranteed.
  double min_svf_ratio = 0.0, max_svf_ratio = 0.0;
  bool within = false;
};

std::vector<GibbsRow> gibbs_check(const EquilibriumReport& report, const MatrixTuple& tuple, double s,
                                  std::size_t n, std::uint64_t budget = kDefaultWordBudget);

/// Exact pressure for tuples whose block diagonal reduction is a similitude
/// tuple or a generalised permutation tuple.
struct ExactRoute {
  std::string name;
  ExactPressure pressure;
};

std::optional<ExactRoute> find_exact_route(const MatrixTuple& tuple);

/// True when every A_i^T A_i is a multiple of the identity.
bool is_similitude_tuple(const MatrixTuple& tuple, double tol = 1e-12);

}  // namespace svfkit
