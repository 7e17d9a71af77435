#pragma once

// Structural classification of a tuple: irreducibility, block triangular
// form, generalised permutation form, quasimultiplicativity evidence.

#include "svfkit/symbolic.hpp"
#include "svfkit/tuple.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svfkit {

enum class Verdict { Irreducible, Reducible, Unknown };

std::string to_string(Verdict v);

struct StructureReport {
  Verdict verdict = Verdict::Unknown;
  bool certified = false;
  Backend backend = Backend::Float;
  /// Basis of a common invariant subspace (columns); set iff Reducible.
  MatrixD witness;
  std::optional<MatrixQ> witness_exact;
  std::size_t algebra_dim = 0;
  std::string method;
  std::vector<std::string> notes;
};

/// Basis of span{A_w : w any word, including the empty one}, d x d each.
std::vector<MatrixQ> algebra_closure(const std::vector<MatrixQ>& generators);
std::vector<MatrixD> algebra_closure(const std::vector<MatrixD>& generators);
std::size_t algebra_dim(const MatrixTuple& tuple);

/// Decides irreducibility. Exact tuples get exact verdicts; float tuples can
/// certify reducibility (the witness is checked) but report Irreducible with
/// certified = false. Reducible witnesses are minimal by inclusion.
StructureReport irreducibility_test(const MatrixTuple& tuple);

/// Irreducibility of the tuple of k-th exterior powers.
StructureReport k_irreducibility(const MatrixTuple& tuple, int k);

/// The tuple of exterior powers, exact when the input is.
MatrixTuple exterior_power_tuple(const MatrixTuple& tuple, int k);

struct BlockTriangularization {
  /// X with X^{-1} A_i X block upper triangular.
  MatrixD basis;
  std::optional<MatrixQ> basis_exact;
  std::vector<std::size_t> blocks;
  bool certified = true;
  std::vector<std::string> notes;
};

/// nullopt when the tuple is irreducible. Blocks are extracted in order,
/// each a minimal invariant subspace of what is left.
std::optional<BlockTriangularization> block_triangularize(const MatrixTuple& tuple);

/// The diagonal block tuples of X^{-1} A_i X.
std::vector<MatrixTuple> diagonal_blocks(const MatrixTuple& tuple, const BlockTriangularization& form);

/// X^{-1} A_i X (exact when possible).
MatrixTuple conjugate_by(const MatrixTuple& tuple, const BlockTriangularization& form);

struct PermutationForm {
  MatrixD basis;
  std::optional<MatrixQ> basis_exact;
  /// permutation[i][j] = pi_i(j), 0-based: X^{-1} A_i X e_j = a_ij e_{pi_i(j)}.
  std::vector<std::vector<int>> permutation;
  std::vector<std::vector<double>> scalars;
  std::optional<std::vector<std::vector<Rational>>> scalars_exact;
  bool standard_basis = false;
  std::size_t lines_examined = 0;
};

struct PermutationOptions {
  int max_word_length = 4;
  std::size_t line_budget = 64;
  double angle_tol = 1e-8;
};

std::optional<PermutationForm> detect_generalized_permutation(const MatrixTuple& tuple,
                                                              const PermutationOptions& opts = {});

/// True when every column of m has exactly one nonzero entry and so does
/// every row (float zero means below 1e-12 times the largest entry).
bool is_generalized_permutation(const MatrixD& m);
bool is_generalized_permutation(const MatrixQ& m);

struct QuasimultOptions {
  int K_max = 2;
  std::size_t n_max = 4;
  std::uint64_t pair_budget = std::uint64_t{1} << 22;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct QuasimultReport {
  double s = 0.0;
  bool found = false;
  double c = 1.0;
  int K = 0;
  /// c_by_length[n-1]: worst constant over pairs with max(|i|,|j|) <= n.
  std::vector<double> c_by_length;
  std::uint64_t pairs_tested = 0;
  bool sampled = false;
  Word worst_i, worst_j, worst_bridge;
};

/// Empirical search for (c, K) with phi^s(A_i) phi^s(A_j) <= c phi^s(A_{ikj}).
/// found means the constant has stabilised: c(n_max) <= 1.5 c(ceil(n_max/2)).
QuasimultReport quasimult_search(const MatrixTuple& tuple, double s, const QuasimultOptions& opts = {});

struct EqualModulusReport {
  bool holds = true;
  double worst_spread = 0.0;
  Word worst_word;
  std::uint64_t words_checked = 0;
};

/// Eigenvalue moduli of |det A_w|^{-1/d} A_w all equal (within tol) for
/// every word of length 1..n.
EqualModulusReport equal_modulus_probe(const MatrixTuple& tuple, std::size_t n, double tol = 1e-8,
                                       std::uint64_t budget = kDefaultWordBudget);

}  // namespace svfkit
