#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "svfkit/multilinear.hpp"
#include "svfkit/structure.hpp"

#include <numeric>

using namespace svfkit;
using namespace svftest;

namespace {

MatrixQ q(std::initializer_list<std::initializer_list<long>> rows) {
  MatrixQ m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (long x : r) m(i, j++) = Rational(x);
    ++i;
  }
  return m;
}

MatrixTuple cyclic_pair(long a, long b, long c) {
  MatrixQ a1 = q({{0, a, 0}, {0, 0, b}, {c, 0, 0}});
  return MatrixTuple::from_exact({a1, a1.transpose()});
}

MatrixQ random_upper(Rng& rng, std::size_t d) {
  for (;;) {
    MatrixQ m = random_rational(rng, d, 5, 3);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < i; ++j) m(i, j) = 0;
    if (determinant(m) != 0) return m;
  }
}

// [[B, u], [0, b]] with B a random 2x2 block.
MatrixQ random_block_upper(Rng& rng, bool diagonal) {
  for (;;) {
    MatrixQ m = random_rational(rng, 3, 5, 3);
    m(2, 0) = m(2, 1) = 0;
    if (diagonal) m(0, 2) = m(1, 2) = 0;
    if (determinant(m) != 0) return m;
  }
}

std::vector<MatrixQ> conjugate(const std::vector<MatrixQ>& a, const MatrixQ& x) {
  MatrixQ xi = inverse(x);
  std::vector<MatrixQ> out;
  for (const auto& m : a) out.push_back(x * m * xi);
  return out;
}

void check_witness(const MatrixTuple& t, const StructureReport& rep) {
  REQUIRE(rep.verdict == Verdict::Reducible);
  REQUIRE(rep.witness.cols() > 0);
  REQUIRE(rep.witness.cols() < t.dim());
  if (rep.witness_exact) {
    for (const auto& a : t.exact()) CHECK(columns_in_span(*rep.witness_exact, a * *rep.witness_exact));
  } else {
    for (const auto& a : t.matrices()) CHECK(distance_to_span(rep.witness, a * rep.witness) <= 1e-10);
  }
}

}  // namespace

TEST_CASE("algebra closure ranks") {
  auto rot = algebra_closure(std::vector<MatrixD>{rotation2(1.0)});
  CHECK(rot.size() == 2);
  Rng rng(3);
  CHECK(algebra_closure(std::vector<MatrixD>{random_invertible(rng, 2), random_invertible(rng, 2)}).size() == 4);
  CHECK(algebra_closure(std::vector<MatrixQ>{q({{1, 2}, {0, 3}}), q({{2, 1}, {0, 1}})}).size() == 3);
  CHECK(algebra_closure(std::vector<MatrixQ>{random_rational(rng, 3), random_rational(rng, 3)}).size() == 9);
}

TEST_CASE("upper triangular pair is reducible with span e1") {
  auto t = MatrixTuple::from_exact({q({{1, 2}, {0, 3}}), q({{2, 1}, {0, 1}})});
  auto rep = irreducibility_test(t);
  check_witness(t, rep);
  CHECK(rep.certified);
  REQUIRE(rep.witness_exact);
  CHECK(rep.witness_exact->cols() == 1);
  CHECK((*rep.witness_exact)(1, 0) == 0);
}

TEST_CASE("cyclic pairs") {
  // At least two of a^2, b^2, c^2 distinct: irreducible.
  for (auto [a, b, c] : std::vector<std::tuple<long, long, long>>{{1, 1, 2}, {1, 2, 3}, {2, 1, 1}, {-1, 1, 3}}) {
    auto rep = irreducibility_test(cyclic_pair(a, b, c));
    CHECK(rep.verdict == Verdict::Irreducible);
    CHECK(rep.certified);
    CHECK(rep.backend == Backend::Exact);
  }
  // All equal: A_2 = A_1^{-1} up to scale, the diagonal line is invariant.
  auto t = cyclic_pair(1, 1, 1);
  auto rep = irreducibility_test(t);
  check_witness(t, rep);
  CHECK(rep.witness.cols() == 1);
}

TEST_CASE("rotations") {
  auto t = MatrixTuple::from_float({rotation2(M_PI / 5), rotation2(1.0)});
  auto rep = irreducibility_test(t);
  CHECK(rep.verdict == Verdict::Irreducible);
  CHECK_FALSE(rep.certified);
  // Pythagorean rotation: exact, commutant is a copy of C.
  auto r = MatrixTuple::from_exact({MatrixQ{{Rational(3, 5), Rational(-4, 5)}, {Rational(4, 5), Rational(3, 5)}}});
  auto exact = irreducibility_test(r);
  CHECK(exact.verdict == Verdict::Irreducible);
  CHECK(exact.certified);
  CHECK(exact.method == "division commutant");
}

TEST_CASE("irrational invariant line") {
  // Eigenlines (+-sqrt 2, 1).
  auto t = MatrixTuple::from_exact({q({{0, 2}, {1, 0}})});
  auto rep = irreducibility_test(t);
  check_witness(t, rep);
  CHECK(rep.certified);
  CHECK_FALSE(rep.witness_exact);
  double ratio = std::fabs(rep.witness(0, 0) / rep.witness(1, 0));
  CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("hidden block structure is found exactly") {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    MatrixQ x = random_rational(rng, 3, 4, 3);
    auto gens = conjugate({random_block_upper(rng, false), random_block_upper(rng, false)}, x);
    auto tuple = MatrixTuple::from_exact(gens);
    auto rep = irreducibility_test(tuple);
    check_witness(tuple, rep);
    CHECK(rep.witness_exact);
  }
}

TEST_CASE("diagonalisable restriction still gives a rational witness") {
  // Upper triangular pair whose top 2x2 blocks share both eigenvectors, so
  // the split has to come from the commutant with rational eigenvalues.
  MatrixQ a{{Rational(-3, 2), -2, Rational(4, 3)}, {0, Rational(3, 2), 2}, {0, 0, -1}};
  MatrixQ b{{1, -1, Rational(5, 3)}, {0, Rational(5, 2), Rational(-5, 3)}, {0, 0, Rational(2, 3)}};
  MatrixQ x{{-2, -3, -1}, {Rational(-1, 2), 0, 1}, {3, -2, 1}};
  auto tuple = MatrixTuple::from_exact(conjugate({a, b}, x));
  auto rep = irreducibility_test(tuple);
  check_witness(tuple, rep);
  CHECK(rep.certified);
  CHECK(rep.witness_exact);
}

TEST_CASE("float reducibility is certified by the witness") {
  Rng rng(12);
  MatrixD x = random_invertible(rng, 3);
  MatrixD xi = inverse(x);
  std::vector<MatrixD> gens;
  for (int i = 0; i < 2; ++i) {
    MatrixD m = random_matrix(rng, 3);
    m(2, 0) = m(2, 1) = 0;
    m(2, 2) = 0.7;
    gens.push_back(x * m * xi);
  }
  auto t = MatrixTuple::from_float(gens);
  auto rep = irreducibility_test(t);
  check_witness(t, rep);
  CHECK(rep.certified);
  CHECK(rep.witness.cols() == 2);
}

TEST_CASE("k-irreducibility") {
  Rng rng(5);
  auto generic = MatrixTuple::from_exact({random_rational(rng, 3), random_rational(rng, 3)});
  CHECK(k_irreducibility(generic, 0).verdict == Verdict::Irreducible);
  CHECK(k_irreducibility(generic, 3).verdict == Verdict::Irreducible);
  auto split = MatrixTuple::from_exact({random_block_upper(rng, true), random_block_upper(rng, true)});
  CHECK(k_irreducibility(split, 1).verdict == Verdict::Reducible);
  CHECK_THROWS_AS(k_irreducibility(generic, 4), InputError);
}

TEST_CASE("k and d-k verdicts agree") {
  Rng rng(77);
  for (int t = 0; t < 30; ++t) {
    std::vector<MatrixQ> gens;
    switch (t % 3) {
      case 0: gens = {random_rational(rng, 3, 4, 3), random_rational(rng, 3, 4, 3)}; break;
      case 1: gens = conjugate({random_upper(rng, 3), random_upper(rng, 3)}, random_rational(rng, 3, 3, 2)); break;
      default: gens = {random_block_upper(rng, t % 2 == 0), random_block_upper(rng, t % 2 == 0)}; break;
    }
    auto tuple = MatrixTuple::from_exact(gens);
    CHECK(k_irreducibility(tuple, 1).verdict == k_irreducibility(tuple, 2).verdict);
  }
  Rng frng(78);
  for (int t = 0; t < 10; ++t) {
    auto tuple = MatrixTuple::from_float({random_invertible(frng, 4), random_invertible(frng, 4)});
    CHECK(k_irreducibility(tuple, 1).verdict == k_irreducibility(tuple, 3).verdict);
  }
}

TEST_CASE("block triangularization") {
  Rng rng(21);
  SUBCASE("upper triangular 3D") {
    auto t = MatrixTuple::from_exact({random_upper(rng, 3), random_upper(rng, 3)});
    auto form = block_triangularize(t);
    REQUIRE(form);
    CHECK(form->blocks == std::vector<std::size_t>{1, 1, 1});
    CHECK(form->basis_exact);
  }
  SUBCASE("round trip of a 2+1 upper block tuple") {
    MatrixQ x = random_rational(rng, 3, 4, 3);
    std::vector<MatrixQ> raw{random_block_upper(rng, false), random_block_upper(rng, false)};
    auto t = MatrixTuple::from_exact(conjugate(raw, x));
    auto form = block_triangularize(t);
    REQUIRE(form);
    CHECK(form->blocks == std::vector<std::size_t>{2, 1});
    REQUIRE(form->basis_exact);
    // Conjugating the triangular tuple back gives the input exactly.
    auto tri = conjugate_by(t, *form);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const MatrixQ& m = tri.exact()[i];
      CHECK(m(2, 0) == 0);
      CHECK(m(2, 1) == 0);
      CHECK(*form->basis_exact * m * inverse(*form->basis_exact) == t.exact()[i]);
    }
    auto blocks = diagonal_blocks(t, *form);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].dim() == 2);
    CHECK(blocks[1].dim() == 1);
  }
  SUBCASE("block diagonal tuples") {
    for (int t = 0; t < 5; ++t) {
      MatrixQ x = random_rational(rng, 3, 4, 3);
      std::vector<MatrixQ> raw{random_block_upper(rng, true), random_block_upper(rng, true)};
      auto form = block_triangularize(MatrixTuple::from_exact(conjugate(raw, x)));
      REQUIRE(form);
      auto blocks = form->blocks;
      std::sort(blocks.begin(), blocks.end());
      CHECK(blocks == std::vector<std::size_t>{1, 2});
    }
  }
  SUBCASE("irreducible gives none") {
    CHECK_FALSE(block_triangularize(cyclic_pair(1, 1, 2)));
    CHECK_FALSE(block_triangularize(MatrixTuple::from_exact({random_rational(rng, 3), random_rational(rng, 3)})));
  }
  SUBCASE("float tuple") {
    MatrixD x = random_invertible(rng, 3);
    std::vector<MatrixD> gens;
    for (int i = 0; i < 3; ++i) {
      MatrixD m = random_matrix(rng, 3);
      m(1, 0) = m(2, 0) = m(2, 1) = 0;
      m(0, 0) = 0.9, m(1, 1) = -0.6, m(2, 2) = 0.5 + 0.1 * i;
      gens.push_back(x * m * inverse(x));
    }
    auto form = block_triangularize(MatrixTuple::from_float(gens));
    REQUIRE(form);
    CHECK(form->blocks == std::vector<std::size_t>{1, 1, 1});
  }
}

TEST_CASE("generalized permutation in the standard basis") {
  MatrixQ a1 = q({{0, 0, 2}, {1, 0, 0}, {0, 2, 0}});
  MatrixQ a2 = q({{0, 1, 0}, {0, 0, 2}, {2, 0, 0}});
  auto form = detect_generalized_permutation(MatrixTuple::from_exact({a1, a2}));
  REQUIRE(form);
  CHECK(form->standard_basis);
  // A_1 e_1 = e_2, A_1 e_2 = 2 e_3, A_1 e_3 = 2 e_1.
  CHECK(form->permutation[0] == std::vector<int>{1, 2, 0});
  REQUIRE(form->scalars_exact);
  CHECK((*form->scalars_exact)[0] == std::vector<Rational>{1, 2, 2});
  CHECK(form->permutation[1] == std::vector<int>{2, 0, 1});
}

TEST_CASE("generalized permutation after a change of basis") {
  Rng rng(31);
  for (int t = 0; t < 5; ++t) {
    MatrixQ x = random_rational(rng, 3, 4, 3);
    auto raw = cyclic_pair(1, 1, 2).exact();
    raw.push_back(q({{3, 0, 0}, {0, -1, 0}, {0, 0, 2}}));
    auto tuple = MatrixTuple::from_exact(conjugate(raw, x));
    auto form = detect_generalized_permutation(tuple);
    REQUIRE(form);
    CHECK_FALSE(form->standard_basis);
    REQUIRE(form->basis_exact);
    MatrixQ xi = inverse(*form->basis_exact);
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      MatrixQ c = xi * tuple.exact()[i] * *form->basis_exact;
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t r = 0; r < 3; ++r) {
          Rational expect = r == static_cast<std::size_t>(form->permutation[i][j]) ? (*form->scalars_exact)[i][j] : 0;
          CHECK(c(r, j) == expect);
        }
    }
  }
  // Float input.
  MatrixD x = random_invertible(rng, 3);
  std::vector<MatrixD> gens;
  auto base = cyclic_pair(1, 2, 3);
  for (const auto& m : base.exact()) gens.push_back(x * to_double(m) * inverse(x));
  auto form = detect_generalized_permutation(MatrixTuple::from_float(gens));
  REQUIRE(form);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    MatrixD c = inverse(form->basis) * gens[i] * form->basis;
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::fabs(c(form->permutation[i][j], j) - form->scalars[i][j]) < 1e-9 * max_abs(c));
  }
}

TEST_CASE("generic rotations have no permutation form") {
  auto t = MatrixTuple::from_float({rotation2(M_PI / 5), rotation2(1.0)});
  CHECK_FALSE(detect_generalized_permutation(t));
  Rng rng(9);
  CHECK_FALSE(detect_generalized_permutation(MatrixTuple::from_float({random_invertible(rng, 3), random_invertible(rng, 3)})));
}

TEST_CASE("svf of permutation matrices is the max-entry formula") {
  Rng rng(41);
  for (int t = 0; t < 200; ++t) {
    const int d = 2 + t % 3;
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MatrixD a(d, d);
    std::vector<double> mod;
    for (int j = 0; j < d; ++j) {
      double v = uniform(rng, 0.1, 3.0) * (uniform(rng, 0, 1) < 0.5 ? -1 : 1);
      a(perm[j], j) = v;
      mod.push_back(std::fabs(v));
    }
    auto form = detect_generalized_permutation(MatrixTuple::from_float({a}));
    REQUIRE(form);
    double s = uniform(rng, 0.0, d);
    const int k = static_cast<int>(std::floor(s));
    // max over S of size k and i outside S of prod_S |a| |a_i|^{s-k}
    double best = 0.0;
    for (int mask = 0; mask < (1 << d); ++mask) {
      if (__builtin_popcount(mask) != k) continue;
      double p = 1.0;
      for (int j = 0; j < d; ++j)
        if (mask >> j & 1) p *= std::fabs(form->scalars[0][j]);
      if (k == d) {
        best = std::max(best, p);
        continue;
      }
      for (int i = 0; i < d; ++i)
        if (!(mask >> i & 1)) best = std::max(best, p * std::pow(std::fabs(form->scalars[0][i]), s - k));
    }
    CHECK(rel_diff(svf(a, s), best) < 1e-12);
  }
}

TEST_CASE("quasimultiplicativity search") {
  SUBCASE("similitudes are exactly multiplicative") {
    auto t = MatrixTuple::from_float({rotation2(0.3) * 0.5, rotation2(1.1) * 0.4});
    auto rep = quasimult_search(t, 0.5, {.K_max = 2, .n_max = 5});
    CHECK(rep.c <= 1 + 1e-9);
    CHECK(rep.K == 0);
    CHECK(rep.found);
  }
  SUBCASE("disjoint axes degrade") {
    auto t = MatrixTuple::from_exact({q({{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}), q({{1, 0, 0}, {0, 2, 0}, {0, 0, 1}}),
                                      q({{1, 0, 0}, {0, 1, 0}, {0, 0, 2}})});
    auto rep = quasimult_search(t, 1.5, {.K_max = 2, .n_max = 6});
    CHECK_FALSE(rep.found);
    for (std::size_t n = 1; n < rep.c_by_length.size(); ++n) CHECK(rep.c_by_length[n] >= rep.c_by_length[n - 1]);
    // Without bridges the pair 1^n, 2^n alone loses 2^{n/2}.
    auto bare = quasimult_search(t, 1.5, {.K_max = 0, .n_max = 6});
    CHECK(bare.c >= 8.0 * (1 - 1e-12));
    CHECK_FALSE(bare.found);
  }
  SUBCASE("cyclic pair gives a finite constant") {
    auto rep = quasimult_search(cyclic_pair(1, 1, 2), 1.5, {.K_max = 2, .n_max = 6});
    CHECK(std::isfinite(rep.c));
    CHECK(rep.c >= 1.0);
  }
  SUBCASE("well conditioned generic tuple stabilises") {
    Rng rng(1);
    MatrixD shape{{1, 0, 0}, {0, 0.7, 0}, {0, 0, 0.5}};
    auto t = MatrixTuple::from_float({random_orthogonal(rng, 3) * shape, random_orthogonal(rng, 3) * shape});
    auto rep = quasimult_search(t, 1.5, {.K_max = 1, .n_max = 6});
    CHECK(rep.found);
    auto threaded = quasimult_search(t, 1.5, {.K_max = 1, .n_max = 6, .threads = 3});
    CHECK(threaded.c == rep.c);
    CHECK(threaded.c_by_length == rep.c_by_length);
    CHECK(threaded.worst_i == rep.worst_i);
  }
  SUBCASE("sampling is reproducible") {
    Rng rng(8);
    auto t = MatrixTuple::from_float({random_invertible(rng, 3, 0.2), random_invertible(rng, 3, 0.2)});
    auto a = quasimult_search(t, 1.5, {.K_max = 1, .n_max = 6, .pair_budget = 1000, .seed = 4});
    auto b = quasimult_search(t, 1.5, {.K_max = 1, .n_max = 6, .pair_budget = 1000, .seed = 4});
    CHECK(a.sampled);
    CHECK(a.pairs_tested == 1000);
    CHECK(a.c == b.c);
  }
  CHECK_THROWS_AS(quasimult_search(cyclic_pair(1, 1, 2), 1.0), DomainError);
}

TEST_CASE("equal modulus probe") {
  Rng rng(2);
  auto iso = MatrixTuple::from_float({random_orthogonal(rng, 3), random_orthogonal(rng, 3)});
  CHECK(equal_modulus_probe(iso, 5).holds);
  auto diag = MatrixTuple::from_exact({q({{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}), q({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})});
  auto rep = equal_modulus_probe(diag, 1);
  CHECK_FALSE(rep.holds);
  CHECK(rep.worst_word == Word{0});
  auto scaled = MatrixTuple::from_float({rotation2(0.4) * 3.0, rotation2(2.0) * 0.1, rotation2(-1.0) * 0.7});
  CHECK(equal_modulus_probe(scaled, 6).holds);
}
