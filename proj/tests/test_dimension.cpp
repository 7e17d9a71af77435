#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "svfkit/dimension.hpp"
#include "svfkit/equilibrium.hpp"
#include "svfkit/multilinear.hpp"

#include <sstream>

using namespace svfkit;
using namespace svftest;

namespace {

MatrixTuple max_states_scaled() {
  std::vector<MatrixQ> m;
  for (int i = 0; i < 3; ++i) {
    MatrixQ a = MatrixQ::identity(3);
    a(i, i) = 2;
    m.push_back(a * Rational(1, 3));
  }
  return MatrixTuple::from_exact(m);
}

MatrixTuple similitudes(int copies) {
  MatrixQ third = MatrixQ::identity(3) * Rational(1, 3);
  return MatrixTuple::from_exact(std::vector<MatrixQ>(copies, third));
}

MeasureSpec uniform_bernoulli(std::size_t N) { return BernoulliSpec{std::vector<double>(N, 1.0 / N), std::nullopt}; }

// Last zero of a decreasing function on [a, b].
double bisect(const std::function<double(double)>& f, double a, double b) {
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b);
    (f(m) >= 0 ? a : b) = m;
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("closed-form exponents") {
  MatrixD half = MatrixD::identity(3) * 0.5;
  auto sp = lyapunov_exponents(MatrixTuple::from_float({half, half}), uniform_bernoulli(2));
  CHECK(sp.method == LyapunovMethod::ClosedForm);
  for (double l : sp.exponents) CHECK(l == doctest::Approx(-std::log(2.0)).epsilon(1e-15));

  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 2 + t % 3, N = 2 + t % 2;
    std::vector<MatrixD> m;
    for (std::size_t i = 0; i < N; ++i) {
      MatrixD a(d, d);
      for (std::size_t j = 0; j < d; ++j) a(j, j) = uniform(rng, 0.1, 0.9) * (uniform_int(rng, 0, 1) ? 1 : -1);
      m.push_back(a);
    }
    std::vector<double> p(N);
    double total = 0.0;
    for (auto& x : p) total += (x = uniform(rng, 0.1, 1.0));
    for (auto& x : p) x /= total;
    auto spec = lyapunov_exponents(MatrixTuple::from_float(m), BernoulliSpec{p, std::nullopt});
    std::vector<double> axis(d, 0.0);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < N; ++i) axis[j] += p[i] * std::log(std::fabs(m[i](j, j)));
    std::sort(axis.rbegin(), axis.rend());
    for (std::size_t j = 0; j < d; ++j) CHECK(std::fabs(spec.exponents[j] - axis[j]) < 1e-14);
    CHECK(std::is_sorted(spec.exponents.rbegin(), spec.exponents.rend()));
  }
}

TEST_CASE("deterministic and Monte Carlo agree at matched length") {
  Rng rng(7);
  auto tuple = MatrixTuple::from_float({random_invertible(rng, 2), random_invertible(rng, 2)});
  auto mu = uniform_bernoulli(2);
  LyapunovOptions det;
  det.method = LyapunovMethod::Deterministic;
  det.n = 10;
  auto a = lyapunov_exponents(tuple, mu, det);
  CHECK(a.partial_sums_upper);
  LyapunovOptions mc;
  mc.method = LyapunovMethod::MonteCarlo;
  mc.samples = 10000;
  mc.length = 10;
  mc.seed = 99;
  auto b = lyapunov_exponents(tuple, mu, mc);
  for (std::size_t k = 0; k < 2; ++k) CHECK(std::fabs(a.exponents[k] - b.exponents[k]) <= b.half_widths[k]);

  // Longer trajectories sit below the length-10 values up to noise.
  mc.length = 200;
  auto c = lyapunov_exponents(tuple, mu, mc);
  CHECK(c.partial_sums[1] <= a.partial_sums[1] + c.partial_half_widths[1]);

  // Sum of exponents is the mean log |det|.
  double expected = 0.5 * (std::log(std::fabs(determinant(tuple[0]))) + std::log(std::fabs(determinant(tuple[1]))));
  CHECK(std::fabs(a.partial_sums[2] - expected) < 1e-12);
  CHECK(std::fabs(c.partial_sums[2] - expected) <= c.partial_half_widths[2] + 1e-12);
}

TEST_CASE("Monte Carlo is reproducible and thread independent") {
  Rng rng(8);
  auto tuple = MatrixTuple::from_float({random_invertible(rng, 3), random_invertible(rng, 3), random_invertible(rng, 3)});
  MeasureSpec mu = BernoulliSpec{{0.2, 0.3, 0.5}, std::nullopt};
  LyapunovOptions mc;
  mc.method = LyapunovMethod::MonteCarlo;
  mc.samples = 500;
  mc.length = 50;
  mc.seed = 3;
  auto a = lyapunov_exponents(tuple, mu, mc);
  mc.threads = 4;
  auto b = lyapunov_exponents(tuple, mu, mc);
  CHECK(a.exponents == b.exponents);
  CHECK(a.half_widths == b.half_widths);
  mc.seed = 4;
  auto c = lyapunov_exponents(tuple, mu, mc);
  CHECK(a.exponents != c.exponents);
  mc.seed.reset();
  CHECK_THROWS_AS(lyapunov_exponents(tuple, mu, mc), InputError);
}

TEST_CASE("deterministic partial sums are subadditive in n") {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    auto tuple = MatrixTuple::from_float({random_invertible(rng, 3), random_invertible(rng, 3)});
    LyapunovOptions o;
    o.method = LyapunovMethod::Deterministic;
    o.n = 4;
    auto a = lyapunov_exponents(tuple, uniform_bernoulli(2), o);
    o.n = 8;
    auto b = lyapunov_exponents(tuple, uniform_bernoulli(2), o);
    for (std::size_t k = 1; k <= 3; ++k) {
      CHECK(b.partial_sums[k] <= a.partial_sums[k] + 1e-12 * std::fabs(a.partial_sums[k]));
    }
  }
}

TEST_CASE("variational inequality at finite n") {
  Rng rng(10);
  for (int t = 0; t < 10; ++t) {
    auto tuple = MatrixTuple::from_float({random_invertible(rng, 3), random_invertible(rng, 3)});
    MeasureSpec mu = BernoulliSpec{{0.3, 0.7}, std::nullopt};
    const std::size_t n = 6;
    LyapunovOptions o;
    o.method = LyapunovMethod::Deterministic;
    o.n = n;
    auto sp = lyapunov_exponents(tuple, mu, o);
    double h = block_entropy(mu, n).value;
    for (double s = 0.0; s <= 3.0; s += 0.25) {
      double z = partition_sum(tuple, Potential::svf(s), n) / static_cast<double>(n);
      CHECK(h + svf_exponent(sp, s) <= z + 1e-12);
    }
  }
}

TEST_CASE("Lyapunov dimension") {
  auto d4 = lyapunov_dimension(similitudes(4), uniform_bernoulli(4));
  CHECK(std::fabs(d4.lo - std::log(4.0) / std::log(3.0)) < 1e-9);
  CHECK(std::fabs(d4.hi - std::log(4.0) / std::log(3.0)) < 1e-9);
  CHECK(d4.entropy_exact);

  auto zero = lyapunov_dimension(similitudes(3), BernoulliSpec{{1.0, 0.0, 0.0}, std::nullopt});
  CHECK(zero.lo == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zero.hi < 1e-9);

  // The equilibrium state at the affinity root has that root as its
  // Lyapunov dimension.
  auto tuple = max_states_scaled();
  auto root = bisect([](double s) { return std::log(std::pow(2.0, s - 1.0) + 3.0) - s * std::log(3.0); }, 1.0, 2.0);
  auto report = diagonal_equilibria(tuple, root);
  REQUIRE(report.states.size() == 6);
  for (const auto& st : report.states) {
    auto ld = lyapunov_dimension(tuple, st.spec);
    CHECK(ld.lo <= root + 1e-9);
    CHECK(ld.hi >= root - 1e-9);
  }
}

TEST_CASE("dimension drop for similitudes") {
  auto r = dimension_drop(similitudes(4), 3);
  CHECK(r.full.exact);
  CHECK(r.reduced.exact);
  CHECK(std::fabs(r.full.lo - std::log(4.0) / std::log(3.0)) < 1e-9);
  CHECK(std::fabs(r.reduced.hi - 1.0) < 1e-9);
  CHECK(r.verdict == DropVerdict::StrictDrop);
  CHECK(r.gap > 0.2);
  CHECK_THROWS_AS(dimension_drop(similitudes(2), 0), InputError);
  std::ostringstream csv;
  write_gap_csv(csv, r.gaps);
  CHECK(csv.str().rfind("s,gap_lower,gap_upper\n", 0) == 0);
  for (const auto& g : r.gaps) CHECK(g.gap_lower == doctest::Approx(std::log(4.0 / 3.0)));
}

TEST_CASE("dimension drop for the scaled maximal multiplicity tuple") {
  auto r = dimension_drop(max_states_scaled(), 2);
  const double full = bisect([](double s) { return std::log(std::pow(2.0, s - 1.0) + 3.0) - s * std::log(3.0); }, 1.0, 2.0);
  CHECK(r.full.exact);
  CHECK(r.reduced.exact);
  CHECK(r.full.route == "diagonal");
  CHECK(std::fabs(r.full.lo - full) < 1e-9);
  CHECK(std::fabs(r.reduced.lo - 1.0) < 1e-9);
  CHECK(r.verdict == DropVerdict::StrictDrop);
  CHECK(r.gap > 1e-6);
  // Generic brackets contain the exact roots.
  CHECK(r.full.bound_lo <= r.full.lo + 1e-9);
  CHECK(r.full.bound_hi >= r.full.hi - 1e-9);
}

TEST_CASE("five-map planar example still drops at the pressure level") {
  MatrixQ a{{Rational(1, 3), 0}, {0, Rational(1, 5)}};
  MatrixQ b{{Rational(1, 2), 0}, {0, Rational(1, 4)}};
  auto tuple = MatrixTuple::from_exact({a, a, a, b, b});
  for (std::size_t i = 0; i < 5; ++i) {
    auto r = dimension_drop(tuple, i);
    CHECK(r.verdict == DropVerdict::StrictDrop);
    CHECK(r.full.hi > 1.0);
  }
}

TEST_CASE("overlapping generic intervals are inconclusive") {
  Rng rng(12);
  for (int t = 0; t < 5; ++t) {
    std::vector<MatrixD> m{with_norm(random_invertible(rng, 3), 0.6), with_norm(random_invertible(rng, 3), 0.6),
                           with_norm(random_invertible(rng, 3), 1e-3)};
    DropOptions o;
    o.affinity.n_max = 4;
    o.s_grid = {0.5, 1.5};
    auto r = dimension_drop(MatrixTuple::from_float(m), 2, o);
    CHECK_FALSE(r.full.exact);
    CHECK(r.verdict == DropVerdict::Inconclusive);
    CHECK(r.reduced.hi >= r.full.lo);
  }
}
