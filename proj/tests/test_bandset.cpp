#include "doctest.h"

#include <cmath>
#include <future>
#include <numbers>
#include <random>

#include "fingap/bandset.hpp"
#include "fingap/errors.hpp"
#include "oracles.hpp"

using namespace fingap;
using std::numbers::pi;

namespace {

std::vector<oracle::Interval> intervals(const FiniteGapSet& e) {
  std::vector<oracle::Interval> out;
  for (const Band& b : e.bands()) out.emplace_back(b.lo, b.hi);
  return out;
}

FiniteGapSet random_set(std::mt19937_64& rng, std::size_t bands) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> ends;
  double x = -2.0;
  for (std::size_t j = 0; j < 2 * bands; ++j) {
    ends.push_back(x);
    x += u(rng);
  }
  return make_band_set(ends);
}

// int_band w dx with the cosine substitution, Gauss-Legendre in theta
double band_mass(const EquilibriumData& eq, const Band& b) {
  std::vector<double> x, w;
  oracle::gauss_legendre(200, x, w);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = 0.5 * pi * (x[i] + 1.0);
    s += 0.5 * pi * w[i] * eq.density(b.mid() + b.half_width() * std::cos(t)) * b.half_width() * std::sin(t);
  }
  return s;
}

}  // namespace

TEST_CASE("make_band_set orders and validates endpoints") {
  const double one[] = {-2, 2};
  CHECK(make_band_set(one).gap_count() == 0);
  const double two[] = {-2, -1, 1, 2};
  const auto e = make_band_set(two);
  CHECK(e.gap_count() == 1);
  CHECK(e.band(0).lo == -2.0);
  CHECK(e.band(1).hi == 2.0);

  const double touching[] = {-2, -1, -1, 2};
  CHECK_THROWS_AS(make_band_set(touching), InvalidInput);
  const double zero_len[] = {-2, -2, 1, 2};
  CHECK_THROWS_AS(make_band_set(zero_len), InvalidInput);
  const double odd[] = {-2, -1, 1};
  CHECK_THROWS_AS(make_band_set(odd), InvalidInput);
  const double nonfinite[] = {-2, NAN};
  CHECK_THROWS_AS(make_band_set(nonfinite), InvalidInput);
  const double overlap[] = {-2, 1, 0, 2};
  CHECK_THROWS_AS(make_band_set(overlap), InvalidInput);
}

TEST_CASE("R is negative on bands and positive on gaps and outside") {
  std::mt19937_64 rng(7);
  for (std::size_t nb = 1; nb <= 4; ++nb) {
    const auto e = random_set(rng, nb);
    for (const Band& b : e.bands()) {
      for (int k = 1; k < 20; ++k) CHECK(e.R(b.lo + b.length() * k / 20.0) < 0.0);
    }
    for (std::size_t j = 0; j < e.gap_count(); ++j) {
      const Band g = e.gap(j);
      for (int k = 1; k < 20; ++k) CHECK(e.R(g.lo + g.length() * k / 20.0) > 0.0);
    }
    CHECK(e.R(e.lower() - 0.5) > 0.0);
    CHECK(e.R(e.upper() + 0.5) > 0.0);
  }
}

TEST_CASE("sqrt_R is a square root of R with the documented boundary signs") {
  const FiniteGapSet e({{-2, -1}, {0, 0.5}, {1, 2}});
  const std::complex<double> z(0.3, 0.7);
  const auto s = e.sqrt_R(z);
  std::complex<double> R = 1.0;
  for (double c : e.endpoints()) R *= z - c;
  CHECK(std::abs(s * s - R) < 1e-12);
  CHECK(e.sqrt_R(3.0).real() > 0.0);
  for (std::size_t j = 0; j < e.band_count(); ++j) {
    const double x = e.band(j).mid();
    const auto v = e.sqrt_R({x, 0.0});
    CHECK(std::abs(v.real()) < 1e-12);
    CHECK(v.imag() == doctest::Approx(e.band_branch_sign(j) * std::sqrt(-e.R(x))).epsilon(1e-12));
  }
  for (std::size_t j = 0; j < e.gap_count(); ++j) {
    const double x = e.gap(j).mid();
    CHECK(e.sqrt_R({x, 0.0}).real() == doctest::Approx(e.gap_branch_sign(j) * std::sqrt(e.R(x))).epsilon(1e-12));
  }
}

TEST_CASE("distances to the set and to its complement") {
  const FiniteGapSet free_set({{-2, 2}});
  CHECK(dist_to_set(free_set, 3.0) == doctest::Approx(1.0));
  CHECK(dist_to_complement(free_set, 0.0) == doctest::Approx(2.0));
  const FiniteGapSet two({{-2, -1}, {1, 2}});
  CHECK(dist_to_set(two, 0.0) == doctest::Approx(1.0));
  CHECK(dist_to_set(two, 1.5) == 0.0);
  CHECK(dist_to_complement(two, 1.25) == doctest::Approx(0.25));
}

TEST_CASE("Joukowski map and its inverse") {
  CHECK(std::abs(joukowski(0.5) - 2.5) < 1e-15);
  CHECK(std::abs(joukowski_inverse(2.0) - 1.0) < 1e-7);
  CHECK(std::abs(joukowski_inverse(2.5) - 0.5) < 1e-15);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  for (int i = 0; i < 200; ++i) {
    std::complex<double> z(u(rng), u(rng));
    if (std::abs(z) >= 0.99 || std::abs(z) < 0.05) continue;
    CHECK(std::abs(joukowski_inverse(joukowski(z)) - z) < 1e-12);
    const std::complex<double> x(4 * u(rng), 4 * u(rng));
    CHECK(std::abs(joukowski(joukowski_inverse(x)) - x) < 1e-12);
    CHECK(std::abs(joukowski_inverse(x)) <= 1.0 + 1e-15);
  }
}

TEST_CASE("rational_harmonic_period") {
  const double half[] = {0.5, 0.5};
  CHECK(rational_harmonic_period(half) == 2);
  const double one[] = {1.0};
  CHECK(rational_harmonic_period(one) == 1);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  const double golden[] = {1.0 - g, g};
  CHECK_FALSE(rational_harmonic_period(golden, 1e-6, 50).has_value());
  const double thirds[] = {1.0 / 3, 2.0 / 3};
  CHECK(rational_harmonic_period(thirds) == 3);
}

TEST_CASE("quadrature grid: positive weights, interior nodes, arcsine mass") {
  const FiniteGapSet e({{-2, 2}});
  const auto q = make_quadrature_grid(e, 64);
  REQUIRE(q.bands.size() == 1);
  double s = 0.0;
  for (std::size_t i = 0; i < q.bands[0].nodes.size(); ++i) {
    CHECK(q.bands[0].weights[i] > 0.0);
    CHECK(q.bands[0].nodes[i] > -2.0);
    CHECK(q.bands[0].nodes[i] < 2.0);
    s += q.bands[0].weights[i];
  }
  CHECK(s == doctest::Approx(pi).epsilon(1e-13));  // int dx / sqrt(4 - x^2)

  const FiniteGapSet two({{-2, -1}, {1, 2}});
  const auto q2 = make_quadrature_grid(two, 32);
  REQUIRE(q2.gaps.size() == 1);
  for (std::size_t i = 0; i < q2.gaps[0].nodes.size(); ++i) {
    CHECK(two.gap_branch_sign(0) * q2.gaps[0].weights[i] > 0.0);  // analytic branch
    CHECK(std::abs(q2.gaps[0].nodes[i]) < 1.0);
  }
}

TEST_CASE("equilibrium of a single interval") {
  const auto eq = solve_equilibrium(FiniteGapSet({{-2, 2}}));
  CHECK(eq.capacity() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(eq.density(0.0) == doctest::Approx(1.0 / (2 * pi)).epsilon(1e-10));
  CHECK(std::abs(eq.potential(0.0) - eq.robin_constant()) < 1e-10);
  CHECK(std::abs(eq.robin_constant()) < 1e-10);
  CHECK(eq.potential(1e6) == doctest::Approx(-std::log(1e6)).epsilon(1e-5 / std::log(1e6)));
  CHECK(eq.green(3.0) == doctest::Approx(oracle::green_single_band(3.0)).epsilon(1e-8));
  CHECK(eq.green(1e6) == doctest::Approx(std::log(1e6) - std::log(eq.capacity())).epsilon(1e-6));
  CHECK_THROWS_AS(eq.density(3.0), DomainError);

  const auto eq2 = solve_equilibrium(FiniteGapSet({{-1.0, 5.0}}));
  CHECK(eq2.capacity() == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("symmetric two-band set") {
  const auto eq = solve_equilibrium(FiniteGapSet({{-2, -1}, {1, 2}}));
  CHECK(eq.capacity() == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-8));
  CHECK(eq.harmonic_measures()[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(eq.gap_zeros()[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  for (double t : {1.1, 1.37, 1.8}) CHECK(eq.density(t) == doctest::Approx(eq.density(-t)).epsilon(1e-12));
  CHECK(eq.potential(0.0) < eq.robin_constant());
  CHECK(eq.green(0.0) > 0.0);
}

TEST_CASE("Frostman, mass and Green positivity on random sets") {
  std::mt19937_64 rng(11);
  for (std::size_t nb = 1; nb <= 4; ++nb) {
    const auto e = random_set(rng, nb);
    const auto eq = solve_equilibrium(e);
    double dev = 0.0, mass = 0.0;
    for (const Band& b : e.bands()) {
      for (int k = 0; k < 250; ++k) {
        const double x = b.lo + b.length() * (k + 0.5) / 250.0;
        dev = std::max(dev, std::abs(eq.potential(x) - eq.robin_constant()));
        CHECK(eq.green(x) < 1e-8);
      }
      mass += band_mass(eq, b);
    }
    CHECK(dev < 1e-6);
    CHECK(std::abs(mass - 1.0) < 1e-8);
    double om = 0.0;
    for (double w : eq.harmonic_measures()) {
      CHECK(w > 0.0);
      om += w;
    }
    CHECK(om == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eq.capacity() == doctest::Approx(std::exp(-eq.robin_constant())).epsilon(1e-14));
    for (std::size_t j = 0; j < e.gap_count(); ++j) {
      CHECK(e.gap(j).contains_interior(eq.gap_zeros()[j]));
      CHECK(eq.green(e.gap(j).mid()) > 0.0);
    }
    for (double x : {e.lower() - 0.1, e.upper() + 3.0}) CHECK(eq.green(x) > 0.0);
    CHECK(eq.green({e.band(0).mid(), 0.5}) > 0.0);
  }
}

TEST_CASE("affine covariance") {
  const FiniteGapSet e({{-2, -0.5}, {0.5, 1}, {1.5, 2}});
  const auto eq = solve_equilibrium(e);
  const double s = 2.5, t = -0.7;
  const auto eq2 = solve_equilibrium(e.affine(s, t));
  CHECK(eq2.capacity() == doctest::Approx(s * eq.capacity()).epsilon(1e-8));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(eq2.harmonic_measures()[j] - eq.harmonic_measures()[j]) < 1e-8);
  }
  for (std::size_t j = 0; j < 2; ++j) CHECK(eq2.gap_zeros()[j] == doctest::Approx(s * eq.gap_zeros()[j] + t));
}

TEST_CASE("energy-minimization oracle agrees with the closed-form density") {
  std::mt19937_64 rng(5);
  for (std::size_t nb : {2u, 3u}) {
    const auto e = random_set(rng, nb);
    const auto eq = solve_equilibrium(e);
    const auto em = oracle::minimize_energy(intervals(e));
    for (std::size_t j = 0; j < nb; ++j) CHECK(std::abs(em.band_mass[j] - eq.harmonic_measures()[j]) < 1e-3);
    CHECK(std::abs(em.energy - eq.robin_constant()) < 1e-2);
    const auto zeros = oracle::gap_zeros_from_density(intervals(e), em);
    for (std::size_t j = 0; j + 1 < nb; ++j) CHECK(std::abs(zeros[j] - eq.gap_zeros()[j]) < 1e-2);
    for (const Band& b : e.bands()) {
      const double x = b.lo + 0.37 * b.length();
      CHECK(em.density(x) == doctest::Approx(eq.density(x)).epsilon(2e-2));
    }
  }

  // the three-band example from the documentation
  const FiniteGapSet e3({{-2, -0.5}, {0.5, 1}, {1.5, 2}});
  const auto eq3 = solve_equilibrium(e3);
  const auto em3 = oracle::minimize_energy(intervals(e3));
  const auto z3 = oracle::gap_zeros_from_density(intervals(e3), em3);
  CHECK(std::abs(z3[0] - eq3.gap_zeros()[0]) < 1e-2);
  CHECK(std::abs(z3[1] - eq3.gap_zeros()[1]) < 1e-2);
}

TEST_CASE("EquilibriumData is safe to evaluate concurrently") {
  const auto eq = solve_equilibrium(FiniteGapSet({{-2, -1}, {0, 0.5}, {1, 2}}));
  std::vector<std::future<double>> fs;
  for (int i = 0; i < 8; ++i) {
    fs.push_back(std::async(std::launch::async, [&eq, i] { return eq.green({0.7 + 0.01 * i, 0.0}); }));
  }
  for (int i = 0; i < 8; ++i) CHECK(fs[i].get() == eq.green({0.7 + 0.01 * i, 0.0}));
}
