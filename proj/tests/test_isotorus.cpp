#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "fingap/errors.hpp"
#include "fingap/isotorus.hpp"
#include "fingap/serialize.hpp"
#include "oracles.hpp"

using namespace fingap;
using cplx = std::complex<double>;

namespace {

const double s5 = std::sqrt(5.0);

FiniteGapSet period_two() { return FiniteGapSet({{-s5, -1.0}, {1.0, s5}}); }

FiniteGapSet random_set(std::mt19937_64& rng, std::size_t gaps) {
  std::uniform_real_distribution<double> u(0.3, 1.2);
  std::vector<Band> bands;
  double x = -2.0;
  for (std::size_t j = 0; j <= gaps; ++j) {
    const double lo = x;
    x += u(rng);
    bands.push_back({lo, x});
    x += 0.5 * u(rng);
  }
  return FiniteGapSet(bands);
}

std::vector<double> random_circle(std::mt19937_64& rng, std::size_t gaps) {
  std::uniform_real_distribution<double> u(0.02, 1.98);
  std::vector<double> t(gaps);
  for (auto& x : t) {
    x = u(rng);
    if (std::abs(x - 1.0) < 0.02) x = 0.5;
  }
  return t;
}

}  // namespace

TEST_CASE("circle coordinates and validation") {
  const auto e = period_two();
  const double t[] = {0.25};
  const auto dd = DirichletData::from_circle(e, t);
  CHECK(dd[0].sheet == 1);
  CHECK(dd[0].gamma > -1.0);
  CHECK(dd[0].gamma < 1.0);
  CHECK(dd.to_circle(e)[0] == doctest::Approx(0.25));
  const double t2[] = {1.75};
  CHECK(DirichletData::from_circle(e, t2)[0].sheet == -1);
  CHECK(DirichletData::from_circle(e, t2).to_circle(e)[0] == doctest::Approx(1.75));

  CHECK_THROWS_AS(DirichletData({{2.0, 1}}).validate(e), InvalidInput);
  CHECK_THROWS_AS(DirichletData({{0.0, 0}}).validate(e), InvalidInput);
  CHECK_THROWS_AS(DirichletData().validate(e), InvalidInput);
  CHECK(DirichletData({{1.0, 1}}).at_edge(e, 0));

  const auto back = dirichlet_from_json(to_json(dd));
  CHECK(back[0].gamma == dd[0].gamma);
  CHECK(back[0].sheet == dd[0].sheet);
}

TEST_CASE("free case: the minimal Herglotz function is the free m-function") {
  const FiniteGapSet e({{-2, 2}});
  const auto mh = minimal_herglotz(e, DirichletData());
  for (cplx z : {cplx(3.0, 0.0), cplx(0.2, 0.5), cplx(-7.0, 1.0)}) CHECK(std::abs(mh(z) - oracle::m_free(z)) < 1e-13);
  const auto mu = torus_measure(mh);
  CHECK(mu.density(0.5) == doctest::Approx(std::sqrt(4.0 - 0.25) / (2 * std::numbers::pi)).epsilon(1e-12));
  const auto grid = band_interior_grid(e, 200);
  CHECK(reflectionless_residual(mh, grid) < 1e-10);
  const auto T = torus_coefficients(e, DirichletData(), 30);
  for (std::size_t n = 0; n < 30; ++n) {
    CHECK(std::abs(T.a[n] - 1.0) < 1e-12);
    CHECK(std::abs(T.b[n]) < 1e-12);
  }
}

TEST_CASE("symmetric two-band torus point is two-periodic") {
  const auto e = period_two();
  const DirichletData dd({{0.0, -1}});
  const auto mh = minimal_herglotz(e, dd);
  CHECK(mh.pole_weights()[0] == 0.0);
  const auto mu = torus_measure(mh);
  CHECK(mu.atoms().empty());
  CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-10));
  for (double x : {1.2, 1.7, 2.1}) CHECK(mu.density(x) == doctest::Approx(mu.density(-x)).epsilon(1e-12));

  const auto T = torus_coefficients(e, dd, 100);
  const double big = (s5 + 1) / 2, small = (s5 - 1) / 2;
  const bool starts_big = std::abs(T.a[0] - big) < 1e-6;
  for (std::size_t n = 0; n < 100; ++n) {
    const double want = ((n % 2 == 0) == starts_big) ? big : small;
    CHECK(std::abs(T.a[n] - want) < 1e-6);
    CHECK(std::abs(T.b[n]) < 1e-6);
  }
  CHECK(reflectionless_residual(mh, band_interior_grid(e, 200, 1e-6, dd.points())) < 1e-8);

  // control: in a gap G_00 is real and the residual test must see that
  CHECK(std::abs(reflectionless_g00(mh, 0.5).real()) > 1e-3);
}

TEST_CASE("minimal Herglotz invariants on random data") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const auto e = random_set(rng, 1 + trial % 3);
    const auto dd = DirichletData::from_circle(e, random_circle(rng, e.gap_count()));
    const auto mh = minimal_herglotz(e, dd);
    const cplx big(0.0, 1e5);
    CHECK(std::abs(big * mh(big) + 1.0) < 1e-4);
    // next order: z (z m + 1) -> -b_1
    CHECK(std::abs(big * (big * mh(big) + 1.0) + shift_step(mh).b) < 1e-3);
    std::uniform_real_distribution<double> re(-4.0, 4.0), lg(-5.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      const cplx z(re(rng), std::pow(10.0, lg(rng)));
      CHECK(mh(z).imag() > 0.0);
    }
    for (std::size_t j = 0; j < e.gap_count(); ++j) {
      const bool interior = e.gap(j).contains_interior(dd[j].gamma);
      CHECK((mh.pole_weights()[j] > 0.0) == (interior && dd[j].sheet == 1));
    }
    const auto mu = torus_measure(mh);
    CHECK(std::abs(mu.total_mass() - 1.0) < 1e-8);
    CHECK(reflectionless_residual(mh, band_interior_grid(e, 100, 1e-6, dd.points())) < 1e-8);
  }
}

TEST_CASE("all-sheet-minus data carry no atoms") {
  const FiniteGapSet e({{-2, -1}, {-0.5, 0.5}, {1, 2}});
  const DirichletData dd({{-0.7, -1}, {0.8, -1}});
  const auto mu = torus_measure(minimal_herglotz(e, dd));
  CHECK(mu.atoms().empty());
  CHECK(std::abs(mu.continuous_mass() - 1.0) < 1e-8);
}

TEST_CASE("edge data") {
  const auto e = period_two();
  const DirichletData dd({{1.0, 1}});
  const auto mh = minimal_herglotz(e, dd);
  CHECK(mh.pole_weights()[0] == 0.0);
  const auto T = torus_coefficients(e, dd, 20);
  for (double a : T.a) CHECK(a > 0.0);
  CHECK(std::abs(torus_measure(mh).total_mass() - 1.0) < 1e-8);
}

TEST_CASE("shift flow agrees with stripping the torus measure") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 4; ++trial) {
    const auto e = random_set(rng, 1 + trial % 2);
    const auto dd = DirichletData::from_circle(e, random_circle(rng, e.gap_count()));
    const auto flow = torus_coefficients(e, dd, 60);
    const auto strip = strip_coefficients(torus_measure(minimal_herglotz(e, dd)), 60);
    for (std::size_t n = 0; n < 60; ++n) {
      CHECK(std::abs(flow.a[n] - strip.params.a(n + 1)) < 1e-8);
      CHECK(std::abs(flow.b[n] - strip.params.b(n + 1)) < 1e-8);
    }
    const auto step = shift_step(minimal_herglotz(e, dd));
    CHECK(step.a == doctest::Approx(flow.a[0]).epsilon(1e-12));
    CHECK(step.b == doctest::Approx(flow.b[0]).epsilon(1e-12));
  }
}

TEST_CASE("torus_jacobi extends on demand") {
  const auto e = period_two();
  const auto P = torus_jacobi(e, DirichletData({{0.0, -1}}), 10);
  CHECK(P.params().head_size() == 10);
  CHECK(std::abs(P.params().a(57) - P.params().a(59)) < 1e-8);
  CHECK(std::abs(P.params().a(57) - P.params().a(58)) > 0.5);
  CHECK(P.measure().total_mass() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("the d_m metric") {
  const auto F = JacobiParams::free();
  CHECK(d_m(F, F, 1).value == 0.0);

  const double eps = 1e-3;
  const JacobiParams A({}, {}, PeriodicTail{{1.0 + eps}, {0.0}});
  CHECK(d_m(F, A, 1).value == doctest::Approx(eps / (1.0 - std::exp(-1.0))).epsilon(1e-10));
  CHECK(d_m(F, A, 7).value == doctest::Approx(1.58198 * eps).epsilon(1e-5));

  // only indices >= m are read
  const JacobiParams low({1.0, 1.0, 1.5}, {0.4, 0.0, 0.0});
  CHECK(d_m(low, F, 4).value == 0.0);
  CHECK(d_m(low, F, 3).value > 0.4);

  // decreasing in m for monotone differences
  std::vector<double> b(60);
  for (std::size_t n = 0; n < b.size(); ++n) b[n] = 1.0 / (n + 1.0);
  const JacobiParams D(std::vector<double>(60, 1.0), b);
  double prev = d_m(D, F, 1).value;
  for (std::size_t m = 2; m < 70; ++m) {
    const double v = d_m(D, F, m).value;
    CHECK(v <= prev);
    prev = v;
  }

  // the shifted form reads the second sequence from its own index
  const JacobiParams P({}, {}, PeriodicTail{{0.5, 2.0}, {0.0, 0.0}});
  CHECK(d_m_shifted(P, 2, P, 4).value == 0.0);
  CHECK(d_m_shifted(P, 1, P, 2).value > 1.0);

  CHECK(metric_terms(1.0) >= 27);
  CHECK(metric_terms(100.0) > metric_terms(1.0));
}

TEST_CASE("distance to the torus") {
  const auto e = period_two();
  const auto P = torus_jacobi(e, DirichletData::from_circle(e, std::vector<double>{0.3}), 200);
  const auto d = dist_to_torus(P.params(), e, 1);
  CHECK(d.value < 1e-4);
  CHECK(d.argmin_circle[0] == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(d.grid_positions == 16);

  // perturbation below m is invisible
  std::vector<double> a = P.params().a_range(200), b = P.params().b_range(200);
  b[0] += 0.7;
  a[2] *= 1.3;
  const JacobiParams Q(a, b);
  CHECK(dist_to_torus(Q, e, 4).value < 1e-4);
  CHECK(dist_to_torus(Q, e, 1).value > 0.1);

  // the free matrix is far from every two-band torus point
  for (std::size_t m : {1u, 10u, 50u}) CHECK(dist_to_torus(JacobiParams::free(), e, m).value > 0.1);
}
