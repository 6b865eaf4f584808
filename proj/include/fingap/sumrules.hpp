#pragma once

// Perturbations of Jacobi matrices and the numerical experiments run on them:
// Lieb-Thirring sums, Szego integrals, a-products and b-sums, Szego ratio
// asymptotics, l^2 conditions, Cesaro decay of the distance to the torus.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fingap/bandset.hpp"
#include "fingap/isotorus.hpp"
#include "fingap/jacobi.hpp"
#include "fingap/measure.hpp"
#include "fingap/serialize.hpp"

namespace fingap {

// ---------------------------------------------------------------- perturbations

enum class PerturbTarget { A, B, Both };

/// delta_n = amplitude * n^{-rate}, rate > 1
struct L1Decay {
  double rate = 2.0;
  double amplitude = 1.0;
};
/// delta_n = amplitude * n^{-rate}, 1/2 < rate <= 1
struct L2NotL1Decay {
  double rate = 1.0;
  double amplitude = 1.0;
};
/// delta at one site only
struct SingleSite {
  std::size_t index = 1;
  double value = 0.0;
};
/// delta_n = amplitude * cos(2 pi frequency n + phase) / n^decay
struct Oscillatory {
  double frequency = 0.0;
  double amplitude = 1.0;
  double decay = 1.0;
  double phase = 0.0;
};
/// delta_n = amplitude * u_n * n^{-rate}, u_n uniform on [-1, 1] from a seeded
/// 64-bit Mersenne twister; for target Both the a and b draws interleave.
struct RandomDecay {
  std::uint64_t seed = 0;
  double amplitude = 1.0;
  double rate = 2.0;
};
/// Explicit delta_1..delta_k, zero afterwards.
struct Explicit {
  std::vector<double> values;
};

using PerturbationKind = std::variant<L1Decay, L2NotL1Decay, SingleSite, Oscillatory, RandomDecay, Explicit>;

struct PerturbationSpec {
  PerturbationKind kind = Explicit{};
  PerturbTarget target = PerturbTarget::B;

  /// Throws InvalidInput on parameters outside the kind's range.
  void validate() const;
};

/// delta_a and delta_b for n = 1..N.
CoefficientTable perturbation_sequences(const PerturbationSpec& spec, std::size_t N);

/// sum_{n > N} n^{-r} by Euler-Maclaurin (r > 1).
double power_tail(double r, std::size_t N);

struct PerturbedJacobi {
  JacobiParams params;        // base + delta on n <= N, base afterwards
  JacobiParams base;
  std::vector<double> delta_a, delta_b;
  std::size_t N = 0;
  double l1_head = 0.0;       // sum_{n<=N} |delta a_n| + |delta b_n|
  double l1_tail = 0.0;       // estimate (bound for Random) of the same sum over n > N; inf if not summable
  double l1_total() const { return l1_head + l1_tail; }
};

/// Throws InvalidInput when some a_n + delta a_n <= 0.
PerturbedJacobi apply_perturbation(const JacobiParams& base, const PerturbationSpec& spec, std::size_t N);

// ---------------------------------------------------------------- Lieb-Thirring

/// sum dist(x_n, e)^p
double lt_sum(std::span<const double> evs, const FiniteGapSet& e, double p);
/// sum over |x_n| > 2 of (x_n^2 - 4)^{1/2}
double lt_free_sum(std::span<const double> evs);
/// sum_j |(alpha_{j+1} - beta_j)/2|^{1/2}
double lt_c0(const FiniteGapSet& e);

/// Eigenvalues outside e that survive both the N/2 filter and comparison
/// with the N-1 truncation (the second check removes truncation artefacts
/// that happen to repeat under halving for periodic coefficients).
std::vector<double> stable_eigenvalues(const JacobiParams& J, const FiniteGapSet& e, std::size_t N,
                                       double tol = 1e-6);

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::size_t truncation = 0;
  std::vector<double> eigenvalues;
};

/// lhs = sum (x_n^2 - 4)^{1/2}, rhs = sum |b_n| + 4 sum |a_n - 1|; J must have a
/// free tail. holds means lhs <= rhs + 1e-6.
InequalityCheck lt_free_bound(const JacobiParams& J, std::size_t N = 2000);

/// Finite gap Lieb-Thirring data for a perturbation of a torus point:
/// lhs = sum dist(x_n, e)^{1/2}, c0, l1 and the implied constant
/// (lhs - c0) / l1 (0 when lhs <= c0).
struct LiebThirringRatio {
  double lhs = 0.0;
  double c0 = 0.0;
  double l1 = 0.0;
  double ratio = 0.0;
  std::vector<double> eigenvalues;
};
LiebThirringRatio lt_finite_gap(const PerturbedJacobi& pj, const FiniteGapSet& e, std::size_t N = 2000);

/// sum G_e(x_n)
double green_sum(std::span<const double> evs, const EquilibriumData& eq);

/// Two-sided comparison of G_e(x) with dist(x, e)^{1/2} over sample points:
/// min and max of the ratio.
struct Comparability {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t samples = 0;
};
Comparability green_vs_dist(const EquilibriumData& eq, std::span<const double> points);

// ---------------------------------------------------------------- Szego integrals

/// int_e dist(x, R \ e)^w log f(x) dx, w in {-1/2, +1/2}. Returns -inf when
/// f vanishes on a subinterval; throws InvalidInput when f < 0 somewhere.
double szego_integral(const SpectralMeasure& mu, double weight_exponent);
/// int_{-2}^{2} (4 - x^2)^w log f(x) dx for a measure on [-2, 2].
double szego_integral_zero_gap(const SpectralMeasure& mu, double weight_exponent);

// ---------------------------------------------------------------- series

enum class SeriesStatus { Converged, Divergent, NonCauchy, Inconclusive };
std::string to_string(SeriesStatus s);

/// Partial sums of a series with Cauchy-under-doubling diagnostics.
struct SeriesEstimate {
  double value = 0.0;          // extrapolated when that is trustworthy, else S_K
  double partial = 0.0;        // S_K
  double partial_half = 0.0;   // S_{K/2}
  double partial_quarter = 0.0;
  double tail = 0.0;           // |S_K - S_{K/2}|
  double extrapolation_change = 0.0;
  std::size_t terms = 0;
  SeriesStatus status = SeriesStatus::Inconclusive;
};

/// Divergent needs a certified minorant: terms of one sign in the last half
/// whose n|t_n| does not decay. Converged needs tail (or the change of the
/// extrapolated value) below tol.
SeriesEstimate series_estimate(std::span<const double> terms, double tol);

/// sum_{k<=n} log a_k
double log_a_product(const JacobiParams& J, std::size_t n);
/// a_1...a_n / C^n
double a_product_capacity(const JacobiParams& J, double capacity, std::size_t n);
/// min and max of a_1...a_n / C^n over 1 <= n <= N
struct ProductRange {
  double min = 0.0;
  double max = 0.0;
  double last = 0.0;
};
ProductRange a_product_range(const JacobiParams& J, double capacity, std::size_t N);
/// a_1...a_n / (at_1...at_n)
double a_product(const JacobiParams& J, const JacobiParams& Jt, std::size_t n);
/// series of log(a_n / at_n), so that exp(value) is the product limit
SeriesEstimate a_product_series(const JacobiParams& J, const JacobiParams& Jt, std::size_t K, double tol = 1e-3);
/// sum_{n<=K} (b_n - bt_n)
SeriesEstimate b_sum(const JacobiParams& J, const JacobiParams& Jt, std::size_t K, double tol = 1e-3);
/// b_sum doubling K from K0 until Converged or Divergent, or K reaches K_max.
SeriesEstimate b_sum_adaptive(const JacobiParams& J, const JacobiParams& Jt, double tol, std::size_t K0 = 1024,
                              std::size_t K_max = 1u << 20);
/// sum (a_n - at_n)^2 + (b_n - bt_n)^2
SeriesEstimate ks_l2(const JacobiParams& J, const JacobiParams& Jt, std::size_t K, double tol = 1e-3);

// ---------------------------------------------------------------- Szego ratio

/// p_n(z) / pt_n(z) in scaled arithmetic. Throws NumericalFailure if pt_n(z) = 0.
std::complex<double> szego_ratio(const JacobiParams& J, const JacobiParams& Jt, std::complex<double> z,
                                 std::size_t n);
/// p_n(z) / u(z)^n with u = (z + sqrt(z^2 - 4)) / 2, |u| > 1.
std::complex<double> szego_ratio_zero_gap(const JacobiParams& J, std::complex<double> z, std::size_t n);

/// Coefficient of 1/z in log(p_n / pt_n) near infinity by a discrete Cauchy
/// integral on |z| = radius; compare with -sum_{j<=n} (b_j - bt_j).
struct JostCheck {
  double coefficient = 0.0;
  double expected = 0.0;
  double radius = 0.0;
  std::size_t points = 0;
};
JostCheck jost_coefficient(const JacobiParams& J, const JacobiParams& Jt, std::size_t n, double radius = 1e3,
                           std::size_t points = 64);

// ---------------------------------------------------------------- oscillatory

struct OscillatoryOptions {
  std::vector<int> k;                 // frequency = k . omega when `frequency` is unset
  std::optional<double> frequency;
  double amplitude = 1.0;
  double decay = 1.0;                 // must exceed 1/2
  double phase = 0.0;
  PerturbTarget target = PerturbTarget::A;
  int test_k_max = 5;                 // test vectors with max |k_j| <= this
  std::size_t terms = 1u << 14;
  double tol = 1e-3;
};

struct OscillatoryCheck {
  std::vector<int> k;
  double frequency = 0.0;             // k . omega mod 1
  bool resonant = false;              // k . omega = +-theta mod 1
  double tail_a = 0.0, tail_b = 0.0;  // |S_K - S_{K/2}|
  double bound = 0.0;                 // summation by parts bound on |S_N| and on the tail past K
  double sup = 0.0;                   // sup_N |S_N^a| + |S_N^b|
  SeriesStatus status = SeriesStatus::Inconclusive;
};

struct OscillatoryReport {
  PerturbationSpec spec;
  double frequency = 0.0;
  std::vector<double> omega;
  std::vector<std::string> warnings;
  std::vector<OscillatoryCheck> checks;
  bool condition_b = false;           // every tested sum converged
  bool condition_c = false;           // every tested sup within its bound
  std::size_t terms = 0;
};

OscillatoryReport oscillatory_spec(const FiniteGapSet& e, const OscillatoryOptions& opts);

// ---------------------------------------------------------------- torus approach

/// Torus point closest to J on indices n_lo..n_hi in the sup of
/// |a_n - at_n| + |b_n - bt_n|, index aligned (no shift).
struct TorusFit {
  DirichletData dirichlet;
  std::vector<double> circle;
  double residual = 0.0;
  std::size_t evaluations = 0;
  JacobiParams params;                // torus coefficients 1..n_hi, free tail
};
TorusFit fit_torus_point(const JacobiParams& J, const FiniteGapSet& e, std::size_t n_lo, std::size_t n_hi,
                         std::size_t grid_positions = 16, double local_tol = 1e-9);

/// min over the coarse torus grid of sup_{n in [N/2, N]} (|a_n - at_n| + |b_n - bt_n|)
/// for each N in Ns (shift invariant, so the windows are compared against
/// torus points read from index 1).
std::vector<double> approach_to_torus(const JacobiParams& J, const FiniteGapSet& e, std::span<const std::size_t> Ns,
                                      std::size_t grid_positions = 16);

struct CesaroOptions {
  std::size_t grid_positions = 16;
  double local_tol = 1e-6;
};
struct CesaroResult {
  double value = 0.0;                 // (1/M) sum d_m^2
  std::vector<double> distances;      // d_1..d_M
  std::size_t k_max = 0;
};
/// (1/M) sum_{m=1}^{M} d_m(J, T_e)^2. For one band the torus is the single
/// point a = length/4, b = midpoint, and d_m is computed directly.
CesaroResult cesaro_distance(const JacobiParams& J, const FiniteGapSet& e, std::size_t M,
                             const CesaroOptions& opts = {});

// ---------------------------------------------------------------- experiments

struct ExperimentReport {
  std::string name;
  Json inputs = Json::object();
  Json results = Json::object();
  Json verdicts = Json::object();     // name -> "holds" | "fails" | "inconclusive" | ...
  bool invariant_violation = false;

  Json to_json() const;
};

enum class MeasureFamily { Equilibrium, EquilibriumDeadBand, SemicirclePlusAtom, Custom };

struct FamilyOptions {
  double atom_x = 3.0;
  double atom_weight = 0.1;
  std::optional<Band> dead;           // defaults to the middle fifth of band 0
};
SpectralMeasure family_measure(const FiniteGapSet& e, MeasureFamily family, const FamilyOptions& opts = {});

struct ThreeConditionOptions {
  std::size_t N = 400;                // coefficients stripped
  std::size_t truncation = 0;         // eigenvalue truncation, default 2N
  double tol = 1e-3;
  double product_bound = 1e3;         // R in R^{-1} <= a_1...a_n / C^n <= R
  std::size_t grid_positions = 16;
};

/// which_two: two of 'a', 'b', 'c'. Evaluates all three conditions and the
/// approach-to-torus diagnostics; never reports the theorem as violated.
ExperimentReport three_condition_experiment(const SpectralMeasure& mu, const std::string& which_two,
                                            const ThreeConditionOptions& opts = {});

/// Runs independent jobs concurrently; reports come back in job order.
std::vector<ExperimentReport> run_experiments(const std::vector<std::function<ExperimentReport()>>& jobs,
                                              std::size_t threads = 0);

}  // namespace fingap
