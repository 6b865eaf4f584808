#pragma once

// Points of the isospectral torus of a finite gap set, built from Dirichlet
// data through minimal Herglotz functions
//
//   m(z) = c (sqrt(R(z)) - S(z)) / prod_j (z - gamma_j),   deg S = l + 1,
//
// and the d_m metric / distance to the torus.

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fingap/bandset.hpp"
#include "fingap/jacobi.hpp"
#include "fingap/measure.hpp"

namespace fingap {

/// Pole position in gap j and the sheet it sits on. sheet = +1 puts the
/// pole of m on the principal sheet (an atom of the spectral measure),
/// sheet = -1 on the second sheet (no atom). At a gap edge both sheets
/// coincide and the sheet is ignored.
struct DirichletPoint {
  double gamma = 0.0;
  int sheet = -1;
};

class DirichletData {
 public:
  DirichletData() = default;
  explicit DirichletData(std::vector<DirichletPoint> points) : points_(std::move(points)) {}

  /// Circle coordinate t (mod 2) per gap: t in [0, 1] runs from the lower
  /// gap edge to the upper one on sheet +1, t in [1, 2) runs back on sheet -1.
  static DirichletData from_circle(const FiniteGapSet& e, std::span<const double> t);
  std::vector<double> to_circle(const FiniteGapSet& e) const;

  /// Throws InvalidInput unless there is one point per gap inside its closed
  /// gap with sheet +-1.
  void validate(const FiniteGapSet& e) const;
  bool at_edge(const FiniteGapSet& e, std::size_t j) const;

  std::span<const DirichletPoint> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const DirichletPoint& operator[](std::size_t j) const { return points_.at(j); }

 private:
  std::vector<DirichletPoint> points_;
};

class MinimalHerglotz {
 public:
  const FiniteGapSet& set() const { return set_; }
  const DirichletData& dirichlet() const { return dirichlet_; }
  /// Coefficients of S, ascending, size l + 2.
  std::span<const double> S() const { return S_; }
  double scale() const { return scale_; }
  /// Atom weight produced by each gap pole (0 on sheet -1 or at an edge).
  std::span<const double> pole_weights() const { return weights_; }
  /// R - S^2 (ascending, degree <= 2l); vanishes at the poles and the zeros of m.
  std::span<const double> R_minus_S2() const { return R_minus_S2_; }

  double S_at(double x) const;
  std::complex<double> S_at(std::complex<double> z) const;
  /// m on the principal sheet.
  std::complex<double> operator()(std::complex<double> z) const;
  /// c (-sqrt(R) - S) / prod (z - gamma): the same function on the second sheet.
  std::complex<double> second_sheet(std::complex<double> z) const;

 private:
  friend MinimalHerglotz minimal_herglotz(const FiniteGapSet&, const DirichletData&);
  MinimalHerglotz(FiniteGapSet e, DirichletData d) : set_(std::move(e)), dirichlet_(std::move(d)) {}
  std::complex<double> pole_product(std::complex<double> z) const;

  FiniteGapSet set_;
  DirichletData dirichlet_;
  std::vector<double> S_;
  std::vector<double> R_minus_S2_;  // R - S^2, degree <= 2l, for large |z|
  double scale_ = 0.0;
  std::vector<double> weights_;
};

/// Solves for S and c. Throws NumericalFailure for degenerate data.
MinimalHerglotz minimal_herglotz(const FiniteGapSet& e, const DirichletData& dd);

/// d mu = Im m(x + i0) / pi dx on e plus atoms at the principal-sheet poles.
/// Throws InvariantViolation on a negative density or weight.
SpectralMeasure torus_measure(const MinimalHerglotz& mh);

/// One step of coefficient stripping carried out on the Dirichlet data:
/// a_1, b_1 read off the Laurent expansion of m at infinity, and the data of
/// the stripped point, whose poles are the zeros of m.
struct ShiftStep {
  double a = 0.0;
  double b = 0.0;
  DirichletData next;
};
ShiftStep shift_step(const MinimalHerglotz& mh);

/// a_1..a_N and b_1..b_N of a torus point by iterating shift_step. Agrees with
/// stripping torus_measure to stripping accuracy and costs O(N l^2).
struct CoefficientTable {
  std::vector<double> a;
  std::vector<double> b;
};
CoefficientTable torus_coefficients(const FiniteGapSet& e, const DirichletData& dd, std::size_t N);

/// Point of the isospectral torus. Coefficients beyond those computed are
/// obtained by stripping the same measure again at a larger size.
class TorusPoint {
 public:
  const FiniteGapSet& set() const { return herglotz_->set(); }
  const DirichletData& dirichlet() const { return herglotz_->dirichlet(); }
  const MinimalHerglotz& herglotz() const { return *herglotz_; }
  const SpectralMeasure& measure() const;
  /// Head of the computed size with a tail that extends on demand.
  const JacobiParams& params() const { return params_; }

 private:
  friend TorusPoint torus_jacobi(const FiniteGapSet&, const DirichletData&, std::size_t);
  std::shared_ptr<const MinimalHerglotz> herglotz_;
  std::shared_ptr<const CoefficientSource> source_;
  JacobiParams params_;
};

TorusPoint torus_jacobi(const FiniteGapSet& e, const DirichletData& dd, std::size_t N);

/// Band-interior sample points, excluding those within `exclude` of a band
/// edge or of a Dirichlet pole.
std::vector<double> band_interior_grid(const FiniteGapSet& e, std::size_t per_band, double exclude = 1e-6,
                                       std::span<const DirichletPoint> avoid = {});

/// G_00 = -(a0^2 (m - m_hat))^{-1} with m_hat the second-sheet value,
/// evaluated from above at x. Reflectionless means Re G_00 = 0 on e.
std::complex<double> reflectionless_g00(const MinimalHerglotz& mh, double x, double a0 = 1.0);
/// max |Re G_00| over the grid.
double reflectionless_residual(const MinimalHerglotz& mh, std::span<const double> grid, double a0 = 1.0);

struct MetricValue {
  double value = 0.0;
  std::size_t k_max = 0;  // last index of the truncated series
};

/// d_m(J, J') = sum_{k>=0} e^{-k} (|a_{m+k} - a'_{m+k}| + |b_{m+k} - b'_{m+k}|),
/// truncated where the tail bound drops below 1e-12.
MetricValue d_m(const JacobiParams& J, const JacobiParams& Jp, std::size_t m);
/// Same series comparing J from index m with J' from index mp.
MetricValue d_m_shifted(const JacobiParams& J, std::size_t m, const JacobiParams& Jp, std::size_t mp);

/// Number of terms needed so that D e^{-(k+1)} / (1 - e^{-1}) < 1e-12.
std::size_t metric_terms(double coefficient_bound);

/// Grid-then-local minimization of an objective over the torus, where the
/// objective sees the first `window` coefficients of each torus point
/// (computed with torus_coefficients).
/// The torus is invariant under the shift, so comparing J from index m with
/// torus points from index 1 is the same infimum as comparing both from m.
class TorusSearch {
 public:
  using Objective = std::function<double(std::span<const double> a, std::span<const double> b)>;

  struct Result {
    double value = 0.0;
    std::vector<double> circle;
    DirichletData dirichlet;
    std::size_t evaluations = 0;
  };

  TorusSearch(const FiniteGapSet& e, std::size_t window, std::size_t grid_positions = 16);

  Result minimize(const Objective& objective, double local_tol = 1e-6) const;

  const FiniteGapSet& set() const { return set_; }
  std::size_t window() const { return window_; }
  std::size_t grid_positions() const { return grid_positions_; }
  std::size_t candidate_count() const { return candidates_.size(); }

 private:
  struct Candidate {
    std::vector<double> circle;
    std::vector<double> a, b;
  };
  Candidate make_candidate(std::vector<double> circle) const;

  FiniteGapSet set_;
  std::size_t window_;
  std::size_t grid_positions_;
  std::vector<Candidate> candidates_;
};

struct TorusDistanceOptions {
  std::size_t grid_positions = 16;  // per sheet per gap
  double local_tol = 1e-6;
};

struct TorusDistance {
  double value = 0.0;  // an upper bound on the infimum
  /// Torus point whose coefficients from index 1 align with J from index m.
  DirichletData argmin;
  std::vector<double> argmin_circle;
  std::size_t grid_positions = 0;
  double local_tol = 0.0;
  std::size_t k_max = 0;
  std::size_t evaluations = 0;
};

TorusDistance dist_to_torus(const JacobiParams& J, const FiniteGapSet& e, std::size_t m,
                            const TorusDistanceOptions& opts = {});
/// Reuses a prepared search (grid candidates computed once).
TorusDistance dist_to_torus(const JacobiParams& J, const TorusSearch& search, std::size_t m, double local_tol = 1e-6);

}  // namespace fingap
