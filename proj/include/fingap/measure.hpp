#pragma once

// Spectral measures d mu = f(x) dx + sum_k w_k delta_{x_k} supported on a
// finite gap set plus finitely many atoms off it, their Stieltjes transforms
// and the recovery of Jacobi parameters from them.

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "fingap/bandset.hpp"
#include "fingap/jacobi.hpp"

namespace fingap {

struct PointMass {
  double x = 0.0;
  double weight = 0.0;
};

/// Band density stored in the angle variable of its band:
///   g(theta) = f(mid + half cos theta) * half * sin theta = sum_k coeffs[k] cos(k theta),
/// so that int_band f dx = int_0^pi g dtheta. Endpoint square-root behaviour
/// of f is carried by the Jacobian and g stays smooth. `dead` lists closed
/// subintervals (in x) on which f vanishes identically.
struct BandDensity {
  std::vector<double> coeffs;
  std::vector<Band> dead;
};

/// Node/weight discretization of a measure.
struct DiscreteMeasure {
  std::vector<double> nodes;
  std::vector<double> weights;
};

class SpectralMeasure {
 public:
  /// Throws InvalidInput when the band count does not match, an atom lies on
  /// e, or an atom weight is not positive.
  SpectralMeasure(FiniteGapSet set, std::vector<BandDensity> densities, std::vector<PointMass> atoms = {});

  /// Builds each band density from g(band, theta), resolving the cosine
  /// series adaptively.
  static SpectralMeasure from_angle_density(const FiniteGapSet& set,
                                            const std::function<double(std::size_t, double)>& g,
                                            std::vector<PointMass> atoms = {}, double tol = 1e-15);
  /// Same from the density f(x) itself (f should vanish like sqrt at the
  /// edges or blow up at most like 1/sqrt for the series to converge fast).
  static SpectralMeasure from_density(const FiniteGapSet& set, const std::function<double(double)>& f,
                                      std::vector<PointMass> atoms = {}, double tol = 1e-15);

  const FiniteGapSet& set() const { return set_; }
  const std::vector<BandDensity>& densities() const { return densities_; }
  const std::vector<PointMass>& atoms() const { return atoms_; }
  bool has_dead_intervals() const;

  /// f(x); zero off the bands and on dead intervals.
  double density(double x) const;
  /// g_j(theta) honouring dead intervals.
  double angle_density(std::size_t band, double theta) const;
  double band_mass(std::size_t band) const;
  double continuous_mass() const;
  double total_mass() const;

  /// Copy with f set to zero on [lo, hi] (which must lie inside one band).
  SpectralMeasure with_dead_interval(Band dead) const;
  /// Copy rescaled to total mass 1.
  SpectralMeasure normalized() const;
  /// Copy with an extra atom, then renormalized so the total stays 1.
  SpectralMeasure with_atom(PointMass atom) const;

  /// Band nodes from the midpoint rule in theta (exact for polynomials of
  /// degree < 2 n - coefficient count), Gauss-Legendre on live pieces when
  /// dead intervals are present, plus the atoms.
  DiscreteMeasure discretize(std::size_t nodes_per_band) const;

 private:
  FiniteGapSet set_;
  std::vector<BandDensity> densities_;
  std::vector<PointMass> atoms_;
};

/// sqrt(4 - x^2) / (2 pi) on [-2, 2]; the spectral measure of the free matrix.
SpectralMeasure semicircle_measure();
/// 1 / (pi sqrt(4 - x^2)) on [-2, 2].
SpectralMeasure arcsine_measure();
/// Equilibrium measure of a solved set.
SpectralMeasure equilibrium_measure(const EquilibriumData& eq);

/// m(z) = int d mu(x) / (x - z). Throws AccuracyError within 1e-8 of the support.
HerglotzValue m_from_measure(const SpectralMeasure& mu, std::complex<double> z);

enum class StripMethod {
  Stieltjes,  // discretized Stieltjes procedure
  Lanczos,    // Gragg-Harrod rotation scheme on the same discretization
};

struct StripOptions {
  double tol = 1e-10;                 // max coefficient change under node doubling
  std::size_t max_nodes_per_band = 1u << 17;
  StripMethod method = StripMethod::Lanczos;
};

struct StripResult {
  /// First N coefficients; the tail beyond N is a Free placeholder.
  JacobiParams params;
  std::size_t nodes_per_band = 0;
  double last_change = 0.0;
};

/// First N recursion coefficients of the orthonormal polynomials of mu.
StripResult strip_coefficients(const SpectralMeasure& mu, std::size_t N, const StripOptions& opts = {});

/// Recursion coefficients of a discrete measure (b_1..b_N, a_1..a_N).
void stieltjes_procedure(const DiscreteMeasure& d, std::size_t N, std::vector<double>& a, std::vector<double>& b);
void lanczos_rkpw(const DiscreteMeasure& d, std::size_t N, std::vector<double>& a, std::vector<double>& b);

}  // namespace fingap
