#pragma once

// Finite gap sets e = [a_1, b_1] u ... u [a_{l+1}, b_{l+1}] and the
// logarithmic potential theory attached to them: equilibrium measure,
// potential, Green's function, capacity and harmonic measures.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fingap {

struct Band {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool contains_interior(double x) const { return x > lo && x < hi; }
};

/// Strictly interlacing bands a_1 < b_1 < a_2 < ... < b_{l+1}.
class FiniteGapSet {
 public:
  /// Throws InvalidInput on empty, non-finite, zero-length, overlapping or touching bands.
  explicit FiniteGapSet(std::vector<Band> bands);

  std::size_t band_count() const { return bands_.size(); }
  std::size_t gap_count() const { return bands_.size() - 1; }
  std::span<const Band> bands() const { return bands_; }
  const Band& band(std::size_t j) const { return bands_.at(j); }
  /// Open gap j (0-based): (b_{j+1}, a_{j+2}).
  Band gap(std::size_t j) const { return {bands_.at(j).hi, bands_.at(j + 1).lo}; }

  double lower() const { return bands_.front().lo; }
  double upper() const { return bands_.back().hi; }
  std::vector<double> endpoints() const;

  /// R(x) = prod_j (x - a_j)(x - b_j)
  double R(double x) const;
  /// prod over all bands except band j
  double R_without_band(double x, std::size_t j) const;
  /// prod over all endpoints except the two bounding gap j
  double R_without_gap(double x, std::size_t j) const;

  /// Analytic branch of sqrt(R) on C \ e, positive on (b_{l+1}, inf).
  /// Evaluated as prod of principal sqrt(z - c), so a real argument with
  /// +0 imaginary part yields the boundary value from above. On band j
  /// (0-based) that value is (-1)^(l-j) i sqrt|R|, on gap j it is
  /// (-1)^(l-j) sqrt(R).
  std::complex<double> sqrt_R(std::complex<double> z) const;
  /// Sign s with sqrt_R(x + i0) = s i sqrt|R(x)| on band j.
  double band_branch_sign(std::size_t j) const;
  /// Sign s with sqrt_R(x) = s sqrt(R(x)) on gap j.
  double gap_branch_sign(std::size_t j) const;

  bool contains(double x) const;
  bool contains_interior(double x) const;
  /// Index of the closed band containing x.
  std::optional<std::size_t> band_index(double x) const;

  /// {s x + t : x in e}, s > 0.
  FiniteGapSet affine(double scale, double shift) const;

  bool operator==(const FiniteGapSet&) const = default;

 private:
  std::vector<Band> bands_;
};

/// Validates a flat endpoint list [a_1, b_1, ..., a_{l+1}, b_{l+1}].
FiniteGapSet make_band_set(std::span<const double> endpoints);

double dist_to_set(const FiniteGapSet& e, double x);
double dist_to_complement(const FiniteGapSet& e, double x);

/// x(z) = z + 1/z
std::complex<double> joukowski(std::complex<double> z);
/// Inverse with |z| <= 1: z = (x - sqrt(x^2 - 4)) / 2.
std::complex<double> joukowski_inverse(std::complex<double> x);

/// Smallest p <= max_denominator with every |w_j - k_j/p| < tol.
std::optional<int> rational_harmonic_period(std::span<const double> omega, double tol = 1e-6,
                                            int max_denominator = 50);

/// Node/weight arrays for integrals against 1/sqrt|R| on bands and 1/sqrt(R)
/// (analytic branch, real) on gaps. Nodes come from the cosine substitution
/// x = mid + half cos(theta), which absorbs both endpoint singularities.
struct QuadratureGrid {
  struct Piece {
    std::vector<double> nodes;
    std::vector<double> weights;
  };
  std::vector<Piece> bands;
  std::vector<Piece> gaps;
  std::size_t nodes_per_interval = 0;
};

QuadratureGrid make_quadrature_grid(const FiniteGapSet& e, std::size_t nodes_per_interval);

struct EquilibriumOptions {
  std::size_t initial_nodes = 256;
  double rel_tol = 1e-10;         // gap-zero convergence under node doubling
  double series_tol = 1e-15;      // cosine-series truncation for band densities
  std::size_t max_nodes = 1u << 15;
  double robin_spread_tol = 1e-8;
};

/// Solved equilibrium problem. The density is w(x) = |Q(x)| / (pi sqrt|R(x)|)
/// with Q monic of degree l and one zero per gap. Immutable.
class EquilibriumData {
 public:
  const FiniteGapSet& set() const { return set_; }
  std::span<const double> gap_zeros() const { return gap_zeros_; }
  /// Minimal logarithmic energy E; capacity = exp(-E).
  double robin_constant() const { return robin_; }
  double capacity() const { return capacity_; }
  std::span<const double> harmonic_measures() const { return omega_; }
  /// Sample counts used to resolve each band density.
  std::span<const std::size_t> node_counts() const { return node_counts_; }
  std::size_t gap_nodes() const { return gap_nodes_; }
  /// max - min of the potential over band midpoints.
  double robin_spread() const { return robin_spread_; }
  /// Cosine coefficients of h_j(theta) = w(x(theta)) half_j sin(theta).
  std::span<const double> band_series(std::size_t j) const { return series_.at(j); }

  double Q(double x) const;
  /// Throws DomainError off the band interiors.
  double density(double x) const;
  /// Phi(z) = int log|z - x|^{-1} w(x) dx
  double potential(std::complex<double> z) const;
  /// G(z) = E - Phi(z), clamped at 0.
  double green(std::complex<double> z) const;
  /// E - Phi(z) without clamping.
  double green_raw(std::complex<double> z) const;

 private:
  friend EquilibriumData solve_equilibrium(const FiniteGapSet&, const EquilibriumOptions&);
  explicit EquilibriumData(FiniteGapSet e) : set_(std::move(e)) {}

  FiniteGapSet set_;
  std::vector<double> gap_zeros_;
  double robin_ = 0.0;
  double capacity_ = 1.0;
  double robin_spread_ = 0.0;
  std::vector<double> omega_;
  std::vector<std::size_t> node_counts_;
  std::size_t gap_nodes_ = 0;
  std::vector<std::vector<double>> series_;
};

EquilibriumData solve_equilibrium(const FiniteGapSet& e, const EquilibriumOptions& opts = {});

inline double equilibrium_density(const EquilibriumData& eq, double x) { return eq.density(x); }
inline double potential(const EquilibriumData& eq, std::complex<double> z) { return eq.potential(z); }
inline double green(const EquilibriumData& eq, std::complex<double> z) { return eq.green(z); }
inline double capacity(const EquilibriumData& eq) { return eq.capacity(); }
inline std::vector<double> harmonic_measures(const EquilibriumData& eq) {
  return {eq.harmonic_measures().begin(), eq.harmonic_measures().end()};
}

}  // namespace fingap
