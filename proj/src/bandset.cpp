#include "fingap/bandset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fingap/cosine_series.hpp"
#include "fingap/errors.hpp"

namespace fingap {

using std::numbers::pi;
using cplx = std::complex<double>;

FiniteGapSet::FiniteGapSet(std::vector<Band> bands) : bands_(std::move(bands)) {
  if (bands_.empty()) throw InvalidInput("band set needs at least one band");
  for (std::size_t j = 0; j < bands_.size(); ++j) {
    const Band& b = bands_[j];
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi)) {
      throw InvalidInput("band " + std::to_string(j) + " has a non-finite endpoint");
    }
    if (!(b.lo < b.hi)) {
      std::ostringstream os;
      os << "band " << j << " [" << b.lo << ", " << b.hi << "] has nonpositive length";
      throw InvalidInput(os.str());
    }
    if (j > 0 && !(bands_[j - 1].hi < b.lo)) {
      std::ostringstream os;
      os << "bands " << j - 1 << " and " << j << " overlap or touch: " << bands_[j - 1].hi
         << " >= " << b.lo;
      throw InvalidInput(os.str());
    }
  }
}

std::vector<double> FiniteGapSet::endpoints() const {
  std::vector<double> out;
  out.reserve(2 * bands_.size());
  for (const Band& b : bands_) {
    out.push_back(b.lo);
    out.push_back(b.hi);
  }
  return out;
}

double FiniteGapSet::R(double x) const {
  double r = 1.0;
  for (const Band& b : bands_) r *= (x - b.lo) * (x - b.hi);
  return r;
}

double FiniteGapSet::R_without_band(double x, std::size_t j) const {
  double r = 1.0;
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (i != j) r *= (x - bands_[i].lo) * (x - bands_[i].hi);
  }
  return r;
}

double FiniteGapSet::R_without_gap(double x, std::size_t j) const {
  double r = 1.0;
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (i != j) r *= x - bands_[i].hi;
    if (i != j + 1) r *= x - bands_[i].lo;
  }
  return r;
}

cplx FiniteGapSet::sqrt_R(cplx z) const {
  cplx r = 1.0;
  for (const Band& b : bands_) r *= std::sqrt(z - b.lo) * std::sqrt(z - b.hi);
  return r;
}

double FiniteGapSet::band_branch_sign(std::size_t j) const {
  return ((gap_count() - j) % 2 == 0) ? 1.0 : -1.0;
}

double FiniteGapSet::gap_branch_sign(std::size_t j) const {
  return ((gap_count() - j) % 2 == 0) ? 1.0 : -1.0;
}

bool FiniteGapSet::contains(double x) const { return band_index(x).has_value(); }

bool FiniteGapSet::contains_interior(double x) const {
  return std::any_of(bands_.begin(), bands_.end(), [x](const Band& b) { return b.contains_interior(x); });
}

std::optional<std::size_t> FiniteGapSet::band_index(double x) const {
  for (std::size_t j = 0; j < bands_.size(); ++j) {
    if (bands_[j].contains(x)) return j;
  }
  return std::nullopt;
}

FiniteGapSet FiniteGapSet::affine(double scale, double shift) const {
  if (!(scale > 0.0)) throw InvalidInput("affine scale must be positive");
  std::vector<Band> out;
  out.reserve(bands_.size());
  for (const Band& b : bands_) out.push_back({scale * b.lo + shift, scale * b.hi + shift});
  return FiniteGapSet(std::move(out));
}

FiniteGapSet make_band_set(std::span<const double> endpoints) {
  if (endpoints.empty() || endpoints.size() % 2 != 0) {
    throw InvalidInput("band set needs an even, nonzero number of endpoints (got " +
                       std::to_string(endpoints.size()) + ")");
  }
  std::vector<Band> bands;
  for (std::size_t i = 0; i < endpoints.size(); i += 2) bands.push_back({endpoints[i], endpoints[i + 1]});
  return FiniteGapSet(std::move(bands));
}

double dist_to_set(const FiniteGapSet& e, double x) {
  double d = std::numeric_limits<double>::infinity();
  for (const Band& b : e.bands()) {
    if (b.contains(x)) return 0.0;
    d = std::min({d, std::abs(x - b.lo), std::abs(x - b.hi)});
  }
  return d;
}

double dist_to_complement(const FiniteGapSet& e, double x) {
  for (const Band& b : e.bands()) {
    if (b.contains_interior(x)) return std::min(x - b.lo, b.hi - x);
  }
  return 0.0;
}

cplx joukowski(cplx z) { return z + 1.0 / z; }

cplx joukowski_inverse(cplx x) { return 1.0 / cosine::exterior_root(0.5 * x); }

std::optional<int> rational_harmonic_period(std::span<const double> omega, double tol, int max_denominator) {
  for (int p = 1; p <= max_denominator; ++p) {
    bool ok = true;
    for (double w : omega) {
      const double k = std::round(w * p);
      if (std::abs(w - k / p) >= tol) {
        ok = false;
        break;
      }
    }
    if (ok) return p;
  }
  return std::nullopt;
}

QuadratureGrid make_quadrature_grid(const FiniteGapSet& e, std::size_t n) {
  QuadratureGrid g;
  g.nodes_per_interval = n;
  const auto theta = cosine::midpoint_nodes(n);
  const double h = pi / static_cast<double>(n);
  for (std::size_t j = 0; j < e.band_count(); ++j) {
    const Band& b = e.band(j);
    QuadratureGrid::Piece p;
    for (double t : theta) {
      const double x = b.mid() + b.half_width() * std::cos(t);
      p.nodes.push_back(x);
      p.weights.push_back(h / std::sqrt(std::abs(e.R_without_band(x, j))));
    }
    g.bands.push_back(std::move(p));
  }
  for (std::size_t j = 0; j < e.gap_count(); ++j) {
    const Band gap = e.gap(j);
    const double sign = e.gap_branch_sign(j);
    QuadratureGrid::Piece p;
    for (double t : theta) {
      const double x = gap.mid() + gap.half_width() * std::cos(t);
      p.nodes.push_back(x);
      p.weights.push_back(sign * h / std::sqrt(std::abs(e.R_without_gap(x, j))));
    }
    g.gaps.push_back(std::move(p));
  }
  return g;
}

namespace {

// Gap conditions int_gap Q / sqrt(R) = 0 for Q monic of degree l, solved in
// the scaled variable s = (x - c) / h; returns one root per gap.
std::vector<double> gap_zeros_at(const FiniteGapSet& e, std::size_t nodes) {
  const std::size_t l = e.gap_count();
  if (l == 0) return {};
  const double c = 0.5 * (e.lower() + e.upper());
  const double h = 0.5 * (e.upper() - e.lower());
  const QuadratureGrid grid = make_quadrature_grid(e, nodes);

  // Row j: sum_k q_k I_{jk} = -I_{jl}, I_{jk} = int_gap_j s^k / sqrt(R).
  std::vector<std::vector<double>> A(l, std::vector<double>(l + 1, 0.0));
  for (std::size_t j = 0; j < l; ++j) {
    const auto& piece = grid.gaps[j];
    for (std::size_t i = 0; i < piece.nodes.size(); ++i) {
      const double s = (piece.nodes[i] - c) / h;
      double sk = 1.0;
      for (std::size_t k = 0; k <= l; ++k) {
        A[j][k] += piece.weights[i] * sk;
        sk *= s;
      }
    }
  }
  // Gaussian elimination with partial pivoting on [A | -I_l].
  std::vector<double> rhs(l);
  for (std::size_t j = 0; j < l; ++j) rhs[j] = -A[j][l];
  for (std::size_t col = 0; col < l; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < l; ++r) {
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    }
    if (A[piv][col] == 0.0) throw NumericalFailure("equilibrium gap-condition system is singular");
    std::swap(A[piv], A[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = col + 1; r < l; ++r) {
      const double f = A[r][col] / A[col][col];
      for (std::size_t k = col; k < l; ++k) A[r][k] -= f * A[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> q(l + 1, 0.0);
  q[l] = 1.0;
  for (std::size_t r = l; r-- > 0;) {
    double acc = rhs[r];
    for (std::size_t k = r + 1; k < l; ++k) acc -= A[r][k] * q[k];
    q[r] = acc / A[r][r];
  }
  auto qs = [&](double x) {
    const double s = (x - c) / h;
    double v = 0.0;
    for (std::size_t k = l + 1; k-- > 0;) v = v * s + q[k];
    return v;
  };

  std::vector<double> zeros(l);
  for (std::size_t j = 0; j < l; ++j) {
    double lo = e.gap(j).lo, hi = e.gap(j).hi;
    double flo = qs(lo), fhi = qs(hi);
    if (flo == 0.0) {
      zeros[j] = lo;
      continue;
    }
    if (fhi == 0.0) {
      zeros[j] = hi;
      continue;
    }
    if ((flo > 0) == (fhi > 0)) {
      throw NumericalFailure("equilibrium polynomial has no sign change in gap " + std::to_string(j));
    }
    for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * std::abs(hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = qs(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    zeros[j] = 0.5 * (lo + hi);
  }
  return zeros;
}

}  // namespace

double EquilibriumData::Q(double x) const {
  double v = 1.0;
  for (double z : gap_zeros_) v *= x - z;
  return v;
}

double EquilibriumData::density(double x) const {
  if (!set_.contains_interior(x)) throw DomainError("equilibrium density evaluated off the band interiors");
  return std::abs(Q(x)) / (pi * std::sqrt(std::abs(set_.R(x))));
}

double EquilibriumData::potential(cplx z) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < set_.band_count(); ++j) {
    const Band& b = set_.band(j);
    const double r = b.half_width();
    const cplx u = (z - b.mid()) / r;
    acc += cosine::integral(series_[j]) * std::log(r) + cosine::log_kernel(series_[j], u);
  }
  return -acc;
}

double EquilibriumData::green_raw(cplx z) const { return robin_ - potential(z); }

double EquilibriumData::green(cplx z) const { return std::max(0.0, green_raw(z)); }

EquilibriumData solve_equilibrium(const FiniteGapSet& e, const EquilibriumOptions& opts) {
  EquilibriumData eq(e);
  const std::size_t l = e.gap_count();

  // Gap zeros, node doubling until stable.
  std::size_t n = opts.initial_nodes;
  std::vector<double> zeros = gap_zeros_at(e, n);
  const double scale = e.upper() - e.lower();
  if (l > 0) {
    for (;;) {
      if (2 * n > opts.max_nodes) throw AccuracyError("equilibrium gap zeros did not converge under node doubling");
      auto next = gap_zeros_at(e, 2 * n);
      double change = 0.0;
      for (std::size_t j = 0; j < l; ++j) change = std::max(change, std::abs(next[j] - zeros[j]));
      zeros = std::move(next);
      n *= 2;
      if (change <= opts.rel_tol * scale) break;
    }
  }
  eq.gap_zeros_ = zeros;
  eq.gap_nodes_ = n;

  // Band densities in the angle variable: h_j(theta) = |Q(x)| / (pi sqrt|R_without_band(x)|).
  for (std::size_t j = 0; j < e.band_count(); ++j) {
    const Band& b = e.band(j);
    auto h = [&, j](double theta) {
      const double x = b.mid() + b.half_width() * std::cos(theta);
      return std::abs(eq.Q(x)) / (pi * std::sqrt(std::abs(e.R_without_band(x, j))));
    };
    auto series = cosine::adaptive(h, opts.series_tol, opts.initial_nodes, opts.max_nodes);
    eq.node_counts_.push_back(series.nodes);
    eq.omega_.push_back(cosine::integral(series.coeffs));
    eq.series_.push_back(std::move(series.coeffs));
  }

  // Robin constant from the potential at band midpoints.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  for (const Band& b : e.bands()) {
    const double phi = eq.potential(cplx(b.mid(), 0.0));
    lo = std::min(lo, phi);
    hi = std::max(hi, phi);
    sum += phi;
  }
  eq.robin_ = sum / static_cast<double>(e.band_count());
  eq.robin_spread_ = hi - lo;
  if (eq.robin_spread_ > opts.robin_spread_tol) {
    throw AccuracyError("potential not constant across band midpoints (spread " +
                        std::to_string(eq.robin_spread_) + ")");
  }
  eq.capacity_ = std::exp(-eq.robin_);
  return eq;
}

}  // namespace fingap
