#include "fingap/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fingap/cosine_series.hpp"
#include "fingap/errors.hpp"

namespace fingap {

using std::numbers::pi;
using cplx = std::complex<double>;

namespace {

double segment_distance(cplx z, const Band& b) {
  const double dx = std::max({b.lo - z.real(), 0.0, z.real() - b.hi});
  return std::hypot(dx, z.imag());
}

// Live theta-subintervals of band b once the dead x-intervals are removed.
std::vector<std::pair<double, double>> live_pieces(const Band& b, const std::vector<Band>& dead) {
  std::vector<std::pair<double, double>> cut;
  for (const Band& d : dead) {
    const double t_lo = std::acos(std::clamp((d.hi - b.mid()) / b.half_width(), -1.0, 1.0));
    const double t_hi = std::acos(std::clamp((d.lo - b.mid()) / b.half_width(), -1.0, 1.0));
    cut.emplace_back(t_lo, t_hi);
  }
  std::sort(cut.begin(), cut.end());
  std::vector<std::pair<double, double>> live;
  double t = 0.0;
  for (const auto& [lo, hi] : cut) {
    if (lo > t) live.emplace_back(t, lo);
    t = std::max(t, hi);
  }
  if (t < pi) live.emplace_back(t, pi);
  return live;
}

constexpr std::size_t kPieceNodes = 512;

}  // namespace

SpectralMeasure::SpectralMeasure(FiniteGapSet set, std::vector<BandDensity> densities, std::vector<PointMass> atoms)
    : set_(std::move(set)), densities_(std::move(densities)), atoms_(std::move(atoms)) {
  if (densities_.size() != set_.band_count()) {
    throw InvalidInput("measure needs one band density per band (" + std::to_string(set_.band_count()) + ")");
  }
  for (const PointMass& a : atoms_) {
    if (!std::isfinite(a.x) || !std::isfinite(a.weight)) throw InvalidInput("non-finite atom");
    if (!(a.weight > 0.0)) throw InvalidInput("atom weights must be positive");
    if (set_.contains(a.x)) {
      std::ostringstream os;
      os << "atom at " << a.x << " lies on the essential support";
      throw InvalidInput(os.str());
    }
  }
  for (std::size_t j = 0; j < densities_.size(); ++j) {
    for (const Band& d : densities_[j].dead) {
      if (!(d.lo < d.hi) || !(d.lo >= set_.band(j).lo) || !(d.hi <= set_.band(j).hi)) {
        throw InvalidInput("dead interval must be a nondegenerate subinterval of its band");
      }
    }
  }
}

SpectralMeasure SpectralMeasure::from_angle_density(const FiniteGapSet& set,
                                                    const std::function<double(std::size_t, double)>& g,
                                                    std::vector<PointMass> atoms, double tol) {
  std::vector<BandDensity> dens;
  for (std::size_t j = 0; j < set.band_count(); ++j) {
    auto s = cosine::adaptive([&](double t) { return g(j, t); }, tol, 64);
    dens.push_back({std::move(s.coeffs), {}});
  }
  return SpectralMeasure(set, std::move(dens), std::move(atoms));
}

SpectralMeasure SpectralMeasure::from_density(const FiniteGapSet& set, const std::function<double(double)>& f,
                                              std::vector<PointMass> atoms, double tol) {
  return from_angle_density(
      set,
      [&](std::size_t j, double t) {
        const Band& b = set.band(j);
        return f(b.mid() + b.half_width() * std::cos(t)) * b.half_width() * std::sin(t);
      },
      std::move(atoms), tol);
}

bool SpectralMeasure::has_dead_intervals() const {
  return std::any_of(densities_.begin(), densities_.end(), [](const BandDensity& d) { return !d.dead.empty(); });
}

double SpectralMeasure::angle_density(std::size_t band, double theta) const {
  const Band& b = set_.band(band);
  const BandDensity& d = densities_.at(band);
  if (!d.dead.empty()) {
    const double x = b.mid() + b.half_width() * std::cos(theta);
    for (const Band& dd : d.dead) {
      if (dd.contains(x)) return 0.0;
    }
  }
  return cosine::evaluate(d.coeffs, theta);
}

double SpectralMeasure::density(double x) const {
  const auto j = set_.band_index(x);
  if (!j || !set_.band(*j).contains_interior(x)) return 0.0;
  const Band& b = set_.band(*j);
  const double theta = std::acos(std::clamp((x - b.mid()) / b.half_width(), -1.0, 1.0));
  return angle_density(*j, theta) / (b.half_width() * std::sin(theta));
}

double SpectralMeasure::band_mass(std::size_t band) const {
  const BandDensity& d = densities_.at(band);
  if (d.dead.empty()) return cosine::integral(d.coeffs);
  double acc = 0.0;
  for (const auto& [lo, hi] : live_pieces(set_.band(band), d.dead)) {
    const auto rule = cosine::gauss_legendre(kPieceNodes, lo, hi);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * cosine::evaluate(d.coeffs, rule.nodes[i]);
  }
  return acc;
}

double SpectralMeasure::continuous_mass() const {
  double acc = 0.0;
  for (std::size_t j = 0; j < densities_.size(); ++j) acc += band_mass(j);
  return acc;
}

double SpectralMeasure::total_mass() const {
  double acc = continuous_mass();
  for (const PointMass& a : atoms_) acc += a.weight;
  return acc;
}

SpectralMeasure SpectralMeasure::with_dead_interval(Band dead) const {
  const auto j = set_.band_index(0.5 * (dead.lo + dead.hi));
  if (!j) throw InvalidInput("dead interval does not lie in a band");
  auto dens = densities_;
  dens[*j].dead.push_back(dead);
  return SpectralMeasure(set_, std::move(dens), atoms_);
}

SpectralMeasure SpectralMeasure::normalized() const {
  const double m = total_mass();
  if (!(m > 0.0)) throw InvalidInput("measure has no mass");
  auto dens = densities_;
  for (auto& d : dens) {
    for (double& c : d.coeffs) c /= m;
  }
  auto atoms = atoms_;
  for (auto& a : atoms) a.weight /= m;
  return SpectralMeasure(set_, std::move(dens), std::move(atoms));
}

SpectralMeasure SpectralMeasure::with_atom(PointMass atom) const {
  auto atoms = atoms_;
  atoms.push_back(atom);
  return SpectralMeasure(set_, densities_, std::move(atoms)).normalized();
}

DiscreteMeasure SpectralMeasure::discretize(std::size_t n) const {
  DiscreteMeasure out;
  double wmax = 0.0;
  std::vector<std::pair<double, double>> raw;
  for (std::size_t j = 0; j < densities_.size(); ++j) {
    const Band& b = set_.band(j);
    const BandDensity& d = densities_[j];
    if (d.dead.empty()) {
      const auto theta = cosine::midpoint_nodes(n);
      const double h = pi / static_cast<double>(n);
      for (double t : theta) raw.emplace_back(b.mid() + b.half_width() * std::cos(t), h * cosine::evaluate(d.coeffs, t));
    } else {
      for (const auto& [lo, hi] : live_pieces(b, d.dead)) {
        const auto m = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(n * (hi - lo) / pi)));
        const auto rule = cosine::gauss_legendre(m, lo, hi);
        for (std::size_t i = 0; i < m; ++i) {
          raw.emplace_back(b.mid() + b.half_width() * std::cos(rule.nodes[i]),
                           rule.weights[i] * cosine::evaluate(d.coeffs, rule.nodes[i]));
        }
      }
    }
  }
  for (const auto& r : raw) wmax = std::max(wmax, r.second);
  for (const auto& [x, w] : raw) {
    if (w < 0.0) {
      if (w < -1e-12 * wmax) {
        std::ostringstream os;
        os << "band density is negative (" << w << ") near x = " << x;
        throw InvariantViolation(os.str());
      }
      continue;
    }
    if (w == 0.0) continue;
    out.nodes.push_back(x);
    out.weights.push_back(w);
  }
  for (const PointMass& a : atoms_) {
    out.nodes.push_back(a.x);
    out.weights.push_back(a.weight);
  }
  return out;
}

SpectralMeasure semicircle_measure() {
  const FiniteGapSet e({{-2.0, 2.0}});
  // f dx = (2/pi) sin^2(theta) dtheta = (1/pi)(1 - cos 2 theta) dtheta
  return SpectralMeasure(e, {BandDensity{{1.0 / pi, 0.0, -1.0 / pi}, {}}});
}

SpectralMeasure arcsine_measure() {
  const FiniteGapSet e({{-2.0, 2.0}});
  return SpectralMeasure(e, {BandDensity{{1.0 / pi}, {}}});
}

SpectralMeasure equilibrium_measure(const EquilibriumData& eq) {
  std::vector<BandDensity> dens;
  for (std::size_t j = 0; j < eq.set().band_count(); ++j) {
    const auto s = eq.band_series(j);
    dens.push_back({std::vector<double>(s.begin(), s.end()), {}});
  }
  return SpectralMeasure(eq.set(), std::move(dens));
}

HerglotzValue m_from_measure(const SpectralMeasure& mu, cplx z) {
  constexpr double kMinDistance = 1e-8;
  cplx acc = 0.0;
  for (const PointMass& a : mu.atoms()) {
    if (std::abs(z - a.x) < kMinDistance) throw AccuracyError("m-function evaluated on an atom");
    acc += a.weight / (a.x - z);
  }
  const FiniteGapSet& e = mu.set();
  for (std::size_t j = 0; j < e.band_count(); ++j) {
    const Band& b = e.band(j);
    if (segment_distance(z, b) < kMinDistance) throw AccuracyError("m-function evaluated too close to the bands");
    const BandDensity& d = mu.densities()[j];
    const double r = b.half_width();
    if (d.dead.empty()) {
      acc += cosine::cauchy_kernel(d.coeffs, (z - b.mid()) / r) / r;
      continue;
    }
    for (const auto& [lo, hi] : live_pieces(b, d.dead)) {
      const auto rule = cosine::gauss_legendre(4 * kPieceNodes, lo, hi);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = b.mid() + r * std::cos(rule.nodes[i]);
        acc += rule.weights[i] * cosine::evaluate(d.coeffs, rule.nodes[i]) / (x - z);
      }
    }
  }
  return {acc, false};
}

void stieltjes_procedure(const DiscreteMeasure& d, std::size_t N, std::vector<double>& a, std::vector<double>& b) {
  const std::size_t P = d.nodes.size();
  if (N >= P) throw InvalidInput("discretization too coarse for the requested coefficient count");
  a.assign(N, 0.0);
  b.assign(N, 0.0);
  double mass = 0.0;
  for (double w : d.weights) mass += w;
  std::vector<double> v(P), prev(P, 0.0), next(P);
  for (std::size_t i = 0; i < P; ++i) v[i] = std::sqrt(d.weights[i] / mass);
  double a_prev = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    double bn = 0.0;
    for (std::size_t i = 0; i < P; ++i) bn += d.nodes[i] * v[i] * v[i];
    double norm2 = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      next[i] = (d.nodes[i] - bn) * v[i] - a_prev * prev[i];
      norm2 += next[i] * next[i];
    }
    const double an = std::sqrt(norm2);
    b[n] = bn;
    a[n] = an;
    for (std::size_t i = 0; i < P; ++i) {
      prev[i] = v[i];
      v[i] = next[i] / an;
    }
    a_prev = an;
  }
}

void lanczos_rkpw(const DiscreteMeasure& d, std::size_t N, std::vector<double>& a, std::vector<double>& b) {
  // Gragg-Harrod: add one node at a time to the Jacobi matrix of the
  // partial measure with a chase of plane rotations. p0 holds the diagonal
  // (alpha_0, alpha_1, ...), p1 holds (beta_0 = mass, beta_1 = a_1^2, ...).
  const std::size_t P = d.nodes.size();
  if (N >= P) throw InvalidInput("discretization too coarse for the requested coefficient count");
  std::vector<double> p0(d.nodes), p1(P, 0.0);
  p1[0] = d.weights[0];
  for (std::size_t n = 0; n + 1 < P; ++n) {
    double pn = d.weights[n + 1];
    double gam = 1.0, sig = 0.0, t = 0.0;
    const double xlam = d.nodes[n + 1];
    for (std::size_t k = 0; k <= n + 1; ++k) {
      const double rho = p1[k] + pn;
      const double tmp = gam * rho;
      const double tsig = sig;
      if (rho <= 0.0) {
        gam = 1.0;
        sig = 0.0;
      } else {
        gam = p1[k] / rho;
        sig = pn / rho;
      }
      const double tk = sig * (p0[k] - xlam) - gam * t;
      p0[k] -= tk - t;
      t = tk;
      if (sig <= 0.0) {
        pn = tsig * p1[k];
      } else {
        pn = t * t / sig;
      }
      p1[k] = tmp;
    }
  }
  a.resize(N);
  b.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    b[n] = p0[n];
    a[n] = std::sqrt(p1[n + 1]);
  }
}

StripResult strip_coefficients(const SpectralMeasure& mu, std::size_t N, const StripOptions& opts) {
  if (N == 0) throw InvalidInput("strip_coefficients needs N >= 1");
  std::size_t K = 0;
  for (const auto& d : mu.densities()) K = std::max(K, d.coeffs.size());
  std::size_t n = N + K / 2 + 16;
  if (mu.has_dead_intervals()) n = std::max<std::size_t>(n, 2 * N + 64);

  auto run = [&](std::size_t nodes, std::vector<double>& a, std::vector<double>& b) {
    const auto disc = mu.discretize(nodes);
    if (opts.method == StripMethod::Stieltjes) {
      stieltjes_procedure(disc, N, a, b);
    } else {
      lanczos_rkpw(disc, N, a, b);
    }
  };
  std::vector<double> a0, b0, a1, b1;
  run(n, a0, b0);
  for (;;) {
    if (2 * n > opts.max_nodes_per_band) {
      throw AccuracyError("coefficient stripping did not converge under node doubling (N = " + std::to_string(N) +
                          ", nodes per band = " + std::to_string(n) + ")");
    }
    run(2 * n, a1, b1);
    n *= 2;
    double change = 0.0;
    for (std::size_t i = 0; i < N; ++i) change = std::max({change, std::abs(a1[i] - a0[i]), std::abs(b1[i] - b0[i])});
    if (change < opts.tol) {
      for (double v : a1) {
        if (!(v > 0.0) || !std::isfinite(v)) throw NumericalFailure("stripping produced a nonpositive a_n");
      }
      return {JacobiParams(std::move(a1), std::move(b1)), n, change};
    }
    a0 = std::move(a1);
    b0 = std::move(b1);
  }
}

}  // namespace fingap
