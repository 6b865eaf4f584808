#include "fingap/isotorus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "fingap/errors.hpp"

namespace fingap {

using std::numbers::pi;
using cplx = std::complex<double>;

namespace {

// Snap positions that sit on a gap edge up to rounding onto the edge.
constexpr double kEdgeSnap = 1e-13;

template <class T>
T horner(std::span<const double> c, T z) {
  T acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
  return acc;
}

std::vector<double> poly_mul(std::span<const double> p, std::span<const double> q) {
  std::vector<double> r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  }
  return r;
}

// Monomial coefficients (ascending) of the interpolant through (x_i, y_i).
std::vector<double> interpolate(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<double> dd(y.begin(), y.end());
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = n - 1; i >= k; --i) {
      const double h = x[i] - x[i - k];
      if (h == 0.0) throw NumericalFailure("degenerate Dirichlet data: coincident pole positions");
      dd[i] = (dd[i] - dd[i - 1]) / h;
    }
  }
  std::vector<double> c(n, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    // c <- c * (z - x_k) + dd_k
    for (std::size_t i = n - 1; i > 0; --i) c[i] = c[i - 1] - x[k] * c[i];
    c[0] = -x[k] * c[0] + dd[k];
  }
  return c;
}

bool snapped_edge(double& g, const Band& gap) {
  const double tol = kEdgeSnap * std::max(1.0, gap.length());
  if (std::abs(g - gap.lo) <= tol) {
    g = gap.lo;
    return true;
  }
  if (std::abs(g - gap.hi) <= tol) {
    g = gap.hi;
    return true;
  }
  return false;
}

}  // namespace

DirichletData DirichletData::from_circle(const FiniteGapSet& e, std::span<const double> t) {
  if (t.size() != e.gap_count()) {
    throw InvalidInput("circle coordinates need one entry per gap (" + std::to_string(e.gap_count()) + ")");
  }
  std::vector<DirichletPoint> pts;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (!std::isfinite(t[j])) throw InvalidInput("non-finite circle coordinate");
    double s = std::fmod(t[j], 2.0);
    if (s < 0.0) s += 2.0;
    const Band g = e.gap(j);
    if (s == 0.0) {
      pts.push_back({g.lo, 1});
    } else if (s < 1.0) {
      pts.push_back({g.lo + s * g.length(), 1});
    } else if (s == 1.0) {
      pts.push_back({g.hi, 1});
    } else {
      pts.push_back({g.hi - (s - 1.0) * g.length(), -1});
    }
  }
  return DirichletData(std::move(pts));
}

std::vector<double> DirichletData::to_circle(const FiniteGapSet& e) const {
  validate(e);
  std::vector<double> t;
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const Band g = e.gap(j);
    const double p = points_[j].gamma;
    if (p == g.lo) {
      t.push_back(0.0);
    } else if (p == g.hi) {
      t.push_back(1.0);
    } else if (points_[j].sheet > 0) {
      t.push_back((p - g.lo) / g.length());
    } else {
      t.push_back(1.0 + (g.hi - p) / g.length());
    }
  }
  return t;
}

void DirichletData::validate(const FiniteGapSet& e) const {
  if (points_.size() != e.gap_count()) {
    throw InvalidInput("Dirichlet data has " + std::to_string(points_.size()) + " points for " +
                       std::to_string(e.gap_count()) + " gaps");
  }
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const Band g = e.gap(j);
    const auto& p = points_[j];
    if (!std::isfinite(p.gamma) || p.gamma < g.lo || p.gamma > g.hi) {
      std::ostringstream os;
      os << "Dirichlet point " << p.gamma << " is outside gap " << j << " [" << g.lo << ", " << g.hi << "]";
      throw InvalidInput(os.str());
    }
    if (p.sheet != 1 && p.sheet != -1) throw InvalidInput("sheet must be +1 or -1");
  }
}

bool DirichletData::at_edge(const FiniteGapSet& e, std::size_t j) const {
  const Band g = e.gap(j);
  return points_.at(j).gamma == g.lo || points_.at(j).gamma == g.hi;
}

MinimalHerglotz minimal_herglotz(const FiniteGapSet& e, const DirichletData& dd) {
  dd.validate(e);
  const std::size_t l = e.gap_count();
  std::vector<DirichletPoint> pts(dd.points().begin(), dd.points().end());
  std::vector<bool> edge(l);
  for (std::size_t j = 0; j < l; ++j) edge[j] = snapped_edge(pts[j].gamma, e.gap(j));
  MinimalHerglotz mh(e, DirichletData(pts));

  // sqrt(R) = z^{l+1} (1 + s1/z + s2/z^2 + ...), from prod (1 - c/z) = 1 + r1/z + r2/z^2 + ...
  const auto ends = e.endpoints();
  double sum = 0.0, sumsq = 0.0;
  for (double c : ends) {
    sum += c;
    sumsq += c * c;
  }
  const double r1 = -sum;
  const double r2 = 0.5 * (sum * sum - sumsq);
  const double s1 = 0.5 * r1;
  const double s2 = 0.5 * (r2 - s1 * s1);

  std::vector<double> x(l), y(l);
  for (std::size_t j = 0; j < l; ++j) {
    const double g = pts[j].gamma;
    double target = 0.0;
    if (!edge[j]) {
      const double root = e.gap_branch_sign(j) * std::sqrt(e.R(g));
      target = -pts[j].sheet * root;
    }
    x[j] = g;
    y[j] = target - std::pow(g, double(l + 1)) - s1 * std::pow(g, double(l));
  }
  const auto T = interpolate(x, y);

  mh.S_.assign(l + 2, 0.0);
  for (std::size_t k = 0; k < l; ++k) mh.S_[k] = T[k];
  mh.S_[l] += s1;
  mh.S_[l + 1] = 1.0;

  const double lead = l == 0 ? 0.0 : T[l - 1];
  const double k = s2 - lead;
  if (k == 0.0 || !std::isfinite(k)) throw NumericalFailure("degenerate Dirichlet data: normalization vanishes");
  mh.scale_ = -1.0 / k;

  std::vector<double> R{1.0};
  for (double c : ends) {
    const double f[2] = {-c, 1.0};
    R = poly_mul(R, f);
  }
  const auto S2 = poly_mul(mh.S_, mh.S_);
  mh.R_minus_S2_.assign(2 * l + 1, 0.0);
  for (std::size_t i = 0; i <= 2 * l; ++i) mh.R_minus_S2_[i] = R[i] - S2[i];

  mh.weights_.assign(l, 0.0);
  for (std::size_t j = 0; j < l; ++j) {
    if (edge[j] || pts[j].sheet < 0) continue;
    const double g = pts[j].gamma;
    double prod = 1.0;
    for (std::size_t i = 0; i < l; ++i) {
      if (i != j) prod *= g - pts[i].gamma;
    }
    const double root = e.gap_branch_sign(j) * std::sqrt(e.R(g));
    const double w = -2.0 * mh.scale_ * root / prod;
    if (!(w > 0.0)) {
      std::ostringstream os;
      os << "pole weight " << w << " at " << g << " is not positive";
      throw InvariantViolation(os.str());
    }
    mh.weights_[j] = w;
  }
  return mh;
}

double MinimalHerglotz::S_at(double x) const { return horner<double>(S_, x); }
cplx MinimalHerglotz::S_at(cplx z) const { return horner<cplx>(S_, z); }

cplx MinimalHerglotz::pole_product(cplx z) const {
  cplx p = 1.0;
  for (const auto& d : dirichlet_.points()) p *= z - d.gamma;
  return p;
}

cplx MinimalHerglotz::operator()(cplx z) const {
  const double spread = set_.upper() - set_.lower();
  const double center = 0.5 * (set_.upper() + set_.lower());
  const cplx root = set_.sqrt_R(z);
  const cplx s = S_at(z);
  if (std::abs(z - center) > 2.0 * spread) {
    return scale_ * horner<cplx>(R_minus_S2_, z) / ((root + s) * pole_product(z));
  }
  return scale_ * (root - s) / pole_product(z);
}

cplx MinimalHerglotz::second_sheet(cplx z) const {
  return scale_ * (-set_.sqrt_R(z) - S_at(z)) / pole_product(z);
}

SpectralMeasure torus_measure(const MinimalHerglotz& mh) {
  const FiniteGapSet& e = mh.set();
  const auto pts = mh.dirichlet().points();
  const double c = mh.scale();
  auto g = [&](std::size_t j, double theta) {
    const Band& b = e.band(j);
    const double r = b.half_width();
    const double ct = std::cos(theta);
    const double x = b.mid() + r * ct;
    double left = r * (1.0 + ct);   // x - lo
    double right = r * (1.0 - ct);  // hi - x
    double den = pi;
    for (const auto& p : pts) {
      if (p.gamma == b.lo) {
        left = 1.0;
      } else if (p.gamma == b.hi) {
        right = -1.0;
      } else {
        den *= x - p.gamma;
      }
    }
    const double v = c * e.band_branch_sign(j) * left * right * std::sqrt(std::abs(e.R_without_band(x, j))) / den;
    if (v < 0.0) {
      std::ostringstream os;
      os << "negative torus density " << v << " on band " << j;
      throw InvariantViolation(os.str());
    }
    return v;
  };
  std::vector<PointMass> atoms;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (mh.pole_weights()[j] > 0.0) atoms.push_back({pts[j].gamma, mh.pole_weights()[j]});
  }
  auto mu = SpectralMeasure::from_angle_density(e, g, std::move(atoms));
  const double mass = mu.total_mass();
  if (std::abs(mass - 1.0) > 1e-8) {
    std::ostringstream os;
    os << "torus measure has mass " << mass;
    throw InvariantViolation(os.str());
  }
  return mu;
}

namespace {

// Coefficients of z^{-1}, z^{-2}, z^{-3} in the expansion of m at infinity.
std::array<double, 3> laurent_head(const MinimalHerglotz& mh) {
  const FiniteGapSet& e = mh.set();
  const std::size_t l = e.gap_count();
  const std::size_t K = l + 5;

  // prod (1 - c w) and its square root as power series in w = 1/z
  std::vector<double> r{1.0};
  for (double c : e.endpoints()) {
    const double f[2] = {1.0, -c};
    r = poly_mul(r, f);
  }
  r.resize(std::max(r.size(), K), 0.0);
  std::vector<double> s(K, 0.0);
  s[0] = 1.0;
  for (std::size_t k = 1; k < K; ++k) {
    double acc = r[k];
    for (std::size_t i = 1; i < k; ++i) acc -= s[i] * s[k - i];
    s[k] = 0.5 * acc;
  }
  // numerator z^{l+1} sum_k nu_k w^k
  const auto S = mh.S();
  std::vector<double> nu(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    nu[k] = s[k];
    if (k <= l + 1) nu[k] -= S[l + 1 - k];
  }
  // 1 / prod (1 - gamma w)
  std::vector<double> p{1.0};
  for (const auto& d : mh.dirichlet().points()) {
    const double f[2] = {1.0, -d.gamma};
    p = poly_mul(p, f);
  }
  p.resize(std::max<std::size_t>(p.size(), 3), 0.0);
  const double q1 = -p[1];
  const double q2 = p[1] * p[1] - p[2];
  const double c = mh.scale();
  return {c * nu[2], c * (nu[3] + nu[2] * q1), c * (nu[4] + nu[3] * q1 + nu[2] * q2)};
}

}  // namespace

ShiftStep shift_step(const MinimalHerglotz& mh) {
  const FiniteGapSet& e = mh.set();
  const std::size_t l = e.gap_count();
  const auto M = laurent_head(mh);
  const double b = -M[1];
  const double a2 = -M[2] - b * b;
  if (!(a2 > 0.0)) throw NumericalFailure("shift produced a nonpositive a_1^2");
  ShiftStep out;
  out.a = std::sqrt(a2);
  out.b = b;
  if (l == 0) return out;

  // Zeros of m lie among the roots of R - S^2; dividing out the current
  // poles leaves one root per closed gap.
  std::vector<double> E(mh.R_minus_S2().begin(), mh.R_minus_S2().end());
  for (const auto& d : mh.dirichlet().points()) {
    std::vector<double> q(E.size() - 1, 0.0);
    double carry = 0.0;
    for (std::size_t i = E.size(); i-- > 1;) {
      carry = E[i] + carry * d.gamma;
      q[i - 1] = carry;
    }
    E = std::move(q);
  }
  auto eval = [&](double x) { return horner<double>(E, x); };

  std::vector<DirichletPoint> next;
  for (std::size_t j = 0; j < l; ++j) {
    const Band g = e.gap(j);
    double lo = g.lo, hi = g.hi;
    double flo = eval(lo), fhi = eval(hi);
    double mu;
    if (flo == 0.0) {
      mu = lo;
    } else if (fhi == 0.0) {
      mu = hi;
    } else if ((flo < 0.0) == (fhi < 0.0)) {
      // Root at an edge up to rounding.
      mu = std::abs(flo) <= std::abs(fhi) ? lo : hi;
    } else {
      for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = eval(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      mu = 0.5 * (lo + hi);
    }
    int sheet = 1;
    double gm = mu;
    if (!snapped_edge(gm, g)) {
      const double root = e.gap_branch_sign(j) * std::sqrt(e.R(gm));
      sheet = (mh.S_at(gm) < 0.0) == (root < 0.0) ? 1 : -1;
    }
    next.push_back({gm, sheet});
  }
  out.next = DirichletData(std::move(next));
  return out;
}

CoefficientTable torus_coefficients(const FiniteGapSet& e, const DirichletData& dd, std::size_t N) {
  CoefficientTable t;
  t.a.reserve(N);
  t.b.reserve(N);
  DirichletData cur = dd;
  for (std::size_t n = 0; n < N; ++n) {
    const auto step = shift_step(minimal_herglotz(e, cur));
    t.a.push_back(step.a);
    t.b.push_back(step.b);
    cur = step.next;
  }
  return t;
}

namespace {

// Coefficients of a torus point. Grows by doubling the stripped length, and
// only appends, so a value never depends on the order of earlier queries.
class TorusCoefficients final : public CoefficientSource {
 public:
  TorusCoefficients(SpectralMeasure mu, std::vector<double> a, std::vector<double> b)
      : mu_(std::move(mu)), a_(std::move(a)), b_(std::move(b)) {}

  double a(std::size_t n) const override {
    std::lock_guard lock(mutex_);
    ensure(n);
    return a_[n - 1];
  }
  double b(std::size_t n) const override {
    std::lock_guard lock(mutex_);
    ensure(n);
    return b_[n - 1];
  }
  const SpectralMeasure& measure() const { return mu_; }

 private:
  void ensure(std::size_t n) const {
    if (n == 0) throw InvalidInput("Jacobi coefficients are 1-based");
    while (a_.size() < n) {
      const std::size_t next = std::max<std::size_t>(2 * a_.size(), 64);
      auto r = strip_coefficients(mu_, next);
      const auto ha = r.params.head_a();
      const auto hb = r.params.head_b();
      a_.insert(a_.end(), ha.begin() + a_.size(), ha.end());
      b_.insert(b_.end(), hb.begin() + b_.size(), hb.end());
    }
  }

  SpectralMeasure mu_;
  mutable std::mutex mutex_;
  mutable std::vector<double> a_, b_;
};

}  // namespace

const SpectralMeasure& TorusPoint::measure() const {
  return static_cast<const TorusCoefficients&>(*source_).measure();
}

TorusPoint torus_jacobi(const FiniteGapSet& e, const DirichletData& dd, std::size_t N) {
  if (N == 0) throw InvalidInput("torus_jacobi needs N >= 1");
  TorusPoint tp;
  tp.herglotz_ = std::make_shared<const MinimalHerglotz>(minimal_herglotz(e, dd));
  auto mu = torus_measure(*tp.herglotz_);
  auto r = strip_coefficients(mu, N);
  std::vector<double> a(r.params.head_a().begin(), r.params.head_a().end());
  std::vector<double> b(r.params.head_b().begin(), r.params.head_b().end());
  tp.source_ = std::make_shared<const TorusCoefficients>(std::move(mu), a, b);
  tp.params_ = JacobiParams(std::move(a), std::move(b), TorusTail{tp.source_});
  return tp;
}

std::vector<double> band_interior_grid(const FiniteGapSet& e, std::size_t per_band, double exclude,
                                       std::span<const DirichletPoint> avoid) {
  std::vector<double> out;
  for (const Band& b : e.bands()) {
    for (std::size_t i = 0; i < per_band; ++i) {
      const double x = b.lo + (double(i) + 0.5) / double(per_band) * b.length();
      if (x - b.lo < exclude || b.hi - x < exclude) continue;
      bool near = false;
      for (const auto& p : avoid) near = near || std::abs(x - p.gamma) < exclude;
      if (!near) out.push_back(x);
    }
  }
  return out;
}

cplx reflectionless_g00(const MinimalHerglotz& mh, double x, double a0) {
  const cplx z(x, 0.0);
  return -1.0 / (a0 * a0 * (mh(z) - mh.second_sheet(z)));
}

double reflectionless_residual(const MinimalHerglotz& mh, std::span<const double> grid, double a0) {
  double worst = 0.0;
  for (double x : grid) worst = std::max(worst, std::abs(reflectionless_g00(mh, x, a0).real()));
  return worst;
}

std::size_t metric_terms(double bound) {
  constexpr double target = 1e-12;
  const double q = 1.0 - std::exp(-1.0);
  if (!(bound > 0.0)) return 0;
  const double k = std::log(bound / (target * q));
  return k <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(k));
}

namespace {

constexpr std::size_t kBoundWindow = 64;

double window_sup(const JacobiParams& J, std::size_t from) {
  double s = 0.0;
  for (std::size_t k = 0; k <= kBoundWindow; ++k) s = std::max(s, std::abs(J.a(from + k)) + std::abs(J.b(from + k)));
  return s;
}

}  // namespace

MetricValue d_m_shifted(const JacobiParams& J, std::size_t m, const JacobiParams& Jp, std::size_t mp) {
  if (m == 0 || mp == 0) throw InvalidInput("d_m indices are 1-based");
  const double bound = 2.0 * (window_sup(J, m) + window_sup(Jp, mp));
  const std::size_t kmax = metric_terms(bound);
  double sum = 0.0;
  for (std::size_t k = kmax + 1; k-- > 0;) {
    sum += std::exp(-double(k)) * (std::abs(J.a(m + k) - Jp.a(mp + k)) + std::abs(J.b(m + k) - Jp.b(mp + k)));
  }
  return {sum, kmax};
}

MetricValue d_m(const JacobiParams& J, const JacobiParams& Jp, std::size_t m) { return d_m_shifted(J, m, Jp, m); }

TorusSearch::TorusSearch(const FiniteGapSet& e, std::size_t window, std::size_t grid_positions)
    : set_(e), window_(window), grid_positions_(grid_positions) {
  if (window == 0) throw InvalidInput("search window must be positive");
  if (grid_positions == 0) throw InvalidInput("grid needs at least one position per sheet");
  const std::size_t l = e.gap_count();
  const std::size_t per_gap = 2 * grid_positions;
  std::size_t total = 1;
  for (std::size_t j = 0; j < l; ++j) total *= per_gap;

  std::vector<std::vector<double>> circles(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t j = 0; j < l; ++j) {
      circles[idx].push_back(double(rest % per_gap) / double(grid_positions));
      rest /= per_gap;
    }
  }

  candidates_.resize(total);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), total));
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < total; i += workers) candidates_[i] = make_candidate(circles[i]);
    }));
  }
  for (auto& f : jobs) f.get();
}

TorusSearch::Candidate TorusSearch::make_candidate(std::vector<double> circle) const {
  auto t = torus_coefficients(set_, DirichletData::from_circle(set_, circle), window_);
  return {std::move(circle), std::move(t.a), std::move(t.b)};
}

TorusSearch::Result TorusSearch::minimize(const Objective& objective, double local_tol) const {
  Result res;
  std::size_t best = 0;
  res.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    const double v = objective(candidates_[i].a, candidates_[i].b);
    ++res.evaluations;
    if (v < res.value) {
      res.value = v;
      best = i;
    }
  }
  res.circle = candidates_[best].circle;

  // Coordinate pattern search on the circles, starting from the grid spacing.
  const std::size_t l = set_.gap_count();
  double step = 1.0 / double(grid_positions_);
  while (l > 0 && step >= local_tol) {
    bool moved = false;
    for (std::size_t j = 0; j < l; ++j) {
      for (double dir : {1.0, -1.0}) {
        auto trial = res.circle;
        trial[j] = std::fmod(trial[j] + dir * step + 2.0, 2.0);
        const auto c = make_candidate(trial);
        const double v = objective(c.a, c.b);
        ++res.evaluations;
        if (v < res.value) {
          res.value = v;
          res.circle = c.circle;
          moved = true;
          break;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  res.dirichlet = DirichletData::from_circle(set_, res.circle);
  return res;
}

namespace {

double torus_coefficient_bound(const FiniteGapSet& e) {
  return 0.5 * (e.upper() - e.lower()) + std::max(std::abs(e.lower()), std::abs(e.upper()));
}

}  // namespace

TorusDistance dist_to_torus(const JacobiParams& J, const TorusSearch& search, std::size_t m, double local_tol) {
  if (m == 0) throw InvalidInput("d_m indices are 1-based");
  const double bound = 2.0 * (window_sup(J, m) + torus_coefficient_bound(search.set()));
  const std::size_t kmax = metric_terms(bound);
  if (kmax + 1 > search.window()) {
    throw InvalidInput("torus search window " + std::to_string(search.window()) + " is shorter than the " +
                       std::to_string(kmax + 1) + " terms required");
  }
  std::vector<double> ja(kmax + 1), jb(kmax + 1), wt(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) {
    ja[k] = J.a(m + k);
    jb[k] = J.b(m + k);
    wt[k] = std::exp(-double(k));
  }
  auto objective = [&](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = kmax + 1; k-- > 0;) s += wt[k] * (std::abs(ja[k] - a[k]) + std::abs(jb[k] - b[k]));
    return s;
  };
  auto r = search.minimize(objective, local_tol);
  TorusDistance out;
  out.value = r.value;
  out.argmin = std::move(r.dirichlet);
  out.argmin_circle = std::move(r.circle);
  out.grid_positions = search.grid_positions();
  out.local_tol = local_tol;
  out.k_max = kmax;
  out.evaluations = r.evaluations;
  return out;
}

TorusDistance dist_to_torus(const JacobiParams& J, const FiniteGapSet& e, std::size_t m,
                            const TorusDistanceOptions& opts) {
  if (m == 0) throw InvalidInput("d_m indices are 1-based");
  const double bound = 2.0 * (window_sup(J, m) + torus_coefficient_bound(e));
  const TorusSearch search(e, metric_terms(bound) + 1, opts.grid_positions);
  return dist_to_torus(J, search, m, opts.local_tol);
}

}  // namespace fingap
