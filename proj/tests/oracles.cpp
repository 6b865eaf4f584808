#include "oracles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracle {

using std::numbers::pi;

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

namespace {

// mean of log(1/|x - y|) over two disjoint cells
double cell_pair(double a0, double a1, double b0, double b1, bool adjacent) {
  static std::vector<double> gx4, gw4, gx16, gw16;
  if (gx4.empty()) {
    gauss_legendre(4, gx4, gw4);
    gauss_legendre(16, gx16, gw16);
  }
  const auto& gx = adjacent ? gx16 : gx4;
  const auto& gw = adjacent ? gw16 : gw4;
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double x = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * gx[i];
    for (std::size_t j = 0; j < gx.size(); ++j) {
      const double y = 0.5 * (b0 + b1) + 0.5 * (b1 - b0) * gx[j];
      s += 0.25 * gw[i] * gw[j] * -std::log(std::abs(x - y));
    }
  }
  return s;
}

}  // namespace

double EnergyMinimizer::density(double x) const {
  for (std::size_t i = 0; i < charge.size(); ++i) {
    if (x >= cell_lo[i] && x <= cell_hi[i]) return charge[i] / (cell_hi[i] - cell_lo[i]);
  }
  return 0.0;
}

EnergyMinimizer minimize_energy(const std::vector<Interval>& bands, int n) {
  EnergyMinimizer em;
  std::vector<int> band_of;
  for (std::size_t j = 0; j < bands.size(); ++j) {
    const double mid = 0.5 * (bands[j].first + bands[j].second), r = 0.5 * (bands[j].second - bands[j].first);
    for (int k = 0; k < n; ++k) {
      em.cell_lo.push_back(mid - r * std::cos(pi * k / n));
      em.cell_hi.push_back(mid - r * std::cos(pi * (k + 1) / n));
      band_of.push_back(int(j));
    }
  }
  const int M = int(em.cell_lo.size());
  Eigen::MatrixXd K(M + 1, M + 1);
  for (int i = 0; i < M; ++i) {
    const double h = em.cell_hi[i] - em.cell_lo[i];
    K(i, i) = -std::log(h) + 1.5;
    for (int j = i + 1; j < M; ++j) {
      const bool adj = j == i + 1 && band_of[i] == band_of[j];
      K(i, j) = K(j, i) = cell_pair(em.cell_lo[i], em.cell_hi[i], em.cell_lo[j], em.cell_hi[j], adj);
    }
    K(i, M) = K(M, i) = 1.0;
  }
  K(M, M) = 0.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M + 1);
  rhs(M) = 1.0;
  const Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
  em.charge.resize(M);
  em.band_mass.assign(bands.size(), 0.0);
  for (int i = 0; i < M; ++i) {
    em.charge[i] = sol(i);
    if (!(sol(i) > 0.0)) throw std::runtime_error("energy oracle: nonpositive charge, KKT point not on the simplex");
    em.band_mass[band_of[i]] += sol(i);
  }
  // K q = -lambda 1 at the optimum; the minimal energy is q^T K q = -lambda
  em.energy = -sol(M);
  return em;
}

std::vector<double> gap_zeros_from_density(const std::vector<Interval>& bands, const EnergyMinimizer& em) {
  const int l = int(bands.size()) - 1;
  if (l == 0) return {};
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < em.charge.size(); ++i) {
    const double x = 0.5 * (em.cell_lo[i] + em.cell_hi[i]);
    int j = 0;
    while (!(x >= bands[j].first && x <= bands[j].second)) ++j;
    const double len = bands[j].second - bands[j].first;
    if (x - bands[j].first < 0.1 * len || bands[j].second - x < 0.1 * len) continue;
    double R = 1.0;
    for (const auto& b : bands) R *= (x - b.first) * (x - b.second);
    const double sign = ((l - j) % 2 == 0) ? 1.0 : -1.0;
    xs.push_back(x);
    ys.push_back(sign * pi * em.charge[i] / (em.cell_hi[i] - em.cell_lo[i]) * std::sqrt(std::abs(R)));
  }
  Eigen::MatrixXd A(xs.size(), l);
  Eigen::VectorXd y(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (int k = 0; k < l; ++k) A(i, k) = std::pow(xs[i], k);
    y(i) = ys[i] - std::pow(xs[i], l);
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(l, l);
  for (int k = 0; k < l; ++k) comp(k, l - 1) = -c(k);
  for (int k = 1; k < l; ++k) comp(k, k - 1) = 1.0;
  const Eigen::VectorXcd roots = comp.eigenvalues();
  std::vector<double> out;
  for (int k = 0; k < l; ++k) out.push_back(roots(k).real());
  std::sort(out.begin(), out.end());
  return out;
}

Eigendata jacobi_eigendata(const std::vector<double>& a, const std::vector<double>& b) {
  const int N = int(b.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    T(i, i) = b[i];
    if (i + 1 < N) T(i, i + 1) = T(i + 1, i) = a[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Eigendata d;
  for (int k = 0; k < N; ++k) {
    d.values.push_back(es.eigenvalues()(k));
    d.first_weights.push_back(es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
  }
  return d;
}

std::vector<cplx> oprl(const std::vector<double>& a, const std::vector<double>& b, std::size_t n, cplx z) {
  auto A = [&](std::size_t k) { return k <= a.size() ? a[k - 1] : 1.0; };
  auto B = [&](std::size_t k) { return k <= b.size() ? b[k - 1] : 0.0; };
  std::vector<cplx> p(n + 1);
  p[0] = 1.0;
  if (n == 0) return p;
  p[1] = (z - B(1)) / A(1);
  for (std::size_t k = 1; k < n; ++k) p[k + 1] = ((z - B(k + 1)) * p[k] - A(k) * p[k - 1]) / A(k + 1);
  return p;
}

cplx m_free(cplx z) {
  cplx s = std::sqrt(z * z - 4.0);
  cplx m = 0.5 * (-z + s);
  if (std::abs(m) > 1.0) m = 0.5 * (-z - s);
  return m;
}

cplx m_arcsine(cplx z) {
  // sqrt(z^2 - 4) with the branch ~ z at infinity: z sqrt(1 - 4/z^2)
  cplx s = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
  return -1.0 / s;
}

double green_single_band(double x) {
  const double ax = std::abs(x);
  if (ax <= 2.0) return 0.0;
  return std::log(ax / 2.0 + std::sqrt(ax * ax / 4.0 - 1.0));
}

double integrate_log_endpoints(const std::function<double(double)>& F, int panels) {
  std::vector<double> gx, gw;
  gauss_legendre(20, gx, gw);
  double total = 0.0;
  for (int side = 0; side < 2; ++side) {
    for (int p = 0; p < panels; ++p) {
      const double s0 = double(p) / panels, s1 = double(p + 1) / panels;
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * gx[i];
        const double t = 0.5 * pi * s * s;
        const double jac = pi * s * 0.5 * (s1 - s0) * gw[i];
        total += jac * F(side == 0 ? t : pi - t);
      }
    }
  }
  return total;
}

}  // namespace oracle
