#include "fingap/cosine_series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fingap/errors.hpp"

namespace fingap::cosine {

using std::numbers::pi;

std::vector<double> midpoint_nodes(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = (static_cast<double>(i) + 0.5) * pi / static_cast<double>(n);
  return t;
}

std::vector<double> coefficients_from_samples(std::span<const double> samples) {
  const std::size_t n = samples.size();
  std::vector<double> c(n, 0.0);
  if (n == 0) return c;
  // cos(k theta_j) = cos(pi k (2j+1) / (2n)); index the table mod 4n.
  const std::size_t period = 4 * n;
  std::vector<double> table(period);
  for (std::size_t i = 0; i < period; ++i) table[i] = std::cos(pi * static_cast<double>(i) / (2.0 * n));
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    std::size_t idx = k % period;
    const std::size_t step = (2 * k) % period;
    for (std::size_t j = 0; j < n; ++j) {
      acc += samples[j] * table[idx];
      idx += step;
      if (idx >= period) idx -= period;
    }
    c[k] = 2.0 * acc / static_cast<double>(n);
  }
  c[0] *= 0.5;
  return c;
}

namespace {

void trim(std::vector<double>& c, double floor) {
  while (c.size() > 1 && std::abs(c.back()) <= floor) c.pop_back();
}

}  // namespace

Series adaptive(const std::function<double(double)>& f, double tol, std::size_t n0, std::size_t nmax) {
  std::size_t n = std::max<std::size_t>(n0, 8);
  for (;;) {
    const auto nodes = midpoint_nodes(n);
    std::vector<double> samples(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = f(nodes[i]);
    auto c = coefficients_from_samples(samples);
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    double tail = 0.0;
    for (std::size_t k = 3 * n / 4; k < n; ++k) tail = std::max(tail, std::abs(c[k]));
    if (scale == 0.0 || tail <= tol * scale) {
      trim(c, 1e-18 * scale);
      return {std::move(c), n};
    }
    if (2 * n > nmax) {
      throw AccuracyError("cosine series did not resolve within " + std::to_string(nmax) +
                          " nodes (trailing/max = " + std::to_string(tail / scale) + ")");
    }
    n *= 2;
  }
}

double evaluate(std::span<const double> c, double theta) {
  if (c.empty()) return 0.0;
  // Clenshaw for sum c_k T_k(x), x = cos theta.
  const double x = std::cos(theta);
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) {
    const double b0 = c[k] + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + x * b1 - b2;
}

std::complex<double> exterior_root(std::complex<double> u) {
  const std::complex<double> s = std::sqrt(u - 1.0) * std::sqrt(u + 1.0);
  std::complex<double> w = u + s;
  if (std::abs(w) < 1.0) w = u - s;
  return w;
}

double log_kernel(std::span<const double> c, std::complex<double> u) {
  if (c.empty()) return 0.0;
  const std::complex<double> w = exterior_root(u);
  const std::complex<double> q = 1.0 / w;
  double acc = c[0] * std::log(std::abs(w) / 2.0);
  std::complex<double> qk = 1.0;
  for (std::size_t k = 1; k < c.size(); ++k) {
    qk *= q;
    acc -= c[k] * qk.real() / static_cast<double>(k);
  }
  return pi * acc;
}

std::complex<double> cauchy_kernel(std::span<const double> c, std::complex<double> u) {
  if (c.empty()) return 0.0;
  const std::complex<double> w = exterior_root(u);
  const std::complex<double> s = w - u;  // sqrt(u^2 - 1) on the branch matching w
  const std::complex<double> q = 1.0 / w;
  std::complex<double> acc = 0.0, qk = 1.0;
  for (double ck : c) {
    acc += ck * qk;
    qk *= q;
  }
  return -pi * acc / s;
}

Rule gauss_legendre(std::size_t n, double lo, double hi) {
  Rule r{std::vector<double>(n), std::vector<double>(n)};
  const double xm = 0.5 * (hi + lo), xl = 0.5 * (hi - lo);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 1; i <= m; ++i) {
    double z = std::cos(pi * (static_cast<double>(i) - 0.25) / (static_cast<double>(n) + 0.5));
    double pp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    const std::size_t k = i - 1;
    r.nodes[k] = xm - xl * z;
    r.nodes[n - 1 - k] = xm + xl * z;
    r.weights[k] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    r.weights[n - 1 - k] = r.weights[k];
  }
  return r;
}

}  // namespace fingap::cosine
