#pragma once

// Cosine (Chebyshev) series in the angle variable of a band.
//
// Every band [lo, hi] is parametrized as x = mid + half * cos(theta),
// theta in [0, pi]. Integrands of the form g(x) / sqrt((x - lo)(hi - x))
// become smooth periodic functions of theta, for which the midpoint rule
// is spectrally accurate and the cosine coefficients give closed forms for
// the logarithmic and Cauchy kernels.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fingap::cosine {

/// theta_i = (i + 1/2) pi / n, i = 0..n-1.
std::vector<double> midpoint_nodes(std::size_t n);

/// Coefficients c_0..c_{n-1} with f(theta) = sum_k c_k cos(k theta),
/// from samples of f at the n midpoint nodes.
std::vector<double> coefficients_from_samples(std::span<const double> samples);

struct Series {
  std::vector<double> coeffs;
  std::size_t nodes = 0;  // sample count that produced the coefficients
};

/// Samples f on n0, 2 n0, ... midpoint nodes until the trailing quarter of
/// the coefficients is below tol * max|c_k|. Throws AccuracyError past nmax.
Series adaptive(const std::function<double(double)>& f, double tol,
                std::size_t n0 = 256, std::size_t nmax = 1u << 15);

/// sum_k c_k cos(k theta)
double evaluate(std::span<const double> c, double theta);

/// int_0^pi g(theta) dtheta = pi c_0
inline double integral(std::span<const double> c) {
  return c.empty() ? 0.0 : 3.14159265358979323846 * c[0];
}

/// The root w of (w + 1/w)/2 = u with |w| >= 1. On the cut [-1, 1] the
/// boundary value from above is returned (|w| = 1).
std::complex<double> exterior_root(std::complex<double> u);

/// int_0^pi log|u - cos theta| g(theta) dtheta for any complex u.
double log_kernel(std::span<const double> c, std::complex<double> u);

/// int_0^pi g(theta) / (cos theta - u) dtheta for u off [-1, 1].
std::complex<double> cauchy_kernel(std::span<const double> c, std::complex<double> u);

/// Gauss-Legendre rule on [lo, hi].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Rule gauss_legendre(std::size_t n, double lo, double hi);

}  // namespace fingap::cosine
