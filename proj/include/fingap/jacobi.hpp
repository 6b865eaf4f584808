#pragma once

// One-sided Jacobi coefficient sequences {a_n, b_n}_{n>=1} and the machinery
// that runs on them: orthonormal polynomials, truncation spectra, transfer
// matrices and diagonal Green's functions.

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fingap/bandset.hpp"

namespace fingap {

/// Infinite coefficient sequence computed on demand (1-based indices).
class CoefficientSource {
 public:
  virtual ~CoefficientSource() = default;
  virtual double a(std::size_t n) const = 0;
  virtual double b(std::size_t n) const = 0;
};

/// a = 1, b = 0
struct FreeTail {};

/// a_n = a[(n-1) mod p], b_n = b[(n-1) mod p] (phase tied to the absolute index).
struct PeriodicTail {
  std::vector<double> a;
  std::vector<double> b;
};

/// Coefficients from an external source, e.g. a point of the isospectral torus.
struct TorusTail {
  std::shared_ptr<const CoefficientSource> source;
};

using Tail = std::variant<FreeTail, PeriodicTail, TorusTail>;

/// Jacobi parameters: an explicit head a_1..a_N, b_1..b_N followed by a tail.
/// Zero padding is not a tail (it would break a_n > 0).
class JacobiParams {
 public:
  JacobiParams() = default;
  /// Throws InvalidInput on size mismatch, a_n <= 0 or non-finite entries.
  JacobiParams(std::vector<double> head_a, std::vector<double> head_b, Tail tail = FreeTail{});

  static JacobiParams free() { return {}; }

  /// 1-based, n >= 1.
  double a(std::size_t n) const;
  double b(std::size_t n) const;

  std::size_t head_size() const { return head_a_.size(); }
  std::span<const double> head_a() const { return head_a_; }
  std::span<const double> head_b() const { return head_b_; }
  const Tail& tail() const { return tail_; }
  bool has_free_tail() const { return std::holds_alternative<FreeTail>(tail_); }

  /// Copies a_1..a_n and b_1..b_n.
  std::vector<double> a_range(std::size_t n) const;
  std::vector<double> b_range(std::size_t n) const;

 private:
  std::vector<double> head_a_;
  std::vector<double> head_b_;
  Tail tail_ = FreeTail{};
};

/// Free Jacobi matrix with the single diagonal entry b_index replaced.
JacobiParams single_site(std::size_t index, double b_value);

/// p_0(z)..p_n(z) by the three-term recursion (no scaling; overflows for
/// large n off the spectrum, see oprl_eval_scaled).
std::vector<std::complex<double>> oprl_eval(const JacobiParams& J, std::size_t n, std::complex<double> z);

/// value = mantissa * exp(log_scale)
struct ScaledValue {
  std::complex<double> mantissa;
  double log_scale = 0.0;

  double log_abs() const { return std::log(std::abs(mantissa)) + log_scale; }
};

/// p_0(z)..p_n(z) in scaled form, safe for n in the thousands off the spectrum.
std::vector<ScaledValue> oprl_eval_scaled(const JacobiParams& J, std::size_t n, std::complex<double> z);

/// mantissa_x / mantissa_y * exp(scale_x - scale_y)
std::complex<double> scaled_ratio(const ScaledValue& x, const ScaledValue& y);

/// Eigenvalues of the N x N truncation in [lo, hi] by Sturm bisection, sorted.
std::vector<double> truncation_eigenvalues(const JacobiParams& J, std::size_t N, double lo, double hi);

/// Eigenvalues of the N x N truncation outside e that are stable to tol
/// against the N/2 truncation. Sorted.
std::vector<double> truncation_eigenvalues_outside(const JacobiParams& J, const FiniteGapSet& e, std::size_t N,
                                                   double tol = 1e-6);

/// max_{n <= N} || T_n(lambda) ... T_1(lambda) ||_2, returned as a logarithm
/// so exponential growth does not overflow.
double transfer_growth_log(const JacobiParams& J, double lambda, std::size_t N);
inline double transfer_growth(const JacobiParams& J, double lambda, std::size_t N) {
  return std::exp(transfer_growth_log(J, lambda, N));
}

/// Value of a Herglotz function at a point; `pole` marks an infinite value.
struct HerglotzValue {
  std::complex<double> value;
  bool pole = false;
};

/// <delta_0, (J - z)^{-1} delta_0> = -(a_0^2 m_+ - 1/m_-)^{-1}.
HerglotzValue g00(double a0, HerglotzValue m_plus, HerglotzValue m_minus);

/// <delta_0, (J - z)^{-1} delta_0> = -(z - b_0 + a_0^2 m_+ + a_{-1}^2 m~_-)^{-1}.
HerglotzValue g00_shifted(std::complex<double> z, double a0, double b0, double a_minus1, HerglotzValue m_plus,
                          HerglotzValue m_tilde_minus);

}  // namespace fingap
