#include "fingap/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fingap/errors.hpp"

namespace fingap {

using cplx = std::complex<double>;

JacobiParams::JacobiParams(std::vector<double> head_a, std::vector<double> head_b, Tail tail)
    : head_a_(std::move(head_a)), head_b_(std::move(head_b)), tail_(std::move(tail)) {
  if (head_a_.size() != head_b_.size()) {
    throw InvalidInput("head_a and head_b differ in length (" + std::to_string(head_a_.size()) + " vs " +
                       std::to_string(head_b_.size()) + ")");
  }
  for (std::size_t i = 0; i < head_a_.size(); ++i) {
    if (!std::isfinite(head_a_[i]) || !std::isfinite(head_b_[i])) {
      throw InvalidInput("non-finite Jacobi coefficient at n = " + std::to_string(i + 1));
    }
    if (!(head_a_[i] > 0.0)) throw InvalidInput("a_n must be positive (n = " + std::to_string(i + 1) + ")");
  }
  if (const auto* p = std::get_if<PeriodicTail>(&tail_)) {
    if (p->a.empty() || p->a.size() != p->b.size()) throw InvalidInput("periodic tail needs equal, nonempty a and b");
    for (double v : p->a) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("periodic tail a-values must be positive and finite");
    }
  }
  if (const auto* t = std::get_if<TorusTail>(&tail_)) {
    if (!t->source) throw InvalidInput("torus tail without a coefficient source");
  }
}

double JacobiParams::a(std::size_t n) const {
  if (n == 0) throw InvalidInput("Jacobi coefficients are 1-based");
  if (n <= head_a_.size()) return head_a_[n - 1];
  return std::visit(
      [n](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, FreeTail>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, PeriodicTail>) {
          return t.a[(n - 1) % t.a.size()];
        } else {
          return t.source->a(n);
        }
      },
      tail_);
}

double JacobiParams::b(std::size_t n) const {
  if (n == 0) throw InvalidInput("Jacobi coefficients are 1-based");
  if (n <= head_b_.size()) return head_b_[n - 1];
  return std::visit(
      [n](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, FreeTail>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, PeriodicTail>) {
          return t.b[(n - 1) % t.b.size()];
        } else {
          return t.source->b(n);
        }
      },
      tail_);
}

std::vector<double> JacobiParams::a_range(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a(i + 1);
  return out;
}

std::vector<double> JacobiParams::b_range(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = b(i + 1);
  return out;
}

JacobiParams single_site(std::size_t index, double b_value) {
  if (index == 0) throw InvalidInput("site index is 1-based");
  std::vector<double> a(index, 1.0), b(index, 0.0);
  b[index - 1] = b_value;
  return JacobiParams(std::move(a), std::move(b));
}

std::vector<cplx> oprl_eval(const JacobiParams& J, std::size_t n, cplx z) {
  std::vector<cplx> p(n + 1);
  p[0] = 1.0;
  if (n == 0) return p;
  p[1] = (z - J.b(1)) / J.a(1);
  for (std::size_t k = 1; k < n; ++k) {
    p[k + 1] = ((z - J.b(k + 1)) * p[k] - J.a(k) * p[k - 1]) / J.a(k + 1);
  }
  return p;
}

std::vector<ScaledValue> oprl_eval_scaled(const JacobiParams& J, std::size_t n, cplx z) {
  std::vector<ScaledValue> out(n + 1);
  cplx prev = 0.0, cur = 1.0;
  double scale = 0.0;
  out[0] = {cur, scale};
  for (std::size_t k = 0; k < n; ++k) {
    const double ak = k == 0 ? 0.0 : J.a(k);
    cplx next = ((z - J.b(k + 1)) * cur - ak * prev) / J.a(k + 1);
    prev = cur;
    cur = next;
    const double mag = std::max(std::abs(cur), std::abs(prev));
    if (mag > 1e100 || (mag < 1e-100 && mag > 0.0)) {
      cur /= mag;
      prev /= mag;
      scale += std::log(mag);
    }
    out[k + 1] = {cur, scale};
  }
  return out;
}

cplx scaled_ratio(const ScaledValue& x, const ScaledValue& y) {
  return x.mantissa / y.mantissa * std::exp(x.log_scale - y.log_scale);
}

namespace {

struct Tridiagonal {
  std::vector<double> diag;     // b_1..b_N
  std::vector<double> offsq;    // a_1^2..a_{N-1}^2
  double pivmin = 0.0;
  double lo = 0.0, hi = 0.0;    // Gershgorin bounds
};

Tridiagonal truncation(const JacobiParams& J, std::size_t N) {
  Tridiagonal t;
  t.diag = J.b_range(N);
  const auto a = J.a_range(N);
  t.offsq.resize(N > 0 ? N - 1 : 0);
  double amax = 0.0;
  t.lo = std::numeric_limits<double>::infinity();
  t.hi = -t.lo;
  for (std::size_t i = 0; i < N; ++i) {
    const double left = i > 0 ? a[i - 1] : 0.0;
    const double right = i + 1 < N ? a[i] : 0.0;
    t.lo = std::min(t.lo, t.diag[i] - left - right);
    t.hi = std::max(t.hi, t.diag[i] + left + right);
    if (i + 1 < N) {
      t.offsq[i] = a[i] * a[i];
      amax = std::max(amax, a[i]);
    }
  }
  t.pivmin = std::numeric_limits<double>::min() * std::max(1.0, amax * amax);
  return t;
}

// Number of eigenvalues strictly below x (Sturm sequence via LDL^T pivots).
std::size_t count_below(const Tridiagonal& t, double x) {
  std::size_t cnt = 0;
  double q = t.diag[0] - x;
  if (std::abs(q) < t.pivmin) q = -t.pivmin;
  if (q < 0) ++cnt;
  for (std::size_t i = 1; i < t.diag.size(); ++i) {
    q = t.diag[i] - x - t.offsq[i - 1] / q;
    if (std::abs(q) < t.pivmin) q = -t.pivmin;
    if (q < 0) ++cnt;
  }
  return cnt;
}

void bisect(const Tridiagonal& t, double lo, double hi, std::size_t clo, std::size_t chi, std::vector<double>& out) {
  if (chi <= clo) return;
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(lo), std::abs(hi), 1.0});
  if (hi - lo <= tol) {
    for (std::size_t i = clo; i < chi; ++i) out.push_back(0.5 * (lo + hi));
    return;
  }
  const double mid = 0.5 * (lo + hi);
  const std::size_t cmid = count_below(t, mid);
  bisect(t, lo, mid, clo, cmid, out);
  bisect(t, mid, hi, cmid, chi, out);
}

std::vector<double> eigen_in(const Tridiagonal& t, double lo, double hi) {
  std::vector<double> out;
  if (!(lo < hi)) return out;
  bisect(t, lo, hi, count_below(t, lo), count_below(t, hi), out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> outside(const Tridiagonal& t, const FiniteGapSet& e) {
  std::vector<double> out;
  auto append = [&](double lo, double hi) {
    for (double v : eigen_in(t, lo, hi)) {
      if (!e.contains(v)) out.push_back(v);
    }
  };
  append(std::min(t.lo, e.lower()) - 1.0, e.lower());
  for (std::size_t j = 0; j < e.gap_count(); ++j) append(e.gap(j).lo, e.gap(j).hi);
  append(e.upper(), std::max(t.hi, e.upper()) + 1.0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<double> truncation_eigenvalues(const JacobiParams& J, std::size_t N, double lo, double hi) {
  if (N == 0) return {};
  return eigen_in(truncation(J, N), lo, hi);
}

std::vector<double> truncation_eigenvalues_outside(const JacobiParams& J, const FiniteGapSet& e, std::size_t N,
                                                   double tol) {
  if (N < 2) throw InvalidInput("truncation size must be at least 2");
  const auto full = outside(truncation(J, N), e);
  auto half = outside(truncation(J, N / 2), e);
  std::vector<double> stable;
  std::vector<bool> used(half.size(), false);
  for (double v : full) {
    std::size_t best = half.size();
    double dist = tol;
    for (std::size_t i = 0; i < half.size(); ++i) {
      if (!used[i] && std::abs(half[i] - v) < dist) {
        dist = std::abs(half[i] - v);
        best = i;
      }
    }
    if (best < half.size()) {
      used[best] = true;
      stable.push_back(v);
    }
  }
  return stable;
}

double transfer_growth_log(const JacobiParams& J, double lambda, std::size_t N) {
  // M = T_k ... T_1, T_k = [[(lambda - b_k)/a_k, -a_{k-1}/a_k], [1, 0]], a_0 = 1.
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
  double log_scale = 0.0;
  double best = 0.0;
  double a_prev = 1.0;
  for (std::size_t k = 1; k <= N; ++k) {
    const double ak = J.a(k);
    const double t00 = (lambda - J.b(k)) / ak, t01 = -a_prev / ak;
    const double n00 = t00 * m00 + t01 * m10, n01 = t00 * m01 + t01 * m11;
    m10 = m00;
    m11 = m01;
    m00 = n00;
    m01 = n01;
    a_prev = ak;
    const double f = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
    const double det = m00 * m11 - m01 * m10;
    const double disc = std::max(0.0, f * f - 4.0 * det * det);
    const double norm = std::sqrt(0.5 * (f + std::sqrt(disc)));
    best = std::max(best, std::log(norm) + log_scale);
    if (norm > 1e100) {
      m00 /= norm;
      m01 /= norm;
      m10 /= norm;
      m11 /= norm;
      log_scale += std::log(norm);
    }
  }
  return best;
}

HerglotzValue g00(double a0, HerglotzValue m_plus, HerglotzValue m_minus) {
  if (m_plus.pole) return {0.0, false};
  const cplx inv_minus = m_minus.pole ? cplx(0.0) : 1.0 / m_minus.value;
  const cplx denom = a0 * a0 * m_plus.value - inv_minus;
  if (denom == cplx(0.0)) return {0.0, true};
  return {-1.0 / denom, false};
}

HerglotzValue g00_shifted(cplx z, double a0, double b0, double a_minus1, HerglotzValue m_plus,
                          HerglotzValue m_tilde_minus) {
  if (m_plus.pole || m_tilde_minus.pole) return {0.0, false};
  const cplx denom = z - b0 + a0 * a0 * m_plus.value + a_minus1 * a_minus1 * m_tilde_minus.value;
  if (denom == cplx(0.0)) return {0.0, true};
  return {-1.0 / denom, false};
}

}  // namespace fingap
