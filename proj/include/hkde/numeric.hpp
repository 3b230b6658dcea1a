#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>

namespace hkde {

using Complex = std::complex<double>;

template <typename Real>
inline constexpr std::complex<Real> kI{Real(0), Real(1)};

// log(1 + z) without losing the low-order bits of small z.
template <typename Real>
std::complex<Real> log1p(const std::complex<Real>& z) {
  const std::complex<Real> w = Real(1) + z;
  if (w == std::complex<Real>(Real(1))) return z;
  return std::log(w) * z / (w - Real(1));
}

// exp(z) - 1, accurate near zero.
template <typename Real>
std::complex<Real> expm1(const std::complex<Real>& z) {
  if (std::abs(z) > Real(0.5)) return std::exp(z) - Real(1);
  const std::complex<Real> half = z / Real(2);
  return Real(2) * std::exp(half) * std::sinh(half);
}

/// Central finite-difference stencil for the n-th derivative (n = 1..4) of f
/// at zero with step h. The truncation error expands in even powers of h.
template <typename Fn>
auto central_difference(const Fn& f, int order, double h) {
  switch (order) {
    case 1:
      return (f(h) - f(-h)) / (2.0 * h);
    case 2:
      return (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    case 3:
      return (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h);
    default:
      return (f(2.0 * h) - 4.0 * f(h) + 6.0 * f(0.0) - 4.0 * f(-h) + f(-2.0 * h)) /
             (h * h * h * h);
  }
}

template <typename Value>
struct DerivativeEstimate {
  Value value{};
  double error = std::numeric_limits<double>::infinity();
};

/// Ridders' polynomial extrapolation of central differences to h -> 0.
/// `h0` should sit well inside the disc where f is analytic; the tableau
/// shrinks the step by 1.4 per row and stops once the error estimate degrades.
template <typename Fn>
auto ridders_derivative(const Fn& f, int order, double h0) {
  using Value = decltype(central_difference(f, order, h0));
  constexpr int kRows = 12;
  constexpr double kCon = 1.4;
  constexpr double kCon2 = kCon * kCon;
  constexpr double kSafe = 2.0;

  std::array<std::array<Value, kRows>, kRows> a{};
  DerivativeEstimate<Value> best;
  double h = h0;
  a[0][0] = central_difference(f, order, h);
  best.value = a[0][0];
  for (int i = 1; i < kRows; ++i) {
    h /= kCon;
    a[0][i] = central_difference(f, order, h);
    double fac = kCon2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kCon2;
      const double err =
          std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (err <= best.error) {
        best.error = err;
        best.value = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * best.error) break;
  }
  return best;
}

}  // namespace hkde
