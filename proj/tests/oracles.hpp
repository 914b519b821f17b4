// Reference implementations used only by the tests.  Each one is computed by a route
// that shares no code with the library.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

// explicit sum: P_n(x) = 2^-n sum_k (-1)^k C(n,k) C(2n-2k, n) x^(n-2k)
inline double legendre(int n, double x) {
  double s = 0.0;
  for (int k = 0; 2 * k <= n; ++k)
    s += ((k % 2) ? -1.0 : 1.0) * binomial(n, k) * binomial(2 * n - 2 * k, n) * std::pow(x, n - 2 * k);
  return s / std::pow(2.0, n);
}

inline double double_factorial(int n) {
  double f = 1.0;
  for (int i = n; i > 1; i -= 2) f *= i;
  return f;
}

// coefficient of P_n in x^m: (2n+1) m! / (2^((m-n)/2) ((m-n)/2)! (m+n+1)!!)
inline double monomial_coefficient(int m, int n) {
  if (n > m || (m - n) % 2) return 0.0;
  const int h = (m - n) / 2;
  return (2.0 * n + 1.0) * factorial(m) / (std::pow(2.0, h) * factorial(h) * double_factorial(m + n + 1));
}

// E[z^p], z ~ N(0, 1)
inline double gaussian_moment(int p) { return p % 2 ? 0.0 : double_factorial(p - 1); }

// composite Simpson on [lo, hi] with `panels` (even) subintervals
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double s = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

// 2-d tensor Simpson over [lo, hi]^2
inline double simpson2(const std::function<double(double, double)>& f, double lo, double hi, int panels) {
  return simpson([&](double u) { return simpson([&](double v) { return f(u, v); }, lo, hi, panels); }, lo, hi,
                 panels);
}

// psi summed straight from its definition in plain double
inline double psi_naive(int d, double x) {
  const long a = 6L * d * d + 1;
  double s = std::max(x + a, 0.0) - 1.0;
  for (long n = 1; n <= a; ++n) s += 2.0 * ((n % 2) ? -1.0 : 1.0) * std::max(x + a - 2.0 * n, 0.0);
  return s;
}

// the printed-sign variant of the exp identity evaluates to 2 + 2z - e^z for z < 0
inline double identity_minus_sign(double z) { return z >= 0.0 ? std::exp(z) : 2.0 + 2.0 * z - std::exp(z); }

}  // namespace oracle
