#pragma once

// Reference computations used only by tests. Each is written independently
// of the library path it checks.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

// Poisson tail beyond N by brute-force summation of explicit factorial terms.
inline double poisson_tail(double nbar, int N) {
  long double term = std::exp(static_cast<long double>(-nbar));  // n = 0
  long double head = 0.0L;
  for (int n = 0; n <= N; ++n) {
    head += term;
    term *= nbar / (n + 1);
  }
  long double tail = 0.0L;
  for (int n = N + 1; n < N + 2000; ++n) {
    tail += term;
    term *= nbar / (n + 1);
    if (term < 1e-40L) break;
  }
  return static_cast<double>(tail);
}

// Smallest N >= 1 whose Poisson tail is below tol, by linear search.
inline int cutoff_by_search(double nbar, double tol) {
  int N = 1;
  while (poisson_tail(nbar, N) >= tol) ++N;
  return N;
}

// det M straight from its definition as the double sum, written with
// explicit factorials instead of Poisson weights.
inline double determinant_direct(double nbar, double g, double delta, double t, int N) {
  auto omega = [&](int n) { return std::sqrt(4.0 * (n + 1) * g * g + delta * delta); };
  long double sum = 0.0L;
  for (int n = 0; n <= N; ++n) {
    for (int m = 0; m <= N; ++m) {
      const long double w = std::exp(-2.0L * nbar) * std::pow(static_cast<long double>(nbar), n + m + 1) /
                            (std::tgamma(n + 1.0L) * std::tgamma(m + 1.0L));
      const double on = omega(n) * 1e-3, om = omega(m) * 1e-3;
      const double a = std::pow(std::sin(on * t / 2), 2) * std::sin(om * t) / (on * on * om);
      const double b = std::pow(std::sin(om * t / 2), 2) * std::sin(on * t) / (om * om * on);
      sum += w * (n - m) * (a - b);
    }
  }
  return static_cast<double>(4.0 * delta * 1e-3 * g * g * 1e-6 * sum);
}

// Monte-Carlo mean and standard error of f(t) for t ~ Normal(t0, variance).
template <class F>
std::pair<double, double> gaussian_mc(F f, double t0, double variance, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(t0, std::sqrt(variance));
  double mean = 0.0, m2 = 0.0;
  for (int i = 1; i <= samples; ++i) {
    const double x = f(dist(rng));
    const double d = x - mean;
    mean += d / i;
    m2 += d * (x - mean);
  }
  return {mean, std::sqrt(m2 / (samples - 1) / samples)};
}

// Dense matrix exponential of the Hermitian generator (Pade, Eigen unsupported).
inline Eigen::MatrixXcd expm_propagator(const Eigen::MatrixXcd& h, double t_scaled) {
  const Eigen::MatrixXcd gen = std::complex<double>(0.0, -t_scaled) * h;
  return gen.exp();
}

}  // namespace oracle
