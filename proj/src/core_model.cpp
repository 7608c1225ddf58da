#include "jcmtomo/core_model.hpp"

#include <cmath>
#include <limits>

namespace jcmtomo {

JcmConfig JcmConfig::from_nbar(double nbar, double g, double delta) {
  if (!(nbar >= 0.0)) throw InvalidArgument("nbar must be non-negative");
  JcmConfig cfg;
  cfg.g = g;
  cfg.delta = delta;
  cfg.alpha = std::sqrt(nbar);
  return cfg;
}

int JcmConfig::cutoff() const {
  if (fock_cutoff) return *fock_cutoff;
  return auto_cutoff(nbar());
}

void JcmConfig::validate() const {
  if (!std::isfinite(g) || g <= 0.0) throw InvalidArgument("coupling g must be finite and > 0");
  if (!std::isfinite(delta)) throw InvalidArgument("detuning must be finite");
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
    throw InvalidArgument("alpha must be finite");
  if (!std::isfinite(nu)) throw InvalidArgument("mode frequency must be finite");
  if (fock_cutoff && *fock_cutoff < 1) throw InvalidArgument("fock cutoff must be >= 1");
}

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

BlochVector BlochVector::physical(double x, double y, double z, double tol) {
  BlochVector s{x, y, z};
  if (!(s.norm() <= 1.0 + tol))
    throw UnphysicalBloch("Bloch vector norm " + std::to_string(s.norm()) + " exceeds 1");
  return s;
}

void TimeGrid::validate() const {
  if (!std::isfinite(t_min) || !std::isfinite(t_max)) throw InvalidArgument("time grid bounds must be finite");
  if (t_min > t_max) throw InvalidArgument("time grid requires t_min <= t_max");
  if (steps < 1) throw InvalidArgument("time grid requires steps >= 1");
}

std::vector<double> TimeGrid::points() const {
  validate();
  if (t_min == t_max) return {t_min};
  std::vector<double> out(static_cast<std::size_t>(steps) + 1);
  const double h = (t_max - t_min) / steps;
  for (int i = 0; i <= steps; ++i) out[static_cast<std::size_t>(i)] = t_min + h * i;
  out.back() = t_max;
  return out;
}

double rabi_frequency(int n, const JcmConfig& cfg) {
  return std::sqrt(4.0 * (n + 1) * cfg.g * cfg.g + cfg.delta * cfg.delta);
}

double poisson_weight(int n, double nbar) {
  if (n < 0) return 0.0;
  if (nbar == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-nbar + n * std::log(nbar) - std::lgamma(n + 1.0));
}

double poisson_weight(int n, std::complex<double> alpha) { return poisson_weight(n, std::norm(alpha)); }

std::vector<double> poisson_weights(double nbar, int count) {
  std::vector<double> w(static_cast<std::size_t>(count > 0 ? count : 0));
  for (int n = 0; n < count; ++n) w[static_cast<std::size_t>(n)] = poisson_weight(n, nbar);
  return w;
}

int auto_cutoff(double nbar, double tail_tol) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw InvalidArgument("nbar must be finite and >= 0");
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw InvalidArgument("tail tolerance must lie in (0, 1)");
  if (nbar == 0.0) return 1;
  // Tail beyond N summed directly: terms past the mode decrease geometrically,
  // so summing until they drop below eps*tail is exact to rounding.
  auto tail = [nbar](int N) {
    CompensatedSum s;
    for (int k = N + 1;; ++k) {
      const double w = poisson_weight(k, nbar);
      s.add(w);
      if (k > nbar && w < s.value() * 1e-18) break;
      if (w == 0.0 && k > nbar) break;
    }
    return s.value();
  };
  int N = 1;
  while (tail(N) >= tail_tol) ++N;
  return N;
}

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v))
    comp_ += (sum_ - t) + v;
  else
    comp_ += (v - t) + sum_;
  sum_ = t;
}

}  // namespace jcmtomo
