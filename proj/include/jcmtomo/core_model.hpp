#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace jcmtomo {

// Frequencies are angular, in kHz (10^3 rad/s); times are in microseconds.
// A phase is always frequency * time * kPhaseScale.
inline constexpr double kPhaseScale = 1e-3;

inline constexpr double kDefaultTailTolerance = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnphysicalBloch : public Error {
 public:
  using Error::Error;
};

/// Physical parameters of the atom + cavity-mode system.
struct JcmConfig {
  double g = 50.0;                    // coupling, angular kHz
  double delta = 0.0;                 // detuning omega - nu, angular kHz
  std::complex<double> alpha = 0.0;   // coherent amplitude of the mode
  double nu = 0.0;                    // mode frequency; 0 = interaction picture
  std::optional<int> fock_cutoff;     // explicit N_max, or automatic when empty

  static JcmConfig from_nbar(double nbar, double g, double delta);

  double nbar() const { return std::norm(alpha); }
  double omega() const { return delta + nu; }

  /// Explicit cutoff if set, otherwise auto_cutoff(nbar, 1e-12).
  int cutoff() const;

  /// Throws InvalidArgument on g <= 0, non-finite values, or cutoff < 1.
  void validate() const;
};

/// Initial-state parameters (<sigma_x>_0, <sigma_y>_0, <sigma_z>_0).
struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  bool is_physical(double tol = 1e-12) const { return norm() <= 1.0 + tol; }

  /// Construct a vector that is guaranteed to lie in the Bloch ball.
  static BlochVector physical(double x, double y, double z, double tol = 1e-12);

  BlochVector operator+(const BlochVector& o) const { return {x + o.x, y + o.y, z + o.z}; }
  BlochVector operator-(const BlochVector& o) const { return {x - o.x, y - o.y, z - o.z}; }
  BlochVector operator*(double k) const { return {k * x, k * y, k * z}; }
};

/// The three measured averages <sigma_z>_t, <a^dag a>_t, <sigma_z a^dag a>_t.
struct MomentVector {
  double sz = 0.0;
  double n = 0.0;
  double szn = 0.0;

  MomentVector operator+(const MomentVector& o) const { return {sz + o.sz, n + o.n, szn + o.szn}; }
  MomentVector operator-(const MomentVector& o) const { return {sz - o.sz, n - o.n, szn - o.szn}; }
  MomentVector operator*(double k) const { return {k * sz, k * n, k * szn}; }
};

struct TimeGrid {
  double t_min = 0.0;
  double t_max = 0.0;
  int steps = 1;

  void validate() const;
  /// steps + 1 equally spaced points from t_min to t_max inclusive
  /// (a single point when t_min == t_max).
  std::vector<double> points() const;
};

/// Omega_n = sqrt(4 (n+1) g^2 + delta^2), angular kHz.
double rabi_frequency(int n, const JcmConfig& cfg);

/// Poisson photon weight e^{-|alpha|^2} |alpha|^{2n} / n!.
double poisson_weight(int n, std::complex<double> alpha);
double poisson_weight(int n, double nbar);

/// Poisson weights for n = 0..count-1.
std::vector<double> poisson_weights(double nbar, int count);

/// Smallest N >= 1 with sum_{n>N} Poisson(nbar)_n < tail_tol.
int auto_cutoff(double nbar, double tail_tol = kDefaultTailTolerance);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace jcmtomo
