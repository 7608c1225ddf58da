#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jcmtomo/analytic_moments.hpp"
#include "jcmtomo/core_model.hpp"
#include "jcmtomo/outcomes.hpp"

namespace jcmtomo {

/// Normalization of the spin operators: sigma_z eigenvalues +-1 (pauli) or
/// +-1/2 (half). Applies to the initial expectations and to the readout.
enum class SpinConvention { pauli, half };

inline double spin_scale(SpinConvention c) { return c == SpinConvention::pauli ? 1.0 : 0.5; }
const char* to_string(SpinConvention c);

/// Density matrix on atom (x) Fock space, truncated at photon number `cutoff`.
/// Basis index: level * (cutoff + 1) + n with level 0 = |+>, level 1 = |->.
struct JointState {
  Eigen::MatrixXcd rho;
  int cutoff = 0;

  int levels() const { return cutoff + 1; }
  Eigen::Index index(int level, int n) const { return static_cast<Eigen::Index>(level * (cutoff + 1) + n); }
  double trace() const { return rho.trace().real(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;
  double purity() const;
};

/// p[m][0] for a = +1, p[m][1] for a = -1, m = 0..cutoff.
struct JointDistribution {
  std::vector<std::array<double, 2>> p;

  double total() const;
  ProbTable to_table() const;
};

/// rho_S(s) (x) |alpha><alpha|, with the coherent state truncated at the
/// config cutoff and renormalized. Throws UnphysicalBloch if |s| > 1 + 1e-12.
JointState initial_state(const BlochVector& s, const JcmConfig& cfg);

/// Closed-form JC propagator applied as U rho U^dag.
JointState evolve_analytic(const JointState& state, const JcmConfig& cfg, double t);

/// Truncated JC Hamiltonian for the given spin normalization (angular kHz).
Eigen::MatrixXcd hamiltonian(const JcmConfig& cfg, int cutoff, SpinConvention convention);

/// Propagation by exact diagonalization of the JC ladder blocks.
JointState evolve_numeric(const JointState& state, const JcmConfig& cfg, double t,
                          SpinConvention convention = SpinConvention::half);

MomentVector oracle_moments(const JointState& state, SpinConvention convention);

JointDistribution joint_distribution(const JointState& state);

/// Reproducible multinomial draw (mt19937_64, inverse CDF). Returns counts for
/// every (m, a) of the distribution, zeros included, in canonical order.
CountRecord sample_counts(const JointDistribution& dist, std::int64_t shots, std::uint64_t seed);

/// Evaluates the closed-form moments for the series unknowns.
using SeriesEvaluator = std::function<MomentVector(const BlochVector&, const JcmConfig&, double)>;

struct ConventionDeviation {
  SpinConvention convention = SpinConvention::half;
  std::array<double, 3> per_moment{0.0, 0.0, 0.0};  // max |series - oracle| over grid and basis
  double max() const;
};

struct CalibrationReport {
  ConventionDeviation pauli;
  ConventionDeviation half;
  SpinConvention chosen = SpinConvention::half;
  bool matched = false;
  bool discriminating = true;  // false when both candidates agree
  double tolerance = 1e-6;
  std::string summary() const;
};

class NoConventionMatches : public Error {
 public:
  NoConventionMatches(const std::string& msg, CalibrationReport report)
      : Error(msg), report_(std::move(report)) {}
  const CalibrationReport& report() const { return report_; }

 private:
  CalibrationReport report_;
};

/// Compares the oracle against the series evaluator for both spin
/// conventions over basis Bloch vectors {0, e_x, e_y, e_z} and the grid.
CalibrationReport calibration_report(const JcmConfig& cfg, const TimeGrid& grid,
                                     const SeriesEvaluator& series, double tol = 1e-6);
CalibrationReport calibration_report(const JcmConfig& cfg, const TimeGrid& grid,
                                     SeriesForm form = SeriesForm::exact, double tol = 1e-6);

/// Throws NoConventionMatches when neither candidate meets the tolerance.
CalibrationReport calibrate_convention(const JcmConfig& cfg, const TimeGrid& grid,
                                       SeriesForm form = SeriesForm::exact, double tol = 1e-6);

}  // namespace jcmtomo
