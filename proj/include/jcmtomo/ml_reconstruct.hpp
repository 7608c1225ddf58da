#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "jcmtomo/analytic_moments.hpp"
#include "jcmtomo/outcomes.hpp"

namespace jcmtomo {

enum class MlObjective {
  likelihood,        // maximize sum nu ln p
  relative_entropy,  // minimize sum nu ln(nu / p); same optimum
};

struct MlOptions {
  MlObjective objective = MlObjective::likelihood;
  int max_iterations = 100000;     // total Newton steps across all multiplier updates
  double constraint_tol = 1e-12;   // |q(p) - 1| at an active constraint
  double stationarity_tol = 1e-14; // half squared Newton decrement of the inner problem
  double regularizer = 1e-12;      // tie-break toward minimum-norm p
  double max_multiplier = 1e12;
};

struct MlSolution {
  ProbTable p;
  BlochVector bloch;
  double log_likelihood = 0.0;
  bool constraint_active = false;
  double constraint_value = 0.0;  // (u - B)^T C (u - B)
  double delta = 0.0;
  double multiplier = 0.0;        // Lagrange multiplier of the Bloch-ball constraint
  double regularizer = 0.0;       // value actually used for tie-breaking
  int iterations = 0;
  bool converged = false;
};

/// (sum a p, sum m p, sum a m p) over the support.
Eigen::Vector3d u_vector(const ProbTable& p);

/// (u - B)^T C (u - B) with C = (M M^T)^{-1}; <= 1 iff the implied Bloch
/// vector lies in the unit ball. Throws SingularDesign.
double bloch_constraint_value(const ProbTable& p, const DesignSystem& design);

/// Bloch vector implied by p: M^{-1} (u(p) - B).
BlochVector implied_bloch(const ProbTable& p, const DesignSystem& design);

/// sum nu ln p over entries with nu > 0.
double log_likelihood(const CountRecord& nu, const ProbTable& p);

/// 1 - sum sqrt(nu p), matched by (m, a). Throws SupportMismatch.
double distance_delta(const CountRecord& nu, const ProbTable& p);

/// Maximum-likelihood probabilities on the support of `nu` subject to the
/// Bloch-ball constraint. Returns p = nu exactly when nu already satisfies
/// it. Throws SingularDesign, EmptySupport; budget exhaustion or an empty
/// feasible set yields converged = false with the best iterate.
MlSolution ml_fit(const CountRecord& nu, const DesignSystem& design, const MlOptions& opts = {});

struct KktResiduals {
  double projected_gradient = 0.0;     // |grad L| tangent to the simplex and the active constraint
  double complementary_slackness = 0.0;  // |multiplier * (q - 1)|
  double dual_sign = 0.0;              // largest violation of the bound multipliers at p = 0
};

/// First-order optimality residuals of a fitted solution.
KktResiduals kkt_residuals(const CountRecord& nu, const DesignSystem& design, const MlSolution& sol);

/// Frequencies with nu_{+1}(m) = nu_{-1}(m) for m = 1, 2, 3 built from the
/// m = 1 and m = 2 values; the m = 3 value fills the remaining mass.
/// Empty when that value would be negative.
std::optional<CountRecord> symmetric_frequencies(double nu1, double nu2);

struct SymmetricGridCell {
  double nu1 = 0.0;
  double nu2 = 0.0;
  std::optional<MlSolution> fit;  // empty for unphysical inputs
};

std::vector<SymmetricGridCell> run_symmetric_grid(const DesignSystem& design, const std::vector<double>& values,
                                                  const MlOptions& opts = {});

}  // namespace jcmtomo
