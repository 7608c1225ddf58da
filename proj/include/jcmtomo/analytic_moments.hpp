#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "jcmtomo/core_model.hpp"

namespace jcmtomo {

inline constexpr double kSingularThreshold = 1e-12;

class SingularDesign : public Error {
 public:
  using Error::Error;
};

/// Which coefficient the photon-weighted correlator series uses on c_{n+1}.
///   printed: (2n+3) c_{n+1}, the closed form as commonly quoted; reproduces
///            the reference design matrices digit for digit.
///   exact:   (2n+1) c_{n+1}, agrees with the propagated joint state.
/// The two forms differ only in the z-coefficient and offset of the third row.
enum class SeriesForm { printed, exact };

/// How a design system maps Bloch vectors to moments.
///   printed:    printed series, spin-1/2 readout units, vector taken at face
///               value (the reference numerical examples).
///   calibrated: exact series rescaled to Pauli units, so that
///               u = M s + B holds for the physical Bloch vector s and for
///               moments formed with atomic outcomes a = +-1.
enum class DesignForm { printed, calibrated };

const char* to_string(SeriesForm f);
const char* to_string(DesignForm f);
SeriesForm series_form_from_string(const std::string& s);
DesignForm design_form_from_string(const std::string& s);

struct TimeNoise {
  double t0 = 0.0;     // us
  double sigma = 0.0;  // variance of the interaction time, us^2
};

/// Affine map moments = m * s + b produced by the closed-form series.
struct SeriesAffine {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
};

SeriesAffine series_affine(const JcmConfig& cfg, double t, SeriesForm form = SeriesForm::exact);

MomentVector series_moments(const BlochVector& s, const JcmConfig& cfg, double t,
                            SeriesForm form = SeriesForm::exact);
double moment_sz(const BlochVector& s, const JcmConfig& cfg, double t, SeriesForm form = SeriesForm::exact);
double moment_n(const BlochVector& s, const JcmConfig& cfg, double t, SeriesForm form = SeriesForm::exact);
double moment_szn(const BlochVector& s, const JcmConfig& cfg, double t, SeriesForm form = SeriesForm::exact);

struct DesignSystem {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double det = 0.0;
  std::optional<Eigen::Matrix3d> m_inv;
  std::optional<Eigen::Matrix3d> c;  // (M M^T)^{-1}
  double cond = 0.0;                 // spectral condition number of M
  JcmConfig cfg;
  double t = 0.0;
  DesignForm form = DesignForm::printed;

  bool singular() const { return !m_inv.has_value(); }
  /// Throws SingularDesign when the inverse is absent.
  const Eigen::Matrix3d& inverse() const;
  const Eigen::Matrix3d& constraint_matrix() const;
};

/// Fills m_inv and c only when |det| > kSingularThreshold; check singular().
DesignSystem build_design(const JcmConfig& cfg, double t, DesignForm form = DesignForm::printed);

/// Design system from an explicit (m, b), e.g. read back from a file.
DesignSystem design_from_matrix(const Eigen::Matrix3d& m, const Eigen::Vector3d& b);

/// Closed-form det M as a double sum over photon numbers.
double determinant(const JcmConfig& cfg, double t);

/// determinant(cfg, t) with the Poisson weights and Rabi frequencies
/// computed once, for repeated evaluation at many times.
class DeterminantEvaluator {
 public:
  explicit DeterminantEvaluator(const JcmConfig& cfg);
  double operator()(double t) const;

 private:
  std::vector<double> c_;
  std::vector<double> omega_;
  double prefactor_ = 0.0;
  mutable std::vector<double> pop_, osc_;
};

/// |det(M) - determinant(cfg, t)| for the printed-form design.
double determinant_consistency(const JcmConfig& cfg, double t);

/// Determinant averaged over a Gaussian interaction time.
double averaged_determinant(const JcmConfig& cfg, const TimeNoise& noise);

}  // namespace jcmtomo
