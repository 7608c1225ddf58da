#include "jcmtomo/analytic_moments.hpp"

#include <cmath>
#include <vector>

namespace jcmtomo {

namespace {

struct Ladder {
  std::vector<double> c;      // Poisson weights, indices 0..N+1
  std::vector<double> omega;  // Rabi frequencies, indices 0..N
  int cutoff = 0;
};

Ladder make_ladder(const JcmConfig& cfg) {
  Ladder l;
  l.cutoff = cfg.cutoff();
  l.c = poisson_weights(cfg.nbar(), l.cutoff + 2);
  l.omega.resize(static_cast<std::size_t>(l.cutoff) + 1);
  for (int n = 0; n <= l.cutoff; ++n) l.omega[static_cast<std::size_t>(n)] = rabi_frequency(n, cfg);
  return l;
}

}  // namespace

const char* to_string(SeriesForm f) { return f == SeriesForm::printed ? "printed" : "exact"; }
const char* to_string(DesignForm f) { return f == DesignForm::printed ? "printed" : "calibrated"; }

SeriesForm series_form_from_string(const std::string& s) {
  if (s == "printed") return SeriesForm::printed;
  if (s == "exact") return SeriesForm::exact;
  throw InvalidArgument("unknown series form '" + s + "' (expected printed|exact)");
}

DesignForm design_form_from_string(const std::string& s) {
  if (s == "printed") return DesignForm::printed;
  if (s == "calibrated") return DesignForm::calibrated;
  throw InvalidArgument("unknown design form '" + s + "' (expected printed|calibrated)");
}

SeriesAffine series_affine(const JcmConfig& cfg, double t, SeriesForm form) {
  cfg.validate();
  const Ladder l = make_ladder(cfg);
  const double g = cfg.g;
  const double g2 = g * g;
  const std::complex<double> alpha = cfg.alpha;

  // Accumulators: x/y coefficients of rows 1 and 3, the photon-exchange sum
  // shared by the z coefficients of rows 1 and 2, the row-3 z sum, b1 and b3.
  CompensatedSum x1, y1, x3, y3, exch, z3, b1, b3;
  for (int n = 0; n <= l.cutoff; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double om = l.omega[i];
    const double half_phase = 0.5 * om * t * kPhaseScale;
    const double sn = std::sin(half_phase);
    const double cs = std::cos(half_phase);
    const double cn = l.c[i];
    const double cn1 = l.c[i + 1];
    const double f = sn * sn / (0.25 * om * om);  // sin^2(Omega t/2) / (Omega/2)^2

    const std::complex<double> amp = alpha * std::complex<double>(cs, cfg.delta * sn / om);
    // {A - c.c.} = 2i Im A and {A + c.c.} = 2 Re A fold the prefactors to reals.
    const double lin = cn * sn / om;
    x1.add(4.0 * g * lin * amp.imag());
    y1.add(4.0 * g * lin * amp.real());
    x3.add(2.0 * g * (2 * n + 1) * lin * amp.imag());
    y3.add(2.0 * g * (2 * n + 1) * lin * amp.real());

    exch.add((n + 1) * (cn1 + cn) * f);
    b1.add(0.5 * g2 * (n + 1) * (cn1 - cn) * f);

    const double k = form == SeriesForm::printed ? (2 * n + 3) : (2 * n + 1);
    z3.add(n * cn - 0.5 * (n + 1) * g2 * (k * cn1 + (2 * n + 1) * cn) * f);
    b3.add(0.25 * g2 * (n + 1) * (k * cn1 - (2 * n + 1) * cn) * f);
  }

  SeriesAffine a;
  const double ex = g2 * exch.value();
  a.m << x1.value(), y1.value(), 1.0 - ex,
        -x1.value(), -y1.value(), ex,
         x3.value(), y3.value(), z3.value();
  a.b << b1.value(), cfg.nbar() - b1.value(), b3.value();
  return a;
}

MomentVector series_moments(const BlochVector& s, const JcmConfig& cfg, double t, SeriesForm form) {
  const SeriesAffine a = series_affine(cfg, t, form);
  const Eigen::Vector3d v = a.m * Eigen::Vector3d(s.x, s.y, s.z) + a.b;
  return {v(0), v(1), v(2)};
}

double moment_sz(const BlochVector& s, const JcmConfig& cfg, double t, SeriesForm form) {
  return series_moments(s, cfg, t, form).sz;
}

double moment_n(const BlochVector& s, const JcmConfig& cfg, double t, SeriesForm form) {
  return series_moments(s, cfg, t, form).n;
}

double moment_szn(const BlochVector& s, const JcmConfig& cfg, double t, SeriesForm form) {
  return series_moments(s, cfg, t, form).szn;
}

const Eigen::Matrix3d& DesignSystem::inverse() const {
  if (!m_inv) throw SingularDesign("design matrix is singular (|D| <= 1e-12); cannot invert");
  return *m_inv;
}

const Eigen::Matrix3d& DesignSystem::constraint_matrix() const {
  if (!c) throw SingularDesign("design matrix is singular (|D| <= 1e-12); no Bloch-ball constraint");
  return *c;
}

namespace {

void finish_design(DesignSystem& d) {
  d.det = d.m.determinant();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(d.m);
  const auto& sv = svd.singularValues();
  d.cond = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
  if (std::abs(d.det) > kSingularThreshold) {
    d.m_inv = d.m.inverse();
    d.c = (d.m * d.m.transpose()).inverse();
  }
}

}  // namespace

DesignSystem build_design(const JcmConfig& cfg, double t, DesignForm form) {
  const SeriesForm series = form == DesignForm::printed ? SeriesForm::printed : SeriesForm::exact;

  DesignSystem d;
  d.cfg = cfg;
  d.t = t;
  d.form = form;

  const auto eval = [&](const BlochVector& s) {
    const MomentVector v = series_moments(s, cfg, t, series);
    return Eigen::Vector3d(v.sz, v.n, v.szn);
  };
  d.b = eval({0.0, 0.0, 0.0});
  d.m.col(0) = eval({1.0, 0.0, 0.0}) - d.b;
  d.m.col(1) = eval({0.0, 1.0, 0.0}) - d.b;
  d.m.col(2) = eval({0.0, 0.0, 1.0}) - d.b;

  if (form == DesignForm::calibrated) {
    // Series unknowns are <S_i> = s_i / 2 and its spin readout is +-1/2;
    // Pauli readouts are twice the spin rows.
    const Eigen::Vector3d readout(2.0, 1.0, 2.0);
    d.m = readout.asDiagonal() * d.m * 0.5;
    d.b = readout.asDiagonal() * d.b;
  }
  finish_design(d);
  return d;
}

DesignSystem design_from_matrix(const Eigen::Matrix3d& m, const Eigen::Vector3d& b) {
  DesignSystem d;
  d.m = m;
  d.b = b;
  finish_design(d);
  return d;
}

DeterminantEvaluator::DeterminantEvaluator(const JcmConfig& cfg) {
  cfg.validate();
  Ladder l = make_ladder(cfg);
  c_ = std::move(l.c);
  omega_ = std::move(l.omega);
  prefactor_ = 4.0 * cfg.delta * cfg.g * cfg.g * cfg.nbar();
  pop_.resize(omega_.size());
  osc_.resize(omega_.size());
}

double DeterminantEvaluator::operator()(double t) const {
  const std::size_t N = omega_.size();
  for (std::size_t n = 0; n < N; ++n) {  // sin^2(Omega t/2)/Omega^2, sin(Omega t)/Omega
    const double om = omega_[n];
    const double s = std::sin(0.5 * om * t * kPhaseScale);
    pop_[n] = s * s / (om * om);
    osc_[n] = std::sin(om * t * kPhaseScale) / om;
  }
  // The summand is antisymmetric in (n, m); sum the upper triangle twice.
  CompensatedSum sum;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t m = n + 1; m < N; ++m) {
      const double w = c_[n] * c_[m] * (static_cast<double>(n) - static_cast<double>(m));
      sum.add(w * (pop_[n] * osc_[m] - pop_[m] * osc_[n]));
    }
  }
  return 2.0 * prefactor_ * sum.value() + 0.0;  // + 0.0 drops the sign of zero
}

double determinant(const JcmConfig& cfg, double t) { return DeterminantEvaluator(cfg)(t); }

double determinant_consistency(const JcmConfig& cfg, double t) {
  const DesignSystem d = build_design(cfg, t, DesignForm::printed);
  return std::abs(d.det - determinant(cfg, t));
}

double averaged_determinant(const JcmConfig& cfg, const TimeNoise& noise) {
  cfg.validate();
  if (!(noise.sigma >= 0.0)) throw InvalidArgument("time-noise variance must be >= 0");
  const Ladder l = make_ladder(cfg);
  const auto N = static_cast<std::size_t>(l.cutoff) + 1;
  const double t0 = noise.t0;
  const double half_var = 0.5 * noise.sigma * kPhaseScale * kPhaseScale;

  // Gaussian average of sin(f t) is exp(-sigma f^2 / 2) sin(f t0).
  const auto damped_sin = [&](double f) {
    return std::exp(-half_var * f * f) * std::sin(f * t0 * kPhaseScale);
  };
  const auto w = [&](double on, double om) {
    return (2.0 * damped_sin(om) - damped_sin(om + on) - damped_sin(om - on)) / (4.0 * on * on * om);
  };

  CompensatedSum sum;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t m = 0; m < N; ++m) {
      if (n == m) continue;
      const double weight = l.c[n] * l.c[m] * (static_cast<double>(n) - static_cast<double>(m));
      sum.add(weight * (w(l.omega[n], l.omega[m]) - w(l.omega[m], l.omega[n])));
    }
  }
  return 4.0 * cfg.delta * cfg.g * cfg.g * cfg.nbar() * sum.value() + 0.0;
}

}  // namespace jcmtomo
