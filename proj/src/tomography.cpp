#include "jcmtomo/tomography.hpp"

#include <algorithm>
#include <cmath>

namespace jcmtomo {

InversionResult invert_moments(const MomentVector& moments, const DesignSystem& design) {
  const Eigen::Vector3d rhs = Eigen::Vector3d(moments.sz, moments.n, moments.szn) - design.b;
  const Eigen::Vector3d s = design.inverse() * rhs;

  InversionResult r;
  r.bloch = {s(0), s(1), s(2)};
  r.norm = s.norm();
  r.physical = r.norm <= 1.0 + 1e-6;
  r.condition = design.cond;
  r.det = design.det;
  return r;
}

DeterminantScan scan_determinant(const JcmConfig& cfg, const TimeGrid& grid, std::optional<double> noise_sigma) {
  cfg.validate();
  const std::vector<double> times = grid.points();
  DeterminantScan scan;
  scan.averaged = noise_sigma.has_value();
  scan.rows.reserve(times.size());
  const DeterminantEvaluator det(cfg);
  for (double t : times) {
    const double v = noise_sigma ? averaged_determinant(cfg, {t, *noise_sigma}) : det(t);
    scan.rows.push_back({t, v});
  }
  double best = -1.0;
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    const double a = std::abs(scan.rows[i].value);
    if (a > best) {
      best = a;
      scan.argmax = i;
    }
  }
  return scan;
}

double pick_time(const JcmConfig& cfg, const TimeGrid& grid) {
  const DeterminantScan scan = scan_determinant(cfg, grid);
  const std::size_t k = scan.argmax;
  const double peak = std::abs(scan.rows[k].value);
  if (peak < kSingularThreshold) throw AllSingular("|D| stays below 1e-12 on the whole grid");
  if (scan.rows.size() < 3) return scan.rows[k].t;

  double lo = scan.rows[k == 0 ? 0 : k - 1].t;
  double hi = scan.rows[std::min(k + 1, scan.rows.size() - 1)].t;
  const DeterminantEvaluator det(cfg);
  const auto f = [&](double t) { return std::abs(det(t)); };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-9 * std::max(1.0, std::abs(hi))) {
    if (f1 >= f2) {  // ties move toward smaller t
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double t_ref = 0.5 * (lo + hi);
  // Never return a point worse than the grid sample.
  return f(t_ref) >= peak ? t_ref : scan.rows[k].t;
}

CollapseRevival detect_collapse_revival(const DeterminantScan& scan, double window) {
  CollapseRevival cr;
  const auto& rows = scan.rows;
  if (rows.size() < 3) return cr;
  cr.global_max = std::abs(rows[scan.argmax].value);
  if (cr.global_max <= 0.0) return cr;

  const double dt = rows[1].t - rows[0].t;
  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(window / dt)));
  const auto envelope = [&](std::size_t i) {
    const std::size_t a = i > half ? i - half : 0;
    const std::size_t b = std::min(rows.size() - 1, i + half);
    double e = 0.0;
    for (std::size_t j = a; j <= b; ++j) e = std::max(e, std::abs(rows[j].value));
    return e;
  };

  std::size_t collapse = rows.size();
  for (std::size_t i = scan.argmax; i < rows.size(); ++i) {
    if (envelope(i) < 0.1 * cr.global_max) {
      collapse = i;
      break;
    }
  }
  if (collapse == rows.size()) return cr;
  cr.collapse_start = rows[collapse].t;

  std::size_t best = collapse;
  for (std::size_t i = collapse; i < rows.size(); ++i)
    if (std::abs(rows[i].value) > std::abs(rows[best].value)) best = i;
  cr.revival_time = rows[best].t;
  cr.revival_ratio = std::abs(rows[best].value) / cr.global_max;
  cr.present = cr.revival_ratio > 0.3 && best + 1 < rows.size();
  return cr;
}

}  // namespace jcmtomo
