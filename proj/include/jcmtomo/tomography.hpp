#pragma once

#include <optional>
#include <vector>

#include "jcmtomo/analytic_moments.hpp"

namespace jcmtomo {

class AllSingular : public Error {
 public:
  using Error::Error;
};

struct InversionResult {
  BlochVector bloch;  // raw, never clipped
  double norm = 0.0;
  bool physical = false;  // norm <= 1 + 1e-6
  double condition = 0.0;
  double det = 0.0;
};

/// bloch = M^{-1} (moments - B). Throws SingularDesign.
InversionResult invert_moments(const MomentVector& moments, const DesignSystem& design);

struct DeterminantRow {
  double t = 0.0;      // t, or t0 when averaged
  double value = 0.0;  // D, or D-bar
};

struct DeterminantScan {
  std::vector<DeterminantRow> rows;
  bool averaged = false;
  std::size_t argmax = 0;  // index of the largest |value|, first on ties
  const DeterminantRow& peak() const { return rows.at(argmax); }
};

/// D(t) over the grid, or D-bar(t0) when a noise variance is given
/// (the grid then supplies t0).
DeterminantScan scan_determinant(const JcmConfig& cfg, const TimeGrid& grid,
                                 std::optional<double> noise_sigma = std::nullopt);

/// Grid argmax of |D| refined by golden-section search between the
/// neighbouring grid points. Throws AllSingular when max |D| < 1e-12.
double pick_time(const JcmConfig& cfg, const TimeGrid& grid);

struct CollapseRevival {
  bool present = false;
  double global_max = 0.0;
  double collapse_start = 0.0;  // first t after the peak where the envelope < 10 % of max
  double revival_time = 0.0;    // later local max
  double revival_ratio = 0.0;   // revival height / global max
};

/// Collapse: the running-max envelope of |D| (half-width `window` us) drops
/// below 10 % of the global max after the peak. Revival: a later interior
/// maximum of |D| exceeding 30 % of the global max.
CollapseRevival detect_collapse_revival(const DeterminantScan& scan, double window = 5.0);

}  // namespace jcmtomo
