#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "jcmtomo/analytic_moments.hpp"
#include "jcmtomo/ml_reconstruct.hpp"
#include "jcmtomo/outcomes.hpp"
#include "jcmtomo/tomography.hpp"

namespace jcmtomo::io {

/// 17 significant digits; round-trips every double.
std::string format_double(double v);

/// Headered CSV "m,a,count,frequency" preceded by "# " metadata lines.
void write_counts_csv(std::ostream& os, const CountRecord& counts, const std::vector<std::string>& metadata);

/// Reads the counts format back. Columns are located by header name;
/// "count" is preferred, "frequency" is used when no count column exists.
CountRecord read_counts_csv(std::istream& is);

/// Inline list "m:a:value,m:a:value,...".
CountRecord parse_outcome_list(const std::string& text);

void write_scan_csv(std::ostream& os, const DeterminantScan& scan, const std::vector<std::string>& metadata);
nlohmann::json scan_to_json(const DeterminantScan& scan);

/// Frozen keys: m, b, det, m_inv, c, cond (m_inv and c are null when singular).
nlohmann::json design_to_json(const DesignSystem& d);
/// Rebuilds a design from the m and b keys.
DesignSystem design_from_json(const nlohmann::json& j);

/// Frozen keys: p, bloch, delta, constraint_active, converged, iterations.
nlohmann::json ml_solution_to_json(const MlSolution& s);

nlohmann::json matrix_to_json(const Eigen::Matrix3d& m);
nlohmann::json bloch_to_json(const BlochVector& s);

}  // namespace jcmtomo::io
