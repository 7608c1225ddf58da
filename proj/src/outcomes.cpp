#include "jcmtomo/outcomes.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace jcmtomo {

double CountRecord::total() const {
  CompensatedSum s;
  for (const auto& e : entries) s.add(e.value);
  return s.value();
}

CountRecord CountRecord::normalized_copy() const {
  if (entries.empty()) throw EmptySupport("outcome table has no entries");
  const double tot = total();
  if (!(tot > 0.0)) throw EmptySupport("outcome table has zero total weight");
  CountRecord out = *this;
  for (auto& e : out.entries) e.value /= tot;
  out.normalized = true;
  return out;
}

void CountRecord::validate() const {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : entries) {
    if (e.a != 1 && e.a != -1) throw InvalidArgument("atomic outcome must be +1 or -1");
    if (e.m < 0) throw InvalidArgument("photon number must be >= 0");
    if (!std::isfinite(e.value) || e.value < 0.0) throw InvalidArgument("outcome values must be finite and >= 0");
    if (!seen.emplace(e.m, e.a).second)
      throw InvalidArgument("duplicate outcome (m=" + std::to_string(e.m) + ", a=" + std::to_string(e.a) + ")");
  }
}

void CountRecord::sort() {
  std::sort(entries.begin(), entries.end(), [](const Outcome& l, const Outcome& r) {
    return l.m != r.m ? l.m < r.m : l.a > r.a;
  });
}

}  // namespace jcmtomo
