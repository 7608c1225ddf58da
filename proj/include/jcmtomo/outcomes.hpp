#pragma once

#include <vector>

#include "jcmtomo/core_model.hpp"

namespace jcmtomo {

class EmptySupport : public Error {
 public:
  using Error::Error;
};

class SupportMismatch : public Error {
 public:
  using Error::Error;
};

/// One joint outcome: m photons registered while the atom read a = +1 or -1.
struct Outcome {
  int m = 0;
  int a = 1;
  double value = 0.0;  // count, frequency or probability
};

/// Joint outcome table. Used both for raw counts / frequencies and for
/// model probabilities; the support is exactly the listed entries.
struct CountRecord {
  std::vector<Outcome> entries;
  bool normalized = false;

  double total() const;
  /// Copy with values divided by their total. Throws EmptySupport when there
  /// are no entries or the total is zero.
  CountRecord normalized_copy() const;
  /// Throws InvalidArgument on duplicate (m, a), a not in {+1, -1}, m < 0,
  /// or negative / non-finite values.
  void validate() const;
  /// Entries sorted by (m, a descending), the canonical on-disk order.
  void sort();
};

using ProbTable = CountRecord;

}  // namespace jcmtomo
