#pragma once

#include <span>

namespace ebrake {

struct MannWhitneyResult {
  double u = 0.0;  // statistic of the first sample: #(a > b) + 0.5 #(a == b)
  double p_value = 1.0;  // two-sided
  bool exact = false;
};

// Unpaired two-sample Mann-Whitney U test. The permutation distribution is
// enumerated exactly (with mid-ranks for ties) when the combined size is at
// most kExactLimit; larger samples use the tie-corrected normal
// approximation with continuity correction. Throws std::domain_error on an
// empty sample.
MannWhitneyResult mann_whitney_u(std::span<const double> a,
                                 std::span<const double> b);

inline constexpr int kExactLimit = 20;

}  // namespace ebrake
