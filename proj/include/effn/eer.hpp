#pragma once

#include <string>
#include <vector>

#include "effn/loss.hpp"

namespace effn {

// Detection scores and Equal Error Rate. Scores are oriented so that
// higher means more bona fide. Tie convention shared by both EER routes:
// a spoof trial scoring exactly the threshold counts as accepted (>=).
struct TrialScore {
  std::string trial_id;
  double score = 0.0;
  Label label = Label::kBona;
};

struct EerResult {
  double eer = 0.0;        // fraction in [0, 1]
  double threshold = 0.0;  // score at the operating point
  std::size_t n_bona = 0;
  std::size_t n_spoof = 0;
};

// Threshold sweep over the sorted unique scores plus sentinels.
// FAR(t) = fraction of spoof with score >= t, FRR(t) = fraction of bona
// with score < t; FAR - FRR decreases monotonically from +1 to -1, and
// the EER is read off the first bracketing pair of operating points:
// exactly FAR when FAR == FRR at a point, otherwise the average of the
// bracket's minimax and maximin corners (which is where the brute-force
// oracle lands as well).
EerResult compute_eer(const std::vector<TrialScore>& scores);

// Independent brute-force verifier: evaluates FAR/FRR at every midpoint
// between adjacent sorted scores plus both sentinels and returns
// (min over t of max(FAR, FRR) + max over t of min(FAR, FRR)) / 2.
EerResult eer_oracle(const std::vector<TrialScore>& scores);

}  // namespace effn
