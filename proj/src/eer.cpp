#include "effn/eer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "effn/error.hpp"

namespace effn {

namespace {

struct Counts {
  std::vector<double> bona;
  std::vector<double> spoof;
};

Counts split_scores(const std::vector<TrialScore>& scores) {
  Counts c;
  for (const auto& s : scores) {
    if (s.label == Label::kBona)
      c.bona.push_back(s.score);
    else
      c.spoof.push_back(s.score);
  }
  if (c.bona.empty() || c.spoof.empty())
    throw ParameterError("eer: need at least one bona fide and one spoof trial");
  std::sort(c.bona.begin(), c.bona.end());
  std::sort(c.spoof.begin(), c.spoof.end());
  return c;
}

// fraction of spoof with score >= t
double far_at(const Counts& c, double t) {
  const auto it = std::lower_bound(c.spoof.begin(), c.spoof.end(), t);
  return static_cast<double>(c.spoof.end() - it) / static_cast<double>(c.spoof.size());
}

// fraction of bona with score < t
double frr_at(const Counts& c, double t) {
  const auto it = std::lower_bound(c.bona.begin(), c.bona.end(), t);
  return static_cast<double>(it - c.bona.begin()) / static_cast<double>(c.bona.size());
}

std::vector<double> unique_scores(const Counts& c) {
  std::vector<double> u;
  u.reserve(c.bona.size() + c.spoof.size());
  u.insert(u.end(), c.bona.begin(), c.bona.end());
  u.insert(u.end(), c.spoof.begin(), c.spoof.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

}  // namespace

EerResult compute_eer(const std::vector<TrialScore>& scores) {
  const Counts c = split_scores(scores);
  const std::vector<double> u = unique_scores(c);

  // Operating points at each unique score, then the all-reject sentinel.
  struct Op {
    double t, far, frr;
  };
  std::vector<Op> ops;
  ops.reserve(u.size() + 1);
  for (const double t : u) ops.push_back({t, far_at(c, t), frr_at(c, t)});
  ops.push_back({u.back(), 0.0, 1.0});  // threshold above every score

  EerResult res;
  res.n_bona = c.bona.size();
  res.n_spoof = c.spoof.size();

  for (std::size_t i = 0; i < ops.size(); ++i) {
    const double d = ops[i].far - ops[i].frr;
    if (d == 0.0) {
      res.eer = ops[i].far;
      res.threshold = ops[i].t;
      return res;
    }
    if (d < 0.0) {
      // First sign change; i > 0 because the first point always has
      // FAR = 1, FRR = 0. Combine the bracket's extreme corners.
      const Op& lo = ops[i - 1];
      const Op& hi = ops[i];
      const double minmax = std::min(lo.far, hi.frr);
      const double maxmin = std::max(lo.frr, hi.far);
      res.eer = 0.5 * (minmax + maxmin);
      res.threshold = lo.far <= hi.frr ? lo.t : hi.t;
      return res;
    }
  }
  throw NumericError("compute_eer: no crossing found");
}

EerResult eer_oracle(const std::vector<TrialScore>& scores) {
  const Counts c = split_scores(scores);
  const std::vector<double> u = unique_scores(c);

  std::vector<double> cands;
  cands.reserve(u.size() + 1);
  cands.push_back(u.front() - 1.0);
  for (std::size_t i = 0; i + 1 < u.size(); ++i) cands.push_back(0.5 * (u[i] + u[i + 1]));
  cands.push_back(u.back() + 1.0);

  double min_max = std::numeric_limits<double>::infinity();
  double max_min = -std::numeric_limits<double>::infinity();
  double min_max_t = cands.front();
  for (const double t : cands) {
    const double far = far_at(c, t);
    const double frr = frr_at(c, t);
    const double hi = std::max(far, frr);
    const double lo = std::min(far, frr);
    if (hi < min_max) {
      min_max = hi;
      min_max_t = t;
    }
    max_min = std::max(max_min, lo);
  }

  EerResult res;
  res.eer = 0.5 * (min_max + max_min);
  res.threshold = min_max_t;
  res.n_bona = c.bona.size();
  res.n_spoof = c.spoof.size();
  return res;
}

}  // namespace effn
