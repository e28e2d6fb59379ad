#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "effn/error.hpp"
#include "effn/tensor.hpp"

namespace effn {

// Central finite-difference verification of analytic gradients, always in
// 64-bit. The loss must be a deterministic function of the parameter
// tensors (dropout disabled or its mask frozen).

struct GradCheckReport {
  std::string group;
  double max_rel_err = 0.0;   // max_i |analytic_i - numeric_i| / max(|numeric_i|, 1e-12)
  double max_abs_grad = 0.0;  // largest |numeric| in the group, for context
};

// One named parameter group: the live tensor (perturbed in place and
// restored) and its analytic gradient.
struct GradCheckGroup {
  std::string name;
  TensorD* param = nullptr;
  const TensorD* analytic = nullptr;
};

inline std::vector<GradCheckReport> finite_diff_check(
    const std::function<double()>& loss, const std::vector<GradCheckGroup>& groups, double h = 1e-5) {
  std::vector<GradCheckReport> reports;
  reports.reserve(groups.size());
  for (const auto& g : groups) {
    GradCheckReport rep;
    rep.group = g.name;
    TensorD& p = *g.param;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + h;
      const double lp = loss();
      p[i] = keep - h;
      const double lm = loss();
      p[i] = keep;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw NumericError("finite_diff_check: non-finite loss at group " + g.name);
      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = (*g.analytic)[i];
      const double rel = std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-12);
      rep.max_rel_err = std::max(rep.max_rel_err, rel);
      rep.max_abs_grad = std::max(rep.max_abs_grad, std::abs(numeric));
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace effn
