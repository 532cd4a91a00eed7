#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rna {

// Central finite differences against the analytic gradients, run on the
// training code instantiated in double precision.
struct GradcheckResult {
  std::string name;
  double max_rel_error = 0;
  double tolerance = 0;
  int checked = 0;
  bool passed() const { return checked > 0 && max_rel_error < tolerance; }
};

inline constexpr double gradcheck_step = 1e-5;
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline constexpr double gradcheck_floor = 1e-6;

double relative_error(double analytic, double numeric);

// MLP weights, biases and inputs; triplane texels; end-to-end loss through
// the triplane for surface and fiber layouts.
std::vector<GradcheckResult> run_gradcheck(uint64_t seed = 7);

}  // namespace rna
