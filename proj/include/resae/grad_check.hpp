#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "resae/param_store.hpp"
#include "resae/tape.hpp"

namespace resae {

// Builds a scalar objective on the given tape, binding parameters from the
// store under check.
using Objective = std::function<ad::Var(ad::Tape&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  // Coordinates checked per parameter; larger tensors are sampled. 0 = all.
  std::size_t max_coords_per_param = 64;
  // Relative error uses max(|analytic|, |numeric|, denominator_floor).
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
  ad::Mode mode = ad::Mode::kEval;
};

struct ParamGradReport {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double max_abs_grad = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamGradReport> params;
  double max_rel_error = 0.0;
  bool passed = true;
};

// Compares reverse-mode gradients with central differences
// (f(x + eps) - f(x - eps)) / (2 eps). Throws PreconditionError when the
// objective samples randomness or eps is outside [1e-7, 1e-3], and
// std::runtime_error when f is not finite.
GradCheckReport grad_check(ParamStore& store, const Objective& f,
                           const GradCheckOptions& options = {});

}  // namespace resae
