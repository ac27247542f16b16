#include "resae/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "resae/errors.hpp"

namespace resae {
namespace {

double evaluate(const Objective& f, const GradCheckOptions& options) {
  ad::Tape tape(options.mode, options.seed);
  const double value = f(tape).value().item();
  if (tape.stochastic()) {
    throw PreconditionError("grad_check: objective samples randomness (disable dropout)");
  }
  if (!std::isfinite(value)) throw std::runtime_error("grad_check: objective is not finite");
  return value;
}

}  // namespace

GradCheckReport grad_check(ParamStore& store, const Objective& f,
                           const GradCheckOptions& options) {
  if (!(options.eps >= 1e-7 && options.eps <= 1e-3)) {
    throw PreconditionError("grad_check: eps must lie in [1e-7, 1e-3]");
  }
  store.zero_grad();
  {
    ad::Tape tape(options.mode, options.seed);
    ad::Var root = f(tape);
    if (tape.stochastic()) {
      throw PreconditionError("grad_check: objective samples randomness (disable dropout)");
    }
    if (!std::isfinite(root.value().item())) {
      throw std::runtime_error("grad_check: objective is not finite");
    }
    tape.backward(root);
  }

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (auto& p : store) {
    ParamGradReport entry;
    entry.name = p.name;
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (auto i : coords) {
      const double saved = p.value[i];
      p.value[i] = saved + options.eps;
      const double up = evaluate(f, options);
      p.value[i] = saved - options.eps;
      const double down = evaluate(f, options);
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double analytic = p.grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
      entry.max_abs_grad = std::max(entry.max_abs_grad, std::abs(analytic));
      ++entry.checked;
    }
    entry.passed = entry.max_rel_error < options.tol;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.passed = report.passed && entry.passed;
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace resae
