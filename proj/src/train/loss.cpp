#include <cmath>

#include "resae/errors.hpp"
#include "resae/train.hpp"

namespace resae::train {

Tensor smoothed_targets(std::size_t n_entities, std::span<const kg::EntityId> golds, double eps) {
  if (n_entities == 0) throw PreconditionError("smoothed_targets: no entities");
  if (!(eps >= 0.0 && eps <= 1.0)) throw PreconditionError("label smoothing must lie in [0, 1]");
  Tensor t({n_entities}, eps / static_cast<double>(n_entities));
  for (auto g : golds) {
    if (g >= n_entities) throw PreconditionError("gold entity " + std::to_string(g) + " out of range");
    t[g] = (1.0 - eps) + eps / static_cast<double>(n_entities);
  }
  return t;
}

double compute_loss(const Tensor& scores, kg::EntityId gold, double eps) {
  return compute_loss(scores, std::span(&gold, 1), eps);
}

double compute_loss(const Tensor& scores, std::span<const kg::EntityId> golds, double eps) {
  const std::size_t v = scores.size();
  const Tensor y = smoothed_targets(v, golds, eps);
  double total = 0.0;
  for (std::size_t i = 0; i < v; ++i) {
    const double x = scores[i];
    if (!std::isfinite(x)) throw PreconditionError("compute_loss: non-finite score");
    // -[y log s(x) + (1 - y) log(1 - s(x))] = max(x, 0) - x y + log(1 + exp(-|x|))
    total += std::max(x, 0.0) - x * y[i] + std::log1p(std::exp(-std::abs(x)));
  }
  return total / static_cast<double>(v);
}

ad::Var batch_loss(const ad::Var& scores, std::span<const std::vector<kg::EntityId>> golds,
                   double eps) {
  const Tensor& s = scores.value();
  if (s.rank() != 2 || s.dim(0) != golds.size()) {
    throw ShapeError("batch_loss: scores " + shape_str(s.shape()) + " for " +
                     std::to_string(golds.size()) + " statements");
  }
  const std::size_t b = s.dim(0);
  const std::size_t v = s.dim(1);
  Tensor targets({b, v});
  for (std::size_t i = 0; i < b; ++i) {
    const Tensor row = smoothed_targets(v, golds[i], eps);
    for (std::size_t j = 0; j < v; ++j) targets.at(i, j) = row[j];
  }
  return ad::bce_with_logits(scores, targets);
}

}  // namespace resae::train
