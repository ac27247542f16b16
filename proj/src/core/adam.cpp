#include "resae/adam.hpp"

#include <cmath>

#include "resae/errors.hpp"

namespace resae {

Adam::Adam(const ParamStore& params, AdamConfig config) : config_(config) {
  for (const auto& p : params) {
    first_.push_back(Tensor::zeros_like(p.value));
    second_.push_back(Tensor::zeros_like(p.value));
  }
}

void Adam::step(ParamStore& params) {
  if (params.size() != first_.size()) {
    throw PreconditionError("Adam::step: store has " + std::to_string(params.size()) +
                            " parameters, optimizer was built for " +
                            std::to_string(first_.size()));
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correct1 = 1.0 - std::pow(config_.beta1, t);
  const double correct2 = 1.0 - std::pow(config_.beta2, t);
  std::size_t k = 0;
  for (auto& p : params) {
    Tensor& m = first_[k];
    Tensor& v = second_[k];
    ++k;
    if (m.shape() != p.value.shape()) {
      throw ShapeError("Adam::step: moment shape " + shape_str(m.shape()) + " vs parameter '" +
                       p.name + "' " + shape_str(p.value.shape()));
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      p.value[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace resae
