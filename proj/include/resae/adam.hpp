#pragma once

#include <cstddef>
#include <vector>

#include "resae/param_store.hpp"

namespace resae {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias-corrected moments. Moment buffers follow the store's
// parameter order, so the store must not gain parameters after construction.
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig config);

  // Applies one update from the gradients currently held in params.
  void step(ParamStore& params);

  std::size_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
};

}  // namespace resae
