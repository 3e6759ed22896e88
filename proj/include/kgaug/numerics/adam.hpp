#pragma once

#include <cstdint>
#include <vector>

#include "kgaug/numerics/graph.hpp"

namespace kgaug::num {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over a fixed list of parameters.
class Adam {
 public:
  struct Moments {
    Tensor first;
    Tensor second;
  };

  Adam(std::vector<Parameter*> params, AdamConfig config);

  // Applies one update from each parameter's accumulated grad. Throws
  // TrainingError (before touching anything) if a gradient is non-finite.
  void step();
  void zero_grad();

  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Moments>& moments() const { return moments_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Moments> moments_;
  AdamConfig config_;
  std::uint64_t step_ = 0;
};

}  // namespace kgaug::num
