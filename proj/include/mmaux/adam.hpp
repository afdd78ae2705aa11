#pragma once

#include <vector>

#include "mmaux/param.hpp"
#include "mmaux/tensor.hpp"

namespace mmaux {

// Adam with bias correction. Moments are parallel to the param list the
// state was created for; step_count increases by one per adam_step call.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

AdamState make_adam_state(const std::vector<Param*>& params, double learning_rate);

// In-place update of every param from its accumulated grad. Grads are left
// untouched; the caller resets them between batches.
void adam_step(const std::vector<Param*>& params, AdamState& state);

}  // namespace mmaux
