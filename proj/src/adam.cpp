#include "mmaux/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mmaux {

AdamState make_adam_state(const std::vector<Param*>& params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  state.first_moment.reserve(params.size());
  state.second_moment.reserve(params.size());
  for (const Param* p : params) {
    state.first_moment.push_back(Tensor::zeros(p->value.shape));
    state.second_moment.push_back(Tensor::zeros(p->value.shape));
  }
  return state;
}

void adam_step(const std::vector<Param*>& params, AdamState& state) {
  if (params.size() != state.first_moment.size())
    throw std::logic_error("adam_step: state was built for a different param list");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Param& param = *params[p];
    Tensor& m = state.first_moment[p];
    Tensor& v = state.second_moment[p];
    if (!m.same_shape(param.value))
      throw std::logic_error("adam_step: moment shape mismatch for " + param.name);
    for (std::size_t i = 0; i < param.value.data.size(); ++i) {
      const double g = param.grad.data[i];
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g;
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      param.value.data[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace mmaux
