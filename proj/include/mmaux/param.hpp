#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmaux/tape.hpp"
#include "mmaux/tensor.hpp"

namespace mmaux {

// Named trainable tensor with a persistent gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor::zeros(value.shape);
  }

  void reset_grad() { grad.fill(0.0); }
};

// Bridges Params onto a tape for one forward/backward pass. Each Param gets
// a single leaf node, so two uses of the same Param share gradients.
class ParamBinding {
 public:
  explicit ParamBinding(Tape& tape) : tape_(&tape) {}

  Var use(Param& p) {
    for (const auto& [param, var] : bound_)
      if (param == &p) return var;
    Var v = tape_->leaf(p.value);
    bound_.emplace_back(&p, v);
    return v;
  }

  // Adds the tape gradients of every bound leaf into its Param's grad.
  // Call after Tape::backward.
  void accumulate_grads() const {
    for (const auto& [param, var] : bound_) {
      const Tensor& g = var.grad();
      for (std::size_t i = 0; i < g.data.size(); ++i) param->grad.data[i] += g.data[i];
    }
  }

 private:
  Tape* tape_;
  std::vector<std::pair<Param*, Var>> bound_;
};

}  // namespace mmaux
