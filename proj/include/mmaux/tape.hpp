#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mmaux/tensor.hpp"

namespace mmaux {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  const Tensor& grad() const;
  // Scalar convenience for shape-{1} vars.
  double item() const;
};

// Reverse-mode tape. Nodes are created in topological order, so backward is
// a single reverse sweep. One tape per training batch; all intermediates are
// freed when it goes out of scope.
class Tape {
 public:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily at backward()
    std::vector<int> parents;
    // Accumulates into the parents' grads given this node's grad.
    std::function<void(Tape&, int)> backward;
  };

  Var leaf(Tensor value);
  Var make(Tensor value, std::vector<int> parents, std::function<void(Tape&, int)> backward);

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  Tensor& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  // Seeds d(root)/d(root) = 1 for a scalar root and runs the reverse sweep.
  void backward(Var root);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  std::vector<Node> nodes_;
};

// ---- primitive ops (all differentiable through the tape) ----

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);          // elementwise
Var scale(Var a, double c);     // a * constant
Var matmul(Var a, Var b);
Var transpose(Var a);
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
Var layer_norm(Var x, Var gain, Var bias);  // per-row, variance floor 1e-5
Var gelu(Var x);
Var add_rowvec(Var x, Var b);   // broadcast rank-1 b over rows of x
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var x, int start, int len);
Var slice_cols(Var x, int start, int len);
Var gather_rows(Var x, std::vector<int> indices);
Var normalize_rows(Var x);      // L2; throws DegenerateError on a zero row
Var vexp(Var x);
Var clamp(Var x, double lo, double hi);
Var recip(Var x);
Var mul_scalar_var(Var x, Var s);  // s has shape {1}
Var mean_diag(Var x);              // mean of the diagonal of a square matrix
Var sum_all(Var x);
// Weighted mean of -logp[n, labels[n]], normalized by the weight sum.
Var nll_weighted(Var logp, const std::vector<int>& labels, const std::vector<double>& weights);

// ---- composed ops ----

Var linear(Var x, Var w, Var b);  // x*w + b (b broadcast over rows)
// Multi-head scaled dot-product attention. q: Tq x d, k,v: Tk x d,
// d divisible by heads; per-head scale 1/sqrt(d/heads).
Var attention(Var q, Var k, Var v, int heads);

inline constexpr double kLayerNormEps = 1e-5;

}  // namespace mmaux
