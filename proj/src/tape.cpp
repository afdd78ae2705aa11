#include "mmaux/tape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mmaux/errors.hpp"

namespace mmaux {

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->node(id).grad; }

double Var::item() const {
  const Tensor& v = tape->value(id);
  if (v.numel() != 1) throw std::logic_error("item() on tensor of shape " + shape_str(v.shape));
  return v.data[0];
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, {}, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::make(Tensor value, std::vector<int> parents,
               std::function<void(Tape&, int)> backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(parents), std::move(backward)});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var root) {
  if (root.tape != this || root.id < 0 || root.id >= size())
    throw std::logic_error("backward: root is not a node of this tape");
  if (value(root.id).numel() != 1)
    throw std::logic_error("backward: root must be scalar, got shape " +
                           shape_str(value(root.id).shape));
  // Fresh grads every call; nodes created after the root cannot affect it.
  for (int i = 0; i <= root.id; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    n.grad = Tensor::zeros(n.value.shape);
  }
  grad(root.id).data[0] = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward) n.backward(*this, i);
  }
}

namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw std::logic_error(std::string(op) + ": operands must live on the same tape");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw std::invalid_argument(std::string(op) + ": expected rank-2, got shape " +
                                shape_str(t.shape));
}

}  // namespace

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  return a.tape->make(std::move(out), {a.id, b.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    Tensor& ga = t.grad(t.node(id).parents[0]);
    Tensor& gb = t.grad(t.node(id).parents[1]);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  return a.tape->make(std::move(out), {a.id, b.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    Tensor& ga = t.grad(t.node(id).parents[0]);
    Tensor& gb = t.grad(t.node(id).parents[1]);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] -= g.data[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  return a.tape->make(std::move(out), {a.id, b.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& av = t.value(t.node(id).parents[0]);
    const Tensor& bv = t.value(t.node(id).parents[1]);
    Tensor& ga = t.grad(t.node(id).parents[0]);
    Tensor& gb = t.grad(t.node(id).parents[1]);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i] * bv.data[i];
      gb.data[i] += g.data[i] * av.data[i];
    }
  });
}

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (double& x : out.data) x *= c;
  return a.tape->make(std::move(out), {a.id}, [c](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    Tensor& ga = t.grad(t.node(id).parents[0]);
    for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
  });
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  Tensor out = matmul_value(a.value(), b.value());
  return a.tape->make(std::move(out), {a.id, b.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& av = t.value(t.node(id).parents[0]);
    const Tensor& bv = t.value(t.node(id).parents[1]);
    Tensor& ga = t.grad(t.node(id).parents[0]);
    Tensor& gb = t.grad(t.node(id).parents[1]);
    const int n = av.rows(), k = av.cols(), m = bv.cols();
    // ga += g * b^T
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < k; ++p) {
        double s = 0.0;
        const double* grow = &g.data[static_cast<std::size_t>(i) * m];
        const double* brow = &bv.data[static_cast<std::size_t>(p) * m];
        for (int j = 0; j < m; ++j) s += grow[j] * brow[j];
        ga.at(i, p) += s;
      }
    }
    // gb += a^T * g
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < k; ++p) {
        const double aip = av.at(i, p);
        const double* grow = &g.data[static_cast<std::size_t>(i) * m];
        double* gbrow = &gb.data[static_cast<std::size_t>(p) * m];
        for (int j = 0; j < m; ++j) gbrow[j] += aip * grow[j];
      }
    }
  });
}

Var transpose(Var a) {
  Tensor out = transpose_value(a.value());
  return a.tape->make(std::move(out), {a.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    Tensor& ga = t.grad(t.node(id).parents[0]);
    const int r = g.rows(), c = g.cols();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) ga.at(j, i) += g.at(i, j);
  });
}

Var softmax_rows(Var x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "softmax_rows");
  const int n = xv.rows(), d = xv.cols();
  Tensor out = Tensor::zeros(xv.shape);
  for (int r = 0; r < n; ++r) {
    double m = xv.at(r, 0);
    for (int j = 1; j < d; ++j) m = std::max(m, xv.at(r, j));
    double sum = 0.0;
    for (int j = 0; j < d; ++j) {
      out.at(r, j) = std::exp(xv.at(r, j) - m);
      sum += out.at(r, j);
    }
    for (int j = 0; j < d; ++j) out.at(r, j) /= sum;
  }
  return x.tape->make(std::move(out), {x.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& y = t.value(id);
    Tensor& gx = t.grad(t.node(id).parents[0]);
    const int n = y.rows(), d = y.cols();
    for (int r = 0; r < n; ++r) {
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += g.at(r, j) * y.at(r, j);
      for (int j = 0; j < d; ++j) gx.at(r, j) += y.at(r, j) * (g.at(r, j) - dot);
    }
  });
}

Var log_softmax_rows(Var x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "log_softmax_rows");
  const int n = xv.rows(), d = xv.cols();
  Tensor out = Tensor::zeros(xv.shape);
  // The exp sum runs in ascending value order, so the result is bit-identical
  // under any permutation of a row's entries.
  std::vector<double> exps(static_cast<std::size_t>(d));
  for (int r = 0; r < n; ++r) {
    double m = xv.at(r, 0);
    for (int j = 1; j < d; ++j) m = std::max(m, xv.at(r, j));
    for (int j = 0; j < d; ++j) exps[static_cast<std::size_t>(j)] = std::exp(xv.at(r, j) - m);
    std::sort(exps.begin(), exps.end());
    double sum = 0.0;
    for (double e : exps) sum += e;
    const double lse = m + std::log(sum);
    for (int j = 0; j < d; ++j) out.at(r, j) = xv.at(r, j) - lse;
  }
  return x.tape->make(std::move(out), {x.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& y = t.value(id);
    Tensor& gx = t.grad(t.node(id).parents[0]);
    const int n = y.rows(), d = y.cols();
    for (int r = 0; r < n; ++r) {
      double gsum = 0.0;
      for (int j = 0; j < d; ++j) gsum += g.at(r, j);
      for (int j = 0; j < d; ++j) gx.at(r, j) += g.at(r, j) - std::exp(y.at(r, j)) * gsum;
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias) {
  require_same_tape(x, gain, "layer_norm");
  require_same_tape(x, bias, "layer_norm");
  const Tensor& xv = x.value();
  require_rank2(xv, "layer_norm");
  const int n = xv.rows(), d = xv.cols();
  if (gain.value().numel() != static_cast<std::size_t>(d) ||
      bias.value().numel() != static_cast<std::size_t>(d))
    throw std::invalid_argument("layer_norm: gain/bias must have one entry per column");
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out = Tensor::zeros(xv.shape);
  for (int r = 0; r < n; ++r) {
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xv.at(r, j);
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xv.at(r, j) - mu;
      var += c * c;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (int j = 0; j < d; ++j)
      out.at(r, j) = gv.data[static_cast<std::size_t>(j)] * (xv.at(r, j) - mu) * inv +
                     bv.data[static_cast<std::size_t>(j)];
  }
  return x.tape->make(std::move(out), {x.id, gain.id, bias.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& xv = t.value(t.node(id).parents[0]);
    const Tensor& gv = t.value(t.node(id).parents[1]);
    Tensor& gx = t.grad(t.node(id).parents[0]);
    Tensor& ggain = t.grad(t.node(id).parents[1]);
    Tensor& gbias = t.grad(t.node(id).parents[2]);
    const int n = xv.rows(), d = xv.cols();
    std::vector<double> xhat(static_cast<std::size_t>(d));
    std::vector<double> dxhat(static_cast<std::size_t>(d));
    for (int r = 0; r < n; ++r) {
      double mu = 0.0;
      for (int j = 0; j < d; ++j) mu += xv.at(r, j);
      mu /= d;
      double var = 0.0;
      for (int j = 0; j < d; ++j) {
        const double c = xv.at(r, j) - mu;
        var += c * c;
      }
      var /= d;
      const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
      double m1 = 0.0, m2 = 0.0;
      for (int j = 0; j < d; ++j) {
        xhat[static_cast<std::size_t>(j)] = (xv.at(r, j) - mu) * inv;
        dxhat[static_cast<std::size_t>(j)] = g.at(r, j) * gv.data[static_cast<std::size_t>(j)];
        m1 += dxhat[static_cast<std::size_t>(j)];
        m2 += dxhat[static_cast<std::size_t>(j)] * xhat[static_cast<std::size_t>(j)];
      }
      m1 /= d;
      m2 /= d;
      for (int j = 0; j < d; ++j) {
        gx.at(r, j) += inv * (dxhat[static_cast<std::size_t>(j)] - m1 -
                              xhat[static_cast<std::size_t>(j)] * m2);
        ggain.data[static_cast<std::size_t>(j)] += g.at(r, j) * xhat[static_cast<std::size_t>(j)];
        gbias.data[static_cast<std::size_t>(j)] += g.at(r, j);
      }
    }
  });
}

// Tanh form; smooth everywhere, which keeps finite-difference checks tight.
Var gelu(Var x) {
  static const double kC = std::sqrt(2.0 / std::numbers::pi);
  const Tensor& xv = x.value();
  Tensor out = xv;
  for (double& v : out.data) {
    const double u = kC * (v + 0.044715 * v * v * v);
    v = 0.5 * v * (1.0 + std::tanh(u));
  }
  return x.tape->make(std::move(out), {x.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& xv = t.value(t.node(id).parents[0]);
    Tensor& gx = t.grad(t.node(id).parents[0]);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      const double v = xv.data[i];
      const double u = kC * (v + 0.044715 * v * v * v);
      const double th = std::tanh(u);
      const double du = kC * (1.0 + 3.0 * 0.044715 * v * v);
      gx.data[i] += g.data[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du);
    }
  });
}

Var add_rowvec(Var x, Var b) {
  require_same_tape(x, b, "add_rowvec");
  const Tensor& xv = x.value();
  require_rank2(xv, "add_rowvec");
  const int n = xv.rows(), d = xv.cols();
  if (b.value().numel() != static_cast<std::size_t>(d))
    throw std::invalid_argument("add_rowvec: vector length must match columns");
  const Tensor& bv = b.value();
  Tensor out = xv;
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < d; ++j) out.at(r, j) += bv.data[static_cast<std::size_t>(j)];
  return x.tape->make(std::move(out), {x.id, b.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    Tensor& gx = t.grad(t.node(id).parents[0]);
    Tensor& gb = t.grad(t.node(id).parents[1]);
    const int n = g.rows(), d = g.cols();
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < d; ++j) {
        gx.at(r, j) += g.at(r, j);
        gb.data[static_cast<std::size_t>(j)] += g.at(r, j);
      }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape* tape = parts[0].tape;
  int total_rows = 0;
  const int d = parts[0].value().cols();
  std::vector<int> parents;
  parents.reserve(parts.size());
  for (const Var& p : parts) {
    require_same_tape(parts[0], p, "concat_rows");
    require_rank2(p.value(), "concat_rows");
    if (p.value().cols() != d)
      throw std::invalid_argument("concat_rows: column counts differ");
    total_rows += p.value().rows();
    parents.push_back(p.id);
  }
  Tensor out = Tensor::zeros({total_rows, d});
  int off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (int r = 0; r < pv.rows(); ++r)
      for (int j = 0; j < d; ++j) out.at(off + r, j) = pv.at(r, j);
    off += pv.rows();
  }
  return tape->make(std::move(out), std::move(parents), [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const int d = g.cols();
    int off = 0;
    for (int parent : t.node(id).parents) {
      const int rows = t.value(parent).rows();
      Tensor& gp = t.grad(parent);
      for (int r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) gp.at(r, j) += g.at(off + r, j);
      off += rows;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape* tape = parts[0].tape;
  const int n = parts[0].value().rows();
  int total_cols = 0;
  std::vector<int> parents;
  parents.reserve(parts.size());
  for (const Var& p : parts) {
    require_same_tape(parts[0], p, "concat_cols");
    require_rank2(p.value(), "concat_cols");
    if (p.value().rows() != n) throw std::invalid_argument("concat_cols: row counts differ");
    total_cols += p.value().cols();
    parents.push_back(p.id);
  }
  Tensor out = Tensor::zeros({n, total_cols});
  int off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < pv.cols(); ++j) out.at(r, off + j) = pv.at(r, j);
    off += pv.cols();
  }
  return tape->make(std::move(out), std::move(parents), [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const int n = g.rows();
    int off = 0;
    for (int parent : t.node(id).parents) {
      const int cols = t.value(parent).cols();
      Tensor& gp = t.grad(parent);
      for (int r = 0; r < n; ++r)
        for (int j = 0; j < cols; ++j) gp.at(r, j) += g.at(r, off + j);
      off += cols;
    }
  });
}

Var slice_rows(Var x, int start, int len) {
  const Tensor& xv = x.value();
  require_rank2(xv, "slice_rows");
  if (start < 0 || len < 0 || start + len > xv.rows())
    throw std::invalid_argument("slice_rows: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") outside " +
                                std::to_string(xv.rows()) + " rows");
  const int d = xv.cols();
  Tensor out = Tensor::zeros({len, d});
  for (int r = 0; r < len; ++r)
    for (int j = 0; j < d; ++j) out.at(r, j) = xv.at(start + r, j);
  return x.tape->make(std::move(out), {x.id}, [start](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    Tensor& gx = t.grad(t.node(id).parents[0]);
    for (int r = 0; r < g.rows(); ++r)
      for (int j = 0; j < g.cols(); ++j) gx.at(start + r, j) += g.at(r, j);
  });
}

Var slice_cols(Var x, int start, int len) {
  const Tensor& xv = x.value();
  require_rank2(xv, "slice_cols");
  if (start < 0 || len < 0 || start + len > xv.cols())
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") outside " +
                                std::to_string(xv.cols()) + " columns");
  const int n = xv.rows();
  Tensor out = Tensor::zeros({n, len});
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < len; ++j) out.at(r, j) = xv.at(r, start + j);
  return x.tape->make(std::move(out), {x.id}, [start](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    Tensor& gx = t.grad(t.node(id).parents[0]);
    for (int r = 0; r < g.rows(); ++r)
      for (int j = 0; j < g.cols(); ++j) gx.at(r, start + j) += g.at(r, j);
  });
}

Var gather_rows(Var x, std::vector<int> indices) {
  const Tensor& xv = x.value();
  require_rank2(xv, "gather_rows");
  const int d = xv.cols();
  for (int idx : indices)
    if (idx < 0 || idx >= xv.rows())
      throw InputError("gather_rows: index " + std::to_string(idx) + " outside " +
                       std::to_string(xv.rows()) + " rows");
  Tensor out = Tensor::zeros({static_cast<int>(indices.size()), d});
  for (std::size_t r = 0; r < indices.size(); ++r)
    for (int j = 0; j < d; ++j) out.at(static_cast<int>(r), j) = xv.at(indices[r], j);
  return x.tape->make(std::move(out), {x.id},
                      [indices = std::move(indices)](Tape& t, int id) {
                        const Tensor& g = t.node(id).grad;
                        Tensor& gx = t.grad(t.node(id).parents[0]);
                        for (std::size_t r = 0; r < indices.size(); ++r)
                          for (int j = 0; j < g.cols(); ++j)
                            gx.at(indices[r], j) += g.at(static_cast<int>(r), j);
                      });
}

Var normalize_rows(Var x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "normalize_rows");
  const int n = xv.rows(), d = xv.cols();
  Tensor out = Tensor::zeros(xv.shape);
  for (int r = 0; r < n; ++r) {
    double sq = 0.0;
    for (int j = 0; j < d; ++j) sq += xv.at(r, j) * xv.at(r, j);
    if (sq == 0.0)
      throw DegenerateError("normalize_rows: row " + std::to_string(r) + " has zero norm");
    const double inv = 1.0 / std::sqrt(sq);
    for (int j = 0; j < d; ++j) out.at(r, j) = xv.at(r, j) * inv;
  }
  return x.tape->make(std::move(out), {x.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& xv = t.value(t.node(id).parents[0]);
    Tensor& gx = t.grad(t.node(id).parents[0]);
    const int n = xv.rows(), d = xv.cols();
    for (int r = 0; r < n; ++r) {
      double sq = 0.0, dot = 0.0;
      for (int j = 0; j < d; ++j) {
        sq += xv.at(r, j) * xv.at(r, j);
        dot += g.at(r, j) * xv.at(r, j);
      }
      const double norm = std::sqrt(sq);
      const double inv3 = 1.0 / (norm * norm * norm);
      for (int j = 0; j < d; ++j)
        gx.at(r, j) += g.at(r, j) / norm - xv.at(r, j) * dot * inv3;
    }
  });
}

Var vexp(Var x) {
  Tensor out = x.value();
  for (double& v : out.data) v = std::exp(v);
  return x.tape->make(std::move(out), {x.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& y = t.value(id);
    Tensor& gx = t.grad(t.node(id).parents[0]);
    for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i] * y.data[i];
  });
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must not exceed hi");
  Tensor out = x.value();
  for (double& v : out.data) v = std::min(std::max(v, lo), hi);
  return x.tape->make(std::move(out), {x.id}, [lo, hi](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& xv = t.value(t.node(id).parents[0]);
    Tensor& gx = t.grad(t.node(id).parents[0]);
    for (std::size_t i = 0; i < g.data.size(); ++i)
      if (xv.data[i] > lo && xv.data[i] < hi) gx.data[i] += g.data[i];
  });
}

Var recip(Var x) {
  Tensor out = x.value();
  for (double& v : out.data) v = 1.0 / v;
  return x.tape->make(std::move(out), {x.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& y = t.value(id);
    Tensor& gx = t.grad(t.node(id).parents[0]);
    for (std::size_t i = 0; i < g.data.size(); ++i)
      gx.data[i] -= g.data[i] * y.data[i] * y.data[i];
  });
}

Var mul_scalar_var(Var x, Var s) {
  require_same_tape(x, s, "mul_scalar_var");
  if (s.value().numel() != 1)
    throw std::invalid_argument("mul_scalar_var: scalar operand has shape " +
                                shape_str(s.value().shape));
  const double sv = s.value().data[0];
  Tensor out = x.value();
  for (double& v : out.data) v *= sv;
  return x.tape->make(std::move(out), {x.id, s.id}, [](Tape& t, int id) {
    const Tensor& g = t.node(id).grad;
    const Tensor& xv = t.value(t.node(id).parents[0]);
    const double sv = t.value(t.node(id).parents[1]).data[0];
    Tensor& gx = t.grad(t.node(id).parents[0]);
    Tensor& gs = t.grad(t.node(id).parents[1]);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      gx.data[i] += g.data[i] * sv;
      gs.data[0] += g.data[i] * xv.data[i];
    }
  });
}

Var mean_diag(Var x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "mean_diag");
  if (xv.rows() != xv.cols())
    throw std::invalid_argument("mean_diag: matrix must be square, got " + shape_str(xv.shape));
  const int n = xv.rows();
  // Ascending-order sum keeps the mean bit-identical under joint row/column
  // permutations of the matrix.
  std::vector<double> diag(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = xv.at(i, i);
  std::sort(diag.begin(), diag.end());
  double s = 0.0;
  for (double v : diag) s += v;
  return x.tape->make(Tensor::scalar(s / n), {x.id}, [n](Tape& t, int id) {
    const double g = t.node(id).grad.data[0];
    Tensor& gx = t.grad(t.node(id).parents[0]);
    for (int i = 0; i < n; ++i) gx.at(i, i) += g / n;
  });
}

Var sum_all(Var x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  return x.tape->make(Tensor::scalar(s), {x.id}, [](Tape& t, int id) {
    const double g = t.node(id).grad.data[0];
    Tensor& gx = t.grad(t.node(id).parents[0]);
    for (double& v : gx.data) v += g;
  });
}

Var nll_weighted(Var logp, const std::vector<int>& labels, const std::vector<double>& weights) {
  const Tensor& lv = logp.value();
  require_rank2(lv, "nll_weighted");
  const int n = lv.rows(), k = lv.cols();
  if (labels.size() != static_cast<std::size_t>(n) || weights.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("nll_weighted: need one label and one weight per row");
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (wsum <= 0.0) throw DegenerateError("nll_weighted: weights sum to zero");
  double loss = 0.0;
  for (int r = 0; r < n; ++r) {
    if (labels[static_cast<std::size_t>(r)] < 0 || labels[static_cast<std::size_t>(r)] >= k)
      throw InputError("nll_weighted: label " + std::to_string(labels[static_cast<std::size_t>(r)]) +
                       " outside [0, " + std::to_string(k) + ")");
    loss -= weights[static_cast<std::size_t>(r)] * lv.at(r, labels[static_cast<std::size_t>(r)]);
  }
  loss /= wsum;
  return logp.tape->make(Tensor::scalar(loss), {logp.id},
                         [labels, weights, wsum](Tape& t, int id) {
                           const double g = t.node(id).grad.data[0];
                           Tensor& gl = t.grad(t.node(id).parents[0]);
                           for (std::size_t r = 0; r < labels.size(); ++r)
                             gl.at(static_cast<int>(r), labels[r]) -= g * weights[r] / wsum;
                         });
}

Var linear(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

Var attention(Var q, Var k, Var v, int heads) {
  require_same_tape(q, k, "attention");
  require_same_tape(q, v, "attention");
  require_rank2(q.value(), "attention");
  require_rank2(k.value(), "attention");
  require_rank2(v.value(), "attention");
  const int d = q.value().cols();
  if (k.value().cols() != d || v.value().cols() != d)
    throw std::invalid_argument("attention: q, k, v must share the feature width");
  if (k.value().rows() != v.value().rows())
    throw std::invalid_argument("attention: k and v must have the same length");
  if (heads < 1 || d % heads != 0)
    throw std::invalid_argument("attention: feature width " + std::to_string(d) +
                                " not divisible by " + std::to_string(heads) + " heads");
  const int dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * dh, dh);
    Var kh = slice_cols(k, h * dh, dh);
    Var vh = slice_cols(v, h * dh, dh);
    Var attn = softmax_rows(scale(matmul(qh, transpose(kh)), sc));
    outs.push_back(matmul(attn, vh));
  }
  if (heads == 1) return outs[0];
  return concat_cols(outs);
}

}  // namespace mmaux
