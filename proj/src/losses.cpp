#include "mmaux/losses.hpp"

#include <cmath>
#include <string>

#include "mmaux/errors.hpp"

namespace mmaux {

void LossWeights::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
    throw ConfigError("loss weights: lambdas must be >= 0");
  if (lambda1 <= 0.0)
    throw ConfigError("loss weights: lambda1 must be > 0 for classification training");
}

Var itc_loss(Var l_unit, Var i_unit, Param& tau, ParamBinding& bind,
             bool inverse_temperature) {
  const Tensor& lv = l_unit.value();
  const Tensor& iv = i_unit.value();
  if (lv.rank() != 2 || !lv.same_shape(iv))
    throw InputError("itc_loss: text and image batches must share an N x d shape, got " +
                     shape_str(lv.shape) + " vs " + shape_str(iv.shape));
  const int n = lv.rows();
  if (n < 2) throw DegenerateError("itc_loss: needs a batch of at least 2");
  for (const Tensor* t : {&lv, &iv})
    for (int r = 0; r < n; ++r) {
      double sq = 0.0;
      for (int c = 0; c < t->cols(); ++c) sq += t->at(r, c) * t->at(r, c);
      if (std::fabs(std::sqrt(sq) - 1.0) > 1e-6)
        throw InputError("itc_loss: row " + std::to_string(r) + " is not unit-norm");
    }
  if (tau.value.numel() != 1) throw InputError("itc_loss: tau must be scalar");

  Var temp = clamp(vexp(bind.use(tau)), kTempClampLo, kTempClampHi);
  Var sims = matmul(l_unit, transpose(i_unit));
  Var logits = inverse_temperature ? mul_scalar_var(sims, temp)
                                   : mul_scalar_var(sims, recip(temp));
  Var l1 = scale(mean_diag(log_softmax_rows(logits)), -1.0);
  Var l2 = scale(mean_diag(log_softmax_rows(transpose(logits))), -1.0);
  return scale(add(l1, l2), 0.5);
}

ItmBatch itm_perturb(int batch_size, double replace_prob, Rng& rng) {
  if (batch_size < 2) throw DegenerateError("itm_perturb: needs a batch of at least 2");
  if (replace_prob < 0.0 || replace_prob > 1.0)
    throw ConfigError("itm_perturb: replace_prob must be in [0,1]");
  ItmBatch batch;
  batch.image_indices.resize(static_cast<std::size_t>(batch_size));
  batch.match_labels.resize(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    if (rng.next_double() < replace_prob) {
      int donor = rng.next_int(batch_size - 1);
      if (donor >= i) donor += 1;
      batch.image_indices[static_cast<std::size_t>(i)] = donor;
      batch.match_labels[static_cast<std::size_t>(i)] = 0;
    } else {
      batch.image_indices[static_cast<std::size_t>(i)] = i;
      batch.match_labels[static_cast<std::size_t>(i)] = 1;
    }
  }
  return batch;
}

Var itm_loss(Var h_perturbed, const ItmBatch& itm, Param& head_w, Param& head_b,
             ParamBinding& bind) {
  const int n = h_perturbed.value().rows();
  if (itm.image_indices.size() != static_cast<std::size_t>(n) ||
      itm.match_labels.size() != static_cast<std::size_t>(n))
    throw InputError("itm_loss: batch size mismatch between h and the perturbation record");
  for (int i = 0; i < n; ++i) {
    const bool self = itm.image_indices[static_cast<std::size_t>(i)] == i;
    if (self != (itm.match_labels[static_cast<std::size_t>(i)] == 1))
      throw InputError("itm_loss: match label disagrees with image index at " +
                       std::to_string(i));
  }
  Var logits = linear(h_perturbed, bind.use(head_w), bind.use(head_b));
  if (logits.value().cols() != 2) throw InputError("itm_loss: head must produce 2 logits");
  return nll_weighted(log_softmax_rows(logits), itm.match_labels,
                      std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

ClassWeights balanced_class_weights(const std::vector<int>& label_counts) {
  const int k = static_cast<int>(label_counts.size());
  if (k < 1) throw ConfigError("class weights: need at least one class");
  long total = 0;
  for (int c = 0; c < k; ++c) {
    if (label_counts[static_cast<std::size_t>(c)] <= 0)
      throw ConfigError("class weights: class " + std::to_string(c) +
                        " has no training examples");
    total += label_counts[static_cast<std::size_t>(c)];
  }
  ClassWeights cw;
  cw.weights.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    cw.weights[static_cast<std::size_t>(c)] =
        static_cast<double>(total) /
        (static_cast<double>(k) * label_counts[static_cast<std::size_t>(c)]);
  return cw;
}

Var ce_loss(Var logits, const std::vector<int>& labels, const ClassWeights& class_weights) {
  const int n = logits.value().rows();
  const int k = logits.value().cols();
  if (labels.size() != static_cast<std::size_t>(n))
    throw InputError("ce_loss: need one label per row");
  if (class_weights.weights.size() != static_cast<std::size_t>(k))
    throw InputError("ce_loss: need one class weight per logit column");
  std::vector<double> sample_weights(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k)
      throw InputError("ce_loss: label " + std::to_string(y) + " outside [0, " +
                       std::to_string(k) + ")");
    sample_weights[static_cast<std::size_t>(i)] = class_weights.weights[static_cast<std::size_t>(y)];
  }
  return nll_weighted(log_softmax_rows(logits), labels, sample_weights);
}

Var joint_loss(std::optional<Var> l_ce, std::optional<Var> l_itc, std::optional<Var> l_itm,
               const LossWeights& w, Tape& tape) {
  std::optional<Var> acc;
  auto fold = [&](const std::optional<Var>& term, double lambda) {
    if (!term.has_value() || lambda == 0.0) return;
    Var scaled = scale(*term, lambda);
    acc = acc.has_value() ? add(*acc, scaled) : scaled;
  };
  fold(l_ce, w.lambda1);
  fold(l_itc, w.lambda2);
  fold(l_itm, w.lambda3);
  if (!acc.has_value()) return tape.leaf(Tensor::scalar(0.0));
  return *acc;
}

double joint_loss_value(double l_ce, double l_itc, double l_itm, const LossWeights& w) {
  return w.lambda1 * l_ce + w.lambda2 * l_itc + w.lambda3 * l_itm;
}

}  // namespace mmaux
