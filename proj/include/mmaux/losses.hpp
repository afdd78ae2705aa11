#pragma once

#include <optional>
#include <vector>

#include "mmaux/param.hpp"
#include "mmaux/rng.hpp"
#include "mmaux/tape.hpp"

namespace mmaux {

struct LossWeights {
  double lambda1 = 1.0;  // classification
  double lambda2 = 0.0;  // contrastive
  double lambda3 = 0.0;  // matching

  void validate() const;  // throws ConfigError
};

// Perturbed pairing for the matching task. image_indices[n] == n exactly
// when match_labels[n] == 1.
struct ItmBatch {
  std::vector<int> image_indices;
  std::vector<int> match_labels;
};

struct ClassWeights {
  std::vector<double> weights;
};

inline constexpr double kTempClampLo = 1e-3;
inline constexpr double kTempClampHi = 10.0;
inline constexpr double kTauInit = -2.6592600369327783;  // ln(0.07)

// Bidirectional contrastive loss over unit rows: logits = L I^T / exp(tau),
// averaged diagonal negative log softmax in both directions, halved. With
// inverse_temperature the logits are multiplied by exp(tau) instead.
// exp(tau) is clamped to [1e-3, 10] either way.
Var itc_loss(Var l_unit, Var i_unit, Param& tau, ParamBinding& bind,
             bool inverse_temperature = false);

// Independently per post: with replace_prob pick a donor uniformly among the
// other batch members, otherwise keep the own image.
ItmBatch itm_perturb(int batch_size, double replace_prob, Rng& rng);

// Binary cross-entropy of a linear match/mismatch head on fused rows that
// were computed under the perturbed pairing.
Var itm_loss(Var h_perturbed, const ItmBatch& itm, Param& head_w, Param& head_b,
             ParamBinding& bind);

// w_c = N_total / (K * N_c).
ClassWeights balanced_class_weights(const std::vector<int>& label_counts);

// Weighted mean cross-entropy, normalized by the summed sample weights.
Var ce_loss(Var logits, const std::vector<int>& labels, const ClassWeights& class_weights);

// Weighted sum of whichever components are present; absent components count
// as zero. Returns a scalar on `tape` even when everything is absent.
Var joint_loss(std::optional<Var> l_ce, std::optional<Var> l_itc, std::optional<Var> l_itm,
               const LossWeights& w, Tape& tape);

double joint_loss_value(double l_ce, double l_itc, double l_itm, const LossWeights& w);

}  // namespace mmaux
