#pragma once

#include <string>

#include "mmaux/encoders.hpp"
#include "mmaux/param.hpp"
#include "mmaux/tape.hpp"

namespace mmaux {

enum class FusionStrategy { Conc, Att };

std::string fusion_name(FusionStrategy s);
FusionStrategy fusion_from_name(const std::string& name);  // throws ConfigError

// h is N x 2d: both strategies concatenate two d-vectors per example.
struct FusedRepr {
  Var h;
  FusionStrategy strategy = FusionStrategy::Conc;
};

// One cross-attention layer: text states query image states, residual from
// the query stream, then layer norm.
struct AttFusionParams {
  int heads = 4;
  Param wq, bq, wk, bk, wv, bv, wo, bo;
  Param ln_gain, ln_bias;
};

AttFusionParams make_att_fusion(int model_dim, int heads, const std::string& prefix, Rng& rng);
void append_params(AttFusionParams& p, std::vector<Param*>& out);

// h row n = [text cls, image cls], both un-normalized.
FusedRepr fuse_conc(const ModalRepr& text, const ModalRepr& image);

// h row n = [text cls, CLS-position output of the cross-attention layer].
FusedRepr fuse_att(const ModalRepr& text, const ModalRepr& image, AttFusionParams& p,
                   Tape& tape, ParamBinding& bind);

}  // namespace mmaux
