#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmaux/param.hpp"
#include "mmaux/tape.hpp"

namespace mmaux {

// Token id that marks padding in a batch; padded positions never reach the
// attention stack.
inline constexpr int kPadId = -1;

struct EncoderDims {
  int vocab_size = 64;
  int patch_dim = 8;
  int max_len = 16;      // token positions excluding CLS
  int patch_count = 4;   // patch positions excluding CLS
  int model_dim = 32;
  int proj_dim = 16;     // shared contrastive dim
  int layers = 2;
  int heads = 4;
  int ffn_hidden = 64;
  bool use_positions = true;

  void validate() const;  // throws ConfigError
};

struct LayerParams {
  Param wq, bq, wk, bk, wv, bv, wo, bo;
  Param ln1_gain, ln1_bias;
  Param ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Param ln2_gain, ln2_bias;
};

// Shared trunk: CLS slot, learned positions, transformer layers, and the
// projection head feeding the contrastive pathway.
struct TransformerCore {
  Param cls;  // 1 x d
  Param pos;  // (1 + sequence positions) x d
  std::vector<LayerParams> layers;
  Param proj_w, proj_b;  // d -> proj_dim
};

struct TextEncoderParams {
  EncoderDims dims;
  Param token_emb;  // vocab x d
  TransformerCore core;
};

struct ImageEncoderParams {
  EncoderDims dims;
  Param patch_w, patch_b;  // patch_dim -> d
  TransformerCore core;
};

// Per-batch encoder output. seq_states[i] is the (T_i + 1) x d state matrix
// of example i (row 0 = CLS); the cls_* tensors stack the batch.
struct ModalRepr {
  std::vector<Var> seq_states;
  Var cls_raw;   // N x d
  Var cls_proj;  // N x proj_dim
  Var cls_unit;  // N x proj_dim, unit rows
};

// Weight matrices and embeddings start uniform in [-1/sqrt(d), 1/sqrt(d)];
// layer-norm gains start at 1 and their biases at 0 so early activations
// keep unit scale.
TextEncoderParams make_text_encoder(const EncoderDims& dims, const std::string& prefix,
                                    Rng& rng);
ImageEncoderParams make_image_encoder(const EncoderDims& dims, const std::string& prefix,
                                      Rng& rng);

void append_params(TextEncoderParams& p, std::vector<Param*>& out);
void append_params(ImageEncoderParams& p, std::vector<Param*>& out);

ModalRepr encode_text(const std::vector<std::vector<int>>& tokens_batch, TextEncoderParams& p,
                      Tape& tape, ParamBinding& bind);
ModalRepr encode_image(const std::vector<Tensor>& patches_batch, ImageEncoderParams& p,
                       Tape& tape, ParamBinding& bind);

}  // namespace mmaux
