#pragma once

#include <cstdint>
#include <vector>

#include "mmaux/encoders.hpp"
#include "mmaux/fusion.hpp"
#include "mmaux/param.hpp"
#include "mmaux/synthdata.hpp"
#include "mmaux/tape.hpp"

namespace mmaux {

struct ModelConfig {
  EncoderDims dims;
  FusionStrategy fusion = FusionStrategy::Att;
  int num_classes = 2;
  int fusion_heads = 4;

  void validate() const;  // throws ConfigError
};

// Dual-stream classifier: separate text and image encoders, a fusion stage
// producing h (N x 2d), a K-way task head, a 2-way match head, and the
// learnable contrastive temperature.
struct Model {
  ModelConfig config;
  TextEncoderParams text;
  ImageEncoderParams image;
  AttFusionParams att;
  Param cls_w, cls_b;
  Param itm_w, itm_b;
  Param tau;

  // Stable order: text, image, fusion, task head, match head, temperature.
  std::vector<Param*> param_list();
};

// Initialization consumes one dedicated stream per (seed), so models built
// for the same seed are identical regardless of what else the caller draws.
Model make_model(const ModelConfig& config, std::uint64_t seed);

struct ForwardPass {
  ModalRepr text;
  ModalRepr image;
  Var h;
};

ForwardPass forward_fused(Model& m, const std::vector<const Post*>& batch, Tape& tape,
                          ParamBinding& bind);

// Fusion under the model's configured strategy.
Var fuse(Model& m, const ModalRepr& text, const ModalRepr& image, Tape& tape,
         ParamBinding& bind);

// Re-pairs each text with the image at image_indices[i], reusing the encoder
// states already on the tape.
ModalRepr reindex_images(const ModalRepr& image, const std::vector<int>& image_indices,
                         Tape& tape);

Var class_logits(Model& m, Var h, ParamBinding& bind);

// Argmax labels over the whole dataset, evaluated in bounded-size chunks.
// Ties resolve to the lowest class index.
std::vector<int> predict(Model& m, const Dataset& data);

}  // namespace mmaux
