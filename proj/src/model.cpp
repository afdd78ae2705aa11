#include "mmaux/model.hpp"

#include <cmath>
#include <string>

#include "mmaux/errors.hpp"
#include "mmaux/losses.hpp"
#include "mmaux/rng.hpp"

namespace mmaux {

void ModelConfig::validate() const {
  dims.validate();
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (fusion_heads < 1 || dims.model_dim % fusion_heads != 0)
    throw ConfigError("model: model_dim must be divisible by fusion_heads");
}

std::vector<Param*> Model::param_list() {
  std::vector<Param*> out;
  append_params(text, out);
  append_params(image, out);
  append_params(att, out);
  for (Param* p : {&cls_w, &cls_b, &itm_w, &itm_b, &tau}) out.push_back(p);
  return out;
}

Model make_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng = Rng::fork(seed, rng_salt::kInit);
  Model m;
  m.config = config;
  m.text = make_text_encoder(config.dims, "text", rng);
  m.image = make_image_encoder(config.dims, "image", rng);
  m.att = make_att_fusion(config.dims.model_dim, config.fusion_heads, "fusion", rng);
  const int h_dim = 2 * config.dims.model_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h_dim));
  m.cls_w = Param("cls.w", Tensor::uniform({h_dim, config.num_classes}, -bound, bound, rng));
  m.cls_b = Param("cls.b", Tensor::zeros({config.num_classes}));
  m.itm_w = Param("itm.w", Tensor::uniform({h_dim, 2}, -bound, bound, rng));
  m.itm_b = Param("itm.b", Tensor::zeros({2}));
  m.tau = Param("tau", Tensor::scalar(kTauInit));
  return m;
}

Var fuse(Model& m, const ModalRepr& text, const ModalRepr& image, Tape& tape,
         ParamBinding& bind) {
  if (m.config.fusion == FusionStrategy::Conc) return fuse_conc(text, image).h;
  return fuse_att(text, image, m.att, tape, bind).h;
}

ForwardPass forward_fused(Model& m, const std::vector<const Post*>& batch, Tape& tape,
                          ParamBinding& bind) {
  if (batch.empty()) throw InputError("forward_fused: empty batch");
  std::vector<std::vector<int>> tokens;
  std::vector<Tensor> patches;
  tokens.reserve(batch.size());
  patches.reserve(batch.size());
  for (const Post* p : batch) {
    tokens.push_back(p->tokens);
    patches.push_back(p->patches);
  }
  ForwardPass fp;
  fp.text = encode_text(tokens, m.text, tape, bind);
  fp.image = encode_image(patches, m.image, tape, bind);
  fp.h = fuse(m, fp.text, fp.image, tape, bind);
  return fp;
}

ModalRepr reindex_images(const ModalRepr& image, const std::vector<int>& image_indices,
                         Tape&) {
  const int n = image.cls_raw.value().rows();
  if (image_indices.size() != static_cast<std::size_t>(n))
    throw InputError("reindex_images: index count must match the batch size");
  ModalRepr out;
  out.seq_states.reserve(image_indices.size());
  for (int idx : image_indices) {
    if (idx < 0 || idx >= n) throw InputError("reindex_images: index out of range");
    out.seq_states.push_back(image.seq_states[static_cast<std::size_t>(idx)]);
  }
  out.cls_raw = gather_rows(image.cls_raw, image_indices);
  out.cls_proj = gather_rows(image.cls_proj, image_indices);
  out.cls_unit = gather_rows(image.cls_unit, image_indices);
  return out;
}

Var class_logits(Model& m, Var h, ParamBinding& bind) {
  return linear(h, bind.use(m.cls_w), bind.use(m.cls_b));
}

std::vector<int> predict(Model& m, const Dataset& data) {
  std::vector<int> preds;
  preds.reserve(data.posts.size());
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < data.posts.size(); start += chunk) {
    const std::size_t end = std::min(start + chunk, data.posts.size());
    std::vector<const Post*> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) batch.push_back(&data.posts[i]);
    Tape tape;
    ParamBinding bind(tape);
    ForwardPass fp = forward_fused(m, batch, tape, bind);
    const Tensor& logits = class_logits(m, fp.h, bind).value();
    for (int r = 0; r < logits.rows(); ++r) {
      int best = 0;
      for (int c = 1; c < logits.cols(); ++c)
        if (logits.at(r, c) > logits.at(r, best)) best = c;
      preds.push_back(best);
    }
  }
  return preds;
}

}  // namespace mmaux
