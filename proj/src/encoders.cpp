#include "mmaux/encoders.hpp"

#include <cmath>

#include "mmaux/errors.hpp"

namespace mmaux {

namespace {

Param uniform_param(const std::string& name, std::vector<int> shape, double bound, Rng& rng) {
  return Param(name, Tensor::uniform(std::move(shape), -bound, bound, rng));
}

LayerParams make_layer(const EncoderDims& dims, const std::string& prefix, Rng& rng) {
  const int d = dims.model_dim;
  const double b = 1.0 / std::sqrt(static_cast<double>(d));
  LayerParams l{
      uniform_param(prefix + ".wq", {d, d}, b, rng), uniform_param(prefix + ".bq", {d}, b, rng),
      uniform_param(prefix + ".wk", {d, d}, b, rng), uniform_param(prefix + ".bk", {d}, b, rng),
      uniform_param(prefix + ".wv", {d, d}, b, rng), uniform_param(prefix + ".bv", {d}, b, rng),
      uniform_param(prefix + ".wo", {d, d}, b, rng), uniform_param(prefix + ".bo", {d}, b, rng),
      Param(prefix + ".ln1_gain", Tensor::full({d}, 1.0)),
      Param(prefix + ".ln1_bias", Tensor::zeros({d})),
      uniform_param(prefix + ".ffn_w1", {d, dims.ffn_hidden}, b, rng),
      uniform_param(prefix + ".ffn_b1", {dims.ffn_hidden}, b, rng),
      uniform_param(prefix + ".ffn_w2", {dims.ffn_hidden, d}, b, rng),
      uniform_param(prefix + ".ffn_b2", {d}, b, rng),
      Param(prefix + ".ln2_gain", Tensor::full({d}, 1.0)),
      Param(prefix + ".ln2_bias", Tensor::zeros({d}))};
  return l;
}

TransformerCore make_core(const EncoderDims& dims, int positions, const std::string& prefix,
                          Rng& rng) {
  const int d = dims.model_dim;
  const double b = 1.0 / std::sqrt(static_cast<double>(d));
  TransformerCore core;
  core.cls = uniform_param(prefix + ".cls", {1, d}, b, rng);
  core.pos = uniform_param(prefix + ".pos", {positions, d}, b, rng);
  core.layers.reserve(static_cast<std::size_t>(dims.layers));
  for (int i = 0; i < dims.layers; ++i)
    core.layers.push_back(make_layer(dims, prefix + ".l" + std::to_string(i), rng));
  core.proj_w = uniform_param(prefix + ".proj_w", {d, dims.proj_dim}, b, rng);
  core.proj_b = uniform_param(prefix + ".proj_b", {dims.proj_dim}, b, rng);
  return core;
}

void append_core(TransformerCore& core, std::vector<Param*>& out) {
  out.push_back(&core.cls);
  out.push_back(&core.pos);
  for (LayerParams& l : core.layers) {
    for (Param* p : {&l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo, &l.ln1_gain,
                     &l.ln1_bias, &l.ffn_w1, &l.ffn_b1, &l.ffn_w2, &l.ffn_b2, &l.ln2_gain,
                     &l.ln2_bias})
      out.push_back(p);
  }
  out.push_back(&core.proj_w);
  out.push_back(&core.proj_b);
}

Var run_layer(Var x, LayerParams& l, int heads, ParamBinding& bind) {
  Var q = linear(x, bind.use(l.wq), bind.use(l.bq));
  Var k = linear(x, bind.use(l.wk), bind.use(l.bk));
  Var v = linear(x, bind.use(l.wv), bind.use(l.bv));
  Var att = linear(attention(q, k, v, heads), bind.use(l.wo), bind.use(l.bo));
  x = layer_norm(add(x, att), bind.use(l.ln1_gain), bind.use(l.ln1_bias));
  Var ff = linear(gelu(linear(x, bind.use(l.ffn_w1), bind.use(l.ffn_b1))), bind.use(l.ffn_w2),
                  bind.use(l.ffn_b2));
  return layer_norm(add(x, ff), bind.use(l.ln2_gain), bind.use(l.ln2_bias));
}

// Runs the stack over one example's embedded sequence (CLS not yet added).
Var run_core(Var embedded, TransformerCore& core, const EncoderDims& dims,
             ParamBinding& bind) {
  const int t_len = embedded.value().rows();
  const Var parts[] = {bind.use(core.cls), embedded};
  Var x = concat_rows(std::span<const Var>(parts));
  if (dims.use_positions) x = add(x, slice_rows(bind.use(core.pos), 0, t_len + 1));
  for (LayerParams& l : core.layers) x = run_layer(x, l, dims.heads, bind);
  return x;
}

ModalRepr finish_repr(std::vector<Var> seq_states, TransformerCore& core,
                      ParamBinding& bind) {
  std::vector<Var> cls_rows;
  cls_rows.reserve(seq_states.size());
  for (const Var& s : seq_states) cls_rows.push_back(slice_rows(s, 0, 1));
  ModalRepr repr;
  repr.seq_states = std::move(seq_states);
  repr.cls_raw = concat_rows(std::span<const Var>(cls_rows.data(), cls_rows.size()));
  repr.cls_proj = linear(repr.cls_raw, bind.use(core.proj_w), bind.use(core.proj_b));
  repr.cls_unit = normalize_rows(repr.cls_proj);
  return repr;
}

}  // namespace

void EncoderDims::validate() const {
  if (vocab_size < 1) throw ConfigError("encoder dims: vocab_size must be >= 1");
  if (patch_dim < 1) throw ConfigError("encoder dims: patch_dim must be >= 1");
  if (max_len < 1) throw ConfigError("encoder dims: max_len must be >= 1");
  if (patch_count < 1) throw ConfigError("encoder dims: patch_count must be >= 1");
  if (model_dim < 1) throw ConfigError("encoder dims: model_dim must be >= 1");
  if (proj_dim < 1) throw ConfigError("encoder dims: proj_dim must be >= 1");
  if (layers < 1) throw ConfigError("encoder dims: layers must be >= 1");
  if (heads < 1 || model_dim % heads != 0)
    throw ConfigError("encoder dims: model_dim must be divisible by heads");
  if (ffn_hidden < 1) throw ConfigError("encoder dims: ffn_hidden must be >= 1");
}

TextEncoderParams make_text_encoder(const EncoderDims& dims, const std::string& prefix,
                                    Rng& rng) {
  dims.validate();
  const double b = 1.0 / std::sqrt(static_cast<double>(dims.model_dim));
  TextEncoderParams p{dims,
                      uniform_param(prefix + ".token_emb", {dims.vocab_size, dims.model_dim}, b,
                                    rng),
                      make_core(dims, dims.max_len + 1, prefix, rng)};
  return p;
}

ImageEncoderParams make_image_encoder(const EncoderDims& dims, const std::string& prefix,
                                      Rng& rng) {
  dims.validate();
  const double b = 1.0 / std::sqrt(static_cast<double>(dims.model_dim));
  ImageEncoderParams p{dims,
                       uniform_param(prefix + ".patch_w", {dims.patch_dim, dims.model_dim}, b,
                                     rng),
                       uniform_param(prefix + ".patch_b", {dims.model_dim}, b, rng),
                       make_core(dims, dims.patch_count + 1, prefix, rng)};
  return p;
}

void append_params(TextEncoderParams& p, std::vector<Param*>& out) {
  out.push_back(&p.token_emb);
  append_core(p.core, out);
}

void append_params(ImageEncoderParams& p, std::vector<Param*>& out) {
  out.push_back(&p.patch_w);
  out.push_back(&p.patch_b);
  append_core(p.core, out);
}

ModalRepr encode_text(const std::vector<std::vector<int>>& tokens_batch, TextEncoderParams& p,
                      Tape&, ParamBinding& bind) {
  if (tokens_batch.empty()) throw InputError("encode_text: empty batch");
  std::vector<Var> states;
  states.reserve(tokens_batch.size());
  for (const auto& tokens : tokens_batch) {
    std::vector<int> kept;
    kept.reserve(tokens.size());
    for (int tok : tokens) {
      if (tok == kPadId) continue;
      if (tok < 0 || tok >= p.dims.vocab_size)
        throw InputError("encode_text: token id " + std::to_string(tok) +
                         " outside vocabulary of " + std::to_string(p.dims.vocab_size));
      kept.push_back(tok);
    }
    if (static_cast<int>(kept.size()) > p.dims.max_len)
      throw InputError("encode_text: sequence longer than max_len");
    Var emb = gather_rows(bind.use(p.token_emb), kept);
    states.push_back(run_core(emb, p.core, p.dims, bind));
  }
  return finish_repr(std::move(states), p.core, bind);
}

ModalRepr encode_image(const std::vector<Tensor>& patches_batch, ImageEncoderParams& p,
                       Tape& tape, ParamBinding& bind) {
  if (patches_batch.empty()) throw InputError("encode_image: empty batch");
  std::vector<Var> states;
  states.reserve(patches_batch.size());
  for (const Tensor& patches : patches_batch) {
    if (patches.rank() != 2 || patches.cols() != p.dims.patch_dim)
      throw InputError("encode_image: patches must be P x " + std::to_string(p.dims.patch_dim) +
                       ", got " + shape_str(patches.shape));
    if (patches.rows() > p.dims.patch_count)
      throw InputError("encode_image: more patches than patch_count");
    Var emb = linear(tape.leaf(patches), bind.use(p.patch_w), bind.use(p.patch_b));
    states.push_back(run_core(emb, p.core, p.dims, bind));
  }
  return finish_repr(std::move(states), p.core, bind);
}

}  // namespace mmaux
