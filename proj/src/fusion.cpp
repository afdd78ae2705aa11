#include "mmaux/fusion.hpp"

#include <cmath>

#include "mmaux/errors.hpp"

namespace mmaux {

std::string fusion_name(FusionStrategy s) {
  return s == FusionStrategy::Conc ? "conc" : "att";
}

FusionStrategy fusion_from_name(const std::string& name) {
  if (name == "conc") return FusionStrategy::Conc;
  if (name == "att") return FusionStrategy::Att;
  throw ConfigError("fusion: unknown strategy '" + name + "' (expected conc or att)");
}

AttFusionParams make_att_fusion(int model_dim, int heads, const std::string& prefix, Rng& rng) {
  if (heads < 1 || model_dim % heads != 0)
    throw ConfigError("fusion: model_dim must be divisible by heads");
  const int d = model_dim;
  const double b = 1.0 / std::sqrt(static_cast<double>(d));
  auto u = [&](const std::string& name, std::vector<int> shape) {
    return Param(prefix + "." + name, Tensor::uniform(std::move(shape), -b, b, rng));
  };
  AttFusionParams p{heads,
                    u("wq", {d, d}), u("bq", {d}),
                    u("wk", {d, d}), u("bk", {d}),
                    u("wv", {d, d}), u("bv", {d}),
                    u("wo", {d, d}), u("bo", {d}),
                    Param(prefix + ".ln_gain", Tensor::full({d}, 1.0)),
                    Param(prefix + ".ln_bias", Tensor::zeros({d}))};
  return p;
}

void append_params(AttFusionParams& p, std::vector<Param*>& out) {
  for (Param* q : {&p.wq, &p.bq, &p.wk, &p.bk, &p.wv, &p.bv, &p.wo, &p.bo, &p.ln_gain,
                   &p.ln_bias})
    out.push_back(q);
}

FusedRepr fuse_conc(const ModalRepr& text, const ModalRepr& image) {
  if (text.seq_states.size() != image.seq_states.size())
    throw InputError("fuse_conc: batch sizes differ");
  const Var parts[] = {text.cls_raw, image.cls_raw};
  return FusedRepr{concat_cols(std::span<const Var>(parts)), FusionStrategy::Conc};
}

FusedRepr fuse_att(const ModalRepr& text, const ModalRepr& image, AttFusionParams& p,
                   Tape&, ParamBinding& bind) {
  const std::size_t n = text.seq_states.size();
  if (n != image.seq_states.size()) throw InputError("fuse_att: batch sizes differ");
  std::vector<Var> att_cls;
  att_cls.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Var q = linear(text.seq_states[i], bind.use(p.wq), bind.use(p.bq));
    Var k = linear(image.seq_states[i], bind.use(p.wk), bind.use(p.bk));
    Var v = linear(image.seq_states[i], bind.use(p.wv), bind.use(p.bv));
    Var att = linear(attention(q, k, v, p.heads), bind.use(p.wo), bind.use(p.bo));
    Var fused = layer_norm(add(text.seq_states[i], att), bind.use(p.ln_gain),
                           bind.use(p.ln_bias));
    att_cls.push_back(slice_rows(fused, 0, 1));
  }
  Var stacked = concat_rows(std::span<const Var>(att_cls.data(), att_cls.size()));
  const Var parts[] = {text.cls_raw, stacked};
  return FusedRepr{concat_cols(std::span<const Var>(parts)), FusionStrategy::Att};
}

}  // namespace mmaux
