#include "mmaux/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>

#include "mmaux/adam.hpp"
#include "mmaux/errors.hpp"
#include "mmaux/rng.hpp"

namespace mmaux {

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::Base: return "base";
    case Preset::C: return "C";
    case Preset::M: return "M";
    case Preset::CM: return "CM";
  }
  throw ConfigError("preset: unknown value");
}

Preset preset_from_name(const std::string& name) {
  if (name == "base") return Preset::Base;
  if (name == "C") return Preset::C;
  if (name == "M") return Preset::M;
  if (name == "CM") return Preset::CM;
  throw ConfigError("preset: unknown name '" + name + "' (expected base, C, M, or CM)");
}

LossWeights preset_weights(Preset p) {
  LossWeights w;
  switch (p) {
    case Preset::Base: w.lambda1 = 1.0; break;
    case Preset::C: w.lambda1 = 0.9; w.lambda2 = 0.1; break;
    case Preset::M: w.lambda1 = 0.9; w.lambda3 = 0.1; break;
    case Preset::CM: w.lambda1 = 0.8; w.lambda2 = 0.1; w.lambda3 = 0.1; break;
  }
  return w;
}

void TrainConfig::validate() const {
  model.validate();
  weights.validate();
  if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if ((weights.lambda2 > 0.0 || weights.lambda3 > 0.0) && batch_size < 2)
    throw ConfigError("train: batch_size must be >= 2 when contrastive or matching terms are on");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0))
    throw ConfigError("train: data_fraction must lie in (0, 1]");
  if (itm_replace_prob < 0.0 || itm_replace_prob > 1.0)
    throw ConfigError("train: itm_replace_prob must lie in [0, 1]");
}

namespace {

std::vector<int> label_counts(const Dataset& data, int num_classes) {
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (const Post& p : data.posts) {
    if (p.label < 0 || p.label >= num_classes)
      throw InputError("train: post label " + std::to_string(p.label) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    ++counts[static_cast<std::size_t>(p.label)];
  }
  return counts;
}

struct BatchLosses {
  double ce = 0.0, itc = 0.0, itm = 0.0, joint = 0.0;
};

// Forward pass plus all enabled loss terms for one batch. `itm_rng` is only
// consumed when the matching term is enabled and the batch can host it.
BatchLosses batch_losses(Model& model, const std::vector<const Post*>& batch,
                         const TrainConfig& config, const ClassWeights& class_weights,
                         Rng* itm_rng, Tape& tape, ParamBinding& bind, Var* joint_out) {
  const int bsize = static_cast<int>(batch.size());
  std::vector<int> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = batch[i]->label;

  ForwardPass fp = forward_fused(model, batch, tape, bind);
  Var ce = ce_loss(class_logits(model, fp.h, bind), labels, class_weights);

  // An undersized trailing batch keeps its classification term but cannot
  // host in-batch negatives or donors.
  std::optional<Var> itc, itm;
  if (config.weights.lambda2 > 0.0 && bsize >= 2)
    itc = itc_loss(fp.text.cls_unit, fp.image.cls_unit, model.tau, bind);
  if (config.weights.lambda3 > 0.0 && bsize >= 2) {
    ItmBatch ib = itm_perturb(bsize, config.itm_replace_prob, *itm_rng);
    ModalRepr perturbed = reindex_images(fp.image, ib.image_indices, tape);
    Var h_perturbed = fuse(model, fp.text, perturbed, tape, bind);
    itm = itm_loss(h_perturbed, ib, model.itm_w, model.itm_b, bind);
  }
  Var joint = joint_loss(ce, itc, itm, config.weights, tape);
  if (joint_out != nullptr) *joint_out = joint;

  BatchLosses out;
  out.ce = ce.item();
  out.itc = itc.has_value() ? itc->item() : 0.0;
  out.itm = itm.has_value() ? itm->item() : 0.0;
  out.joint = joint.item();
  return out;
}

// Post-count-weighted mean of per-batch losses over a fixed chunking.
EpochLosses dataset_losses(Model& model, const Dataset& data, const TrainConfig& config,
                           const ClassWeights& class_weights, Rng* itm_rng) {
  EpochLosses sums;
  const std::size_t n = data.posts.size();
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
    std::vector<const Post*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&data.posts[i]);
    Tape tape;
    ParamBinding bind(tape);
    BatchLosses bl = batch_losses(model, batch, config, class_weights, itm_rng, tape, bind,
                                  nullptr);
    const double w = static_cast<double>(end - start);
    sums.ce += bl.ce * w;
    sums.itc += bl.itc * w;
    sums.itm += bl.itm * w;
    sums.joint += bl.joint * w;
  }
  const double total = static_cast<double>(n);
  return {sums.ce / total, sums.itc / total, sums.itm / total, sums.joint / total};
}

}  // namespace

TrainOutcome train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set) {
  config.validate();
  if (train_set.posts.empty()) throw ConfigError("train: training split is empty");
  if (val_set.posts.empty()) throw ConfigError("train: validation split is empty");

  const auto started = std::chrono::steady_clock::now();

  // Fraction 1.0 trains on the split as-is, so full-data runs and sweeps at
  // fraction 1.0 are bit-identical.
  Dataset working =
      config.data_fraction < 1.0 ? subsample(train_set, config.data_fraction, config.seed)
                                 : train_set;
  const ClassWeights class_weights =
      balanced_class_weights(label_counts(working, config.model.num_classes));
  label_counts(val_set, config.model.num_classes);

  TrainOutcome out;
  out.model = make_model(config.model, config.seed);
  out.record.config = config;
  std::vector<Param*> params = out.model.param_list();
  AdamState opt = make_adam_state(params, config.learning_rate);

  const bool use_itm = config.weights.lambda3 > 0.0;
  const std::size_t n = working.posts.size();

  std::vector<Tensor> best_values;
  double best_criterion = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = Rng::fork(config.seed, Rng::mix(rng_salt::kShuffle,
                                                      static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_int(static_cast<int>(i)));
      std::swap(order[i - 1], order[j]);
    }
    Rng itm_rng = Rng::fork(config.seed,
                            Rng::mix(rng_salt::kItm, static_cast<std::uint64_t>(epoch)));

    EpochLosses sums;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Post*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&working.posts[order[i]]);

      Tape tape;
      ParamBinding bind(tape);
      Var joint;
      BatchLosses bl = batch_losses(out.model, batch, config, class_weights,
                                    use_itm ? &itm_rng : nullptr, tape, bind, &joint);
      for (Param* p : params) p->reset_grad();
      tape.backward(joint);
      bind.accumulate_grads();
      adam_step(params, opt);

      const double w = static_cast<double>(end - start);
      sums.ce += bl.ce * w;
      sums.itc += bl.itc * w;
      sums.itm += bl.itm * w;
      sums.joint += bl.joint * w;
    }
    const double total = static_cast<double>(n);
    out.record.train_curve.push_back(
        {sums.ce / total, sums.itc / total, sums.itm / total, sums.joint / total});

    // Validation uses a fixed chunking and, for the matching term, a fixed
    // perturbation stream, so the criterion is comparable across epochs.
    EpochLosses val = evaluate_losses(out.model, val_set, config, class_weights);
    out.record.val_curve.push_back(val);

    const double criterion = config.ce_only_validation ? val.ce : val.joint;
    if (criterion < best_criterion) {
      best_criterion = criterion;
      out.record.best_epoch = epoch;
      best_values.clear();
      for (Param* p : params) best_values.push_back(p->value);
      stall = 0;
    } else {
      ++stall;
      if (stall >= config.patience) break;
    }
  }

  // Only a non-finite criterion in every epoch can leave this empty.
  if (best_values.size() != params.size())
    throw CheckError("train: validation criterion was never finite");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  out.record.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

EpochLosses evaluate_losses(Model& model, const Dataset& data, const TrainConfig& config,
                            const ClassWeights& class_weights) {
  if (data.posts.empty()) throw InputError("evaluate_losses: empty dataset");
  Rng val_itm_rng = Rng::fork(config.seed, rng_salt::kItmVal);
  const bool use_itm = config.weights.lambda3 > 0.0;
  return dataset_losses(model, data, config, class_weights, use_itm ? &val_itm_rng : nullptr);
}

TestMetrics evaluate(Model& model, const Dataset& test_set) {
  if (test_set.posts.empty()) throw InputError("evaluate: empty dataset");
  std::vector<int> preds = predict(model, test_set);
  std::vector<int> golds;
  std::vector<RelationTag> relations;
  golds.reserve(test_set.posts.size());
  relations.reserve(test_set.posts.size());
  for (const Post& p : test_set.posts) {
    golds.push_back(p.label);
    relations.push_back(p.relation);
  }
  TestMetrics tm;
  F1Breakdown f1 = f1_breakdown(preds, golds, model.config.num_classes);
  tm.weighted_f1 = f1.weighted;
  tm.per_class_f1 = f1.per_class;
  tm.relations = accuracy_by_relation(preds, golds, relations);
  return tm;
}

MultiSeedResult run_multi_seed(const TrainConfig& config,
                               const std::vector<std::uint64_t>& seeds, const Dataset& train_set,
                               const Dataset& val_set, const Dataset& test_set) {
  if (seeds.empty()) throw ConfigError("run_multi_seed: need at least one seed");
  MultiSeedResult result;
  for (std::uint64_t seed : seeds) {
    TrainConfig cfg = config;
    cfg.seed = seed;
    TrainOutcome outcome = train(cfg, train_set, val_set);
    outcome.record.test = evaluate(outcome.model, test_set);
    result.per_seed_f1.push_back(outcome.record.test.weighted_f1);
    result.records.push_back(std::move(outcome.record));
  }
  result.f1 = aggregate(result.per_seed_f1);
  return result;
}

std::vector<SweepRow> sweep_fractions(const TrainConfig& config,
                                      const std::vector<double>& fractions,
                                      const std::vector<std::uint64_t>& seeds,
                                      const Dataset& train_set, const Dataset& val_set,
                                      const Dataset& test_set) {
  if (fractions.empty()) throw ConfigError("sweep: need at least one fraction");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sweep: fractions must lie in (0, 1]");
  std::vector<SweepRow> rows;
  for (double fraction : fractions) {
    for (Preset preset : {Preset::Base, Preset::C, Preset::M, Preset::CM}) {
      TrainConfig cfg = config;
      cfg.weights = preset_weights(preset);
      cfg.data_fraction = fraction;
      MultiSeedResult r = run_multi_seed(cfg, seeds, train_set, val_set, test_set);
      rows.push_back({fraction, preset, std::move(r.per_seed_f1), r.f1});
    }
  }
  return rows;
}

nlohmann::json train_config_json(const TrainConfig& config) {
  return nlohmann::json{{"fusion", fusion_name(config.model.fusion)},
                        {"num_classes", config.model.num_classes},
                        {"fusion_heads", config.model.fusion_heads},
                        {"vocab_size", config.model.dims.vocab_size},
                        {"patch_dim", config.model.dims.patch_dim},
                        {"max_len", config.model.dims.max_len},
                        {"patch_count", config.model.dims.patch_count},
                        {"model_dim", config.model.dims.model_dim},
                        {"proj_dim", config.model.dims.proj_dim},
                        {"layers", config.model.dims.layers},
                        {"heads", config.model.dims.heads},
                        {"ffn_hidden", config.model.dims.ffn_hidden},
                        {"use_positions", config.model.dims.use_positions},
                        {"lambda1", config.weights.lambda1},
                        {"lambda2", config.weights.lambda2},
                        {"lambda3", config.weights.lambda3},
                        {"learning_rate", config.learning_rate},
                        {"max_epochs", config.max_epochs},
                        {"patience", config.patience},
                        {"batch_size", config.batch_size},
                        {"seed", config.seed},
                        {"data_fraction", config.data_fraction},
                        {"itm_replace_prob", config.itm_replace_prob},
                        {"ce_only_validation", config.ce_only_validation}};
}

nlohmann::json run_record_json(const RunRecord& record) {
  nlohmann::json epochs = nlohmann::json::array();
  for (std::size_t e = 0; e < record.train_curve.size(); ++e) {
    const EpochLosses& tr = record.train_curve[e];
    const EpochLosses& vl = record.val_curve[e];
    epochs.push_back(
        {{"train", {{"ce", tr.ce}, {"itc", tr.itc}, {"itm", tr.itm}, {"joint", tr.joint}}},
         {"val", {{"ce", vl.ce}, {"itc", vl.itc}, {"itm", vl.itm}, {"joint", vl.joint}}}});
  }
  nlohmann::json relations = nlohmann::json::object();
  for (const RelationAccuracy& row : record.test.relations.rows)
    relations[relation_key(row.tag)] = {{"accuracy", row.accuracy},
                                        {"correct", row.correct},
                                        {"support", row.support}};
  return nlohmann::json{{"config", train_config_json(record.config)},
                        {"epochs", epochs},
                        {"best_epoch", record.best_epoch},
                        {"test",
                         {{"weighted_f1", record.test.weighted_f1},
                          {"per_class_f1", record.test.per_class_f1},
                          {"per_relation_acc", relations}}},
                        {"seconds", record.seconds}};
}

void save_run_record(const RunRecord& record, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("save_run_record: cannot open '" + path + "' for writing");
  out << run_record_json(record).dump(2) << '\n';
}

}  // namespace mmaux
