#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmaux/losses.hpp"
#include "mmaux/metrics.hpp"
#include "mmaux/model.hpp"
#include "mmaux/synthdata.hpp"

namespace mmaux {

// Loss-weight presets: base = classification only, C adds the contrastive
// term, M the matching term, CM both.
enum class Preset { Base, C, M, CM };

std::string preset_name(Preset p);
Preset preset_from_name(const std::string& name);  // throws ConfigError
LossWeights preset_weights(Preset p);

struct TrainConfig {
  ModelConfig model;
  LossWeights weights;
  double learning_rate = 1e-4;
  int max_epochs = 20;
  int patience = 3;
  int batch_size = 16;
  std::uint64_t seed = 0;
  double data_fraction = 1.0;
  double itm_replace_prob = 0.5;
  // Early stopping tracks the validation joint loss unless this asks for the
  // classification term alone.
  bool ce_only_validation = false;

  void validate() const;  // throws ConfigError
};

struct EpochLosses {
  double ce = 0.0;
  double itc = 0.0;
  double itm = 0.0;
  double joint = 0.0;
};

struct TestMetrics {
  double weighted_f1 = 0.0;
  std::vector<double> per_class_f1;
  RelationBreakdown relations;
};

struct RunRecord {
  TrainConfig config;
  std::vector<EpochLosses> train_curve;
  std::vector<EpochLosses> val_curve;
  int best_epoch = 0;
  TestMetrics test;
  double seconds = 0.0;
};

struct TrainOutcome {
  Model model;
  RunRecord record;
};

// Full training loop: seeded epoch shuffling, Adam on the joint loss, early
// stopping on validation loss with best-epoch restore (ties keep the
// earliest epoch). Disabled components stay off the tape entirely, so their
// curves read exactly 0 and they consume no random draws.
TrainOutcome train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set);

TestMetrics evaluate(Model& model, const Dataset& test_set);

// The loop's validation pass as a standalone: fixed chunking by batch_size
// and, when the matching term is on, the fixed validation perturbation
// stream. The returned losses for the trained model match the recorded
// best-epoch row exactly.
EpochLosses evaluate_losses(Model& model, const Dataset& data, const TrainConfig& config,
                            const ClassWeights& class_weights);

struct MultiSeedResult {
  std::vector<RunRecord> records;
  std::vector<double> per_seed_f1;
  Aggregate f1;
};

MultiSeedResult run_multi_seed(const TrainConfig& config,
                               const std::vector<std::uint64_t>& seeds, const Dataset& train_set,
                               const Dataset& val_set, const Dataset& test_set);

struct SweepRow {
  double fraction = 1.0;
  Preset preset = Preset::Base;
  std::vector<double> per_seed_f1;
  Aggregate f1;
};

// One row per fraction x preset, every preset trained at every fraction.
std::vector<SweepRow> sweep_fractions(const TrainConfig& config,
                                      const std::vector<double>& fractions,
                                      const std::vector<std::uint64_t>& seeds,
                                      const Dataset& train_set, const Dataset& val_set,
                                      const Dataset& test_set);

nlohmann::json train_config_json(const TrainConfig& config);
nlohmann::json run_record_json(const RunRecord& record);
void save_run_record(const RunRecord& record, const std::string& path);

}  // namespace mmaux
