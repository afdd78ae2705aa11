#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmaux/synthdata.hpp"
#include "mmaux/trainer.hpp"

namespace mmaux {

// One experiment description: data generation, model shape, and training
// settings. The encoder input dims (vocabulary, lengths, patch geometry)
// come from the [data] section so the two can never disagree.
struct ExperimentConfig {
  SynthConfig data;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
  std::string data_dir = "data";
  TrainConfig train;
  Preset preset = Preset::Base;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

// INI-style file: [data] / [model] / [train] sections, key = value lines,
// '#' or ';' comments. Unknown sections and keys are rejected with their
// line number; value-range problems surface as configuration errors naming
// the field.
ExperimentConfig parse_experiment_config(const std::string& path);

// Everything the run will actually use, for echoing into output dirs.
nlohmann::json experiment_config_json(const ExperimentConfig& cfg);

}  // namespace mmaux
