#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmaux/tensor.hpp"

namespace mmaux {

// One cell of the four-way taxonomy: does the image add meaning beyond the
// text, and is the text represented in the image.
struct RelationTag {
  bool image_adds = false;
  bool text_represented = false;

  bool operator==(const RelationTag&) const = default;
};

struct Post {
  int post_id = 0;
  std::vector<int> tokens;
  Tensor patches;  // patch_count x patch_dim
  int label = 0;
  RelationTag relation;

  bool operator==(const Post&) const = default;
};

// relation_mix order: (image_adds, text_represented) =
// (true,true), (true,false), (false,true), (false,false).
struct SynthConfig {
  int num_posts = 0;
  int num_classes = 2;
  int vocab_size = 64;
  int max_len = 16;
  int patch_count = 4;
  int patch_dim = 8;
  std::array<double, 4> relation_mix = {0.25, 0.25, 0.25, 0.25};
  double text_signal = 1.0;
  double image_signal = 1.0;
  double noise_level = 0.1;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const SynthConfig&) const = default;
};

struct Dataset {
  std::vector<Post> posts;
  SynthConfig config;
  std::string split_name = "all";

  bool operator==(const Dataset&) const = default;
};

// Deterministic in config.seed; every post derives its own stream from
// (seed, post_id), so generation order never shifts between posts.
Dataset generate(const SynthConfig& config);

// Shuffled disjoint partition. val and test sizes are floored; train takes
// the remainder.
std::array<Dataset, 3> split(const Dataset& dataset, const std::array<double, 3>& ratios,
                             std::uint64_t seed);

// Uniform subset of ceil(fraction * n) posts, unstratified.
Dataset subsample(const Dataset& train, double fraction, std::uint64_t seed);

// One metadata line, then one JSON object per post.
void write_jsonl(const Dataset& dataset, const std::string& path);
Dataset read_jsonl(const std::string& path);

}  // namespace mmaux
