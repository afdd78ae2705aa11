#include "mmaux/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "mmaux/errors.hpp"
#include "mmaux/rng.hpp"

namespace mmaux {

namespace {

using nlohmann::json;

// Token id layout: [0, K) label motifs, [K, 2K) interaction keys,
// [2K, vocab) background.
int background_token(const SynthConfig& cfg, Rng& rng) {
  return 2 * cfg.num_classes + rng.next_int(cfg.vocab_size - 2 * cfg.num_classes);
}

// Unit-norm patch prototype per class, shared by the whole dataset.
Tensor class_prototypes(const SynthConfig& cfg) {
  Rng rng = Rng::fork(cfg.seed, rng_salt::kPrototype);
  Tensor protos = Tensor::gauss({cfg.num_classes, cfg.patch_dim}, 1.0, rng);
  for (int c = 0; c < cfg.num_classes; ++c) {
    double sq = 0.0;
    for (int j = 0; j < cfg.patch_dim; ++j) sq += protos.at(c, j) * protos.at(c, j);
    const double inv = 1.0 / std::sqrt(sq);
    for (int j = 0; j < cfg.patch_dim; ++j) protos.at(c, j) *= inv;
  }
  return protos;
}

RelationTag draw_relation(const SynthConfig& cfg, Rng& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  static constexpr RelationTag kOrder[4] = {
      {true, true}, {true, false}, {false, true}, {false, false}};
  for (int i = 0; i < 3; ++i) {
    cum += cfg.relation_mix[static_cast<std::size_t>(i)];
    if (u < cum) return kOrder[i];
  }
  return kOrder[3];
}

Post make_post(const SynthConfig& cfg, const Tensor& protos, int post_id) {
  Rng rng = Rng::fork(cfg.seed, Rng::mix(rng_salt::kPost, static_cast<std::uint64_t>(post_id)));
  Post post;
  post.post_id = post_id;
  post.label = rng.next_int(cfg.num_classes);
  post.relation = draw_relation(cfg, rng);

  const int lo = std::max(2, cfg.max_len / 2);
  const int T = lo + rng.next_int(cfg.max_len - lo + 1);
  post.tokens.resize(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) post.tokens[static_cast<std::size_t>(i)] = background_token(cfg, rng);

  std::vector<int> order(static_cast<std::size_t>(T));
  std::iota(order.begin(), order.end(), 0);
  for (int i = T - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)],
                                            order[static_cast<std::size_t>(rng.next_int(i + 1))]);

  int used = 0;
  if (post.relation.text_represented) {
    const int motif_count =
        std::min(T, std::max(1, static_cast<int>(std::lround(cfg.text_signal * 0.5 * T))));
    for (int i = 0; i < motif_count; ++i)
      post.tokens[static_cast<std::size_t>(order[static_cast<std::size_t>(used++)])] = post.label;
  }

  // The one regime where neither modality suffices alone: the prototype index
  // is label XOR a key that only the text reveals. The coupling is active with
  // probability text_signal; inactive posts use key 0, i.e. the plain label.
  int proto_index = post.label;
  if (post.relation.image_adds && !post.relation.text_represented &&
      rng.next_double() < cfg.text_signal) {
    const int key = rng.next_int(cfg.num_classes);
    proto_index = (post.label ^ key) % cfg.num_classes;
    const int key_count =
        std::min(T - used, std::max(1, static_cast<int>(std::lround(0.3 * T))));
    for (int i = 0; i < key_count; ++i)
      post.tokens[static_cast<std::size_t>(order[static_cast<std::size_t>(used++)])] =
          cfg.num_classes + key;
  }

  // Weak label cue: text-only learning stays possible but clearly inferior.
  if (!post.relation.text_represented && used < T && rng.next_double() < 0.15)
    post.tokens[static_cast<std::size_t>(order[static_cast<std::size_t>(used++)])] = post.label;

  const double corrupt_p = 0.25 * cfg.noise_level;
  for (int i = 0; i < T; ++i) {
    const double u = rng.next_double();
    const int replacement = background_token(cfg, rng);
    if (u < corrupt_p) post.tokens[static_cast<std::size_t>(i)] = replacement;
  }

  post.patches = Tensor::zeros({cfg.patch_count, cfg.patch_dim});
  for (int p = 0; p < cfg.patch_count; ++p) {
    for (int j = 0; j < cfg.patch_dim; ++j) {
      const double noise = cfg.noise_level * rng.next_gauss();
      const double base =
          post.relation.image_adds ? cfg.image_signal * protos.at(proto_index, j) : 0.0;
      post.patches.at(p, j) = base + noise;
    }
  }
  return post;
}

json config_to_json(const SynthConfig& cfg) {
  return json{{"num_posts", cfg.num_posts},
              {"num_classes", cfg.num_classes},
              {"vocab_size", cfg.vocab_size},
              {"max_len", cfg.max_len},
              {"patch_count", cfg.patch_count},
              {"patch_dim", cfg.patch_dim},
              {"relation_mix", cfg.relation_mix},
              {"text_signal", cfg.text_signal},
              {"image_signal", cfg.image_signal},
              {"noise_level", cfg.noise_level},
              {"seed", cfg.seed}};
}

SynthConfig config_from_json(const json& j) {
  SynthConfig cfg;
  cfg.num_posts = j.at("num_posts").get<int>();
  cfg.num_classes = j.at("num_classes").get<int>();
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.max_len = j.at("max_len").get<int>();
  cfg.patch_count = j.at("patch_count").get<int>();
  cfg.patch_dim = j.at("patch_dim").get<int>();
  cfg.relation_mix = j.at("relation_mix").get<std::array<double, 4>>();
  cfg.text_signal = j.at("text_signal").get<double>();
  cfg.image_signal = j.at("image_signal").get<double>();
  cfg.noise_level = j.at("noise_level").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_posts < 0) throw ConfigError("synth config: num_posts must be >= 0");
  if (num_classes < 1) throw ConfigError("synth config: num_classes must be >= 1");
  if (vocab_size < 2 * num_classes + 2)
    throw ConfigError("synth config: vocab_size must be >= 2*num_classes + 2 to leave room for "
                      "motif, key, and background tokens");
  if (max_len < 2) throw ConfigError("synth config: max_len must be >= 2");
  if (patch_count < 1) throw ConfigError("synth config: patch_count must be >= 1");
  if (patch_dim < 1) throw ConfigError("synth config: patch_dim must be >= 1");
  double mix_sum = 0.0;
  for (double p : relation_mix) {
    if (p < 0.0) throw ConfigError("synth config: relation_mix entries must be >= 0");
    mix_sum += p;
  }
  if (std::fabs(mix_sum - 1.0) > 1e-9)
    throw ConfigError("synth config: relation_mix must sum to 1");
  if (text_signal < 0.0 || text_signal > 1.0)
    throw ConfigError("synth config: text_signal must be in [0,1]");
  if (image_signal < 0.0 || image_signal > 1.0)
    throw ConfigError("synth config: image_signal must be in [0,1]");
  if (noise_level < 0.0 || noise_level > 1.0)
    throw ConfigError("synth config: noise_level must be in [0,1]");
}

Dataset generate(const SynthConfig& config) {
  config.validate();
  Dataset ds;
  ds.config = config;
  ds.split_name = "all";
  if (config.num_posts == 0) return ds;
  const Tensor protos = class_prototypes(config);
  ds.posts.reserve(static_cast<std::size_t>(config.num_posts));
  for (int id = 0; id < config.num_posts; ++id) ds.posts.push_back(make_post(config, protos, id));
  return ds;
}

std::array<Dataset, 3> split(const Dataset& dataset, const std::array<double, 3>& ratios,
                             std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split: ratios must be >= 0");
    sum += r;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("split: ratios must sum to 1");

  const int n = static_cast<int>(dataset.posts.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::fork(seed, rng_salt::kSplit);
  for (int i = n - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)],
                                            order[static_cast<std::size_t>(rng.next_int(i + 1))]);

  // Tiny slack so ratios like 0.1 floor to the intended integer at every n.
  const int n_val = static_cast<int>(std::floor(ratios[1] * n + 1e-9));
  const int n_test = static_cast<int>(std::floor(ratios[2] * n + 1e-9));
  const int n_train = n - n_val - n_test;

  std::array<Dataset, 3> out;
  const char* names[3] = {"train", "val", "test"};
  const int sizes[3] = {n_train, n_val, n_test};
  int cursor = 0;
  for (int s = 0; s < 3; ++s) {
    out[static_cast<std::size_t>(s)].config = dataset.config;
    out[static_cast<std::size_t>(s)].split_name = names[s];
    for (int i = 0; i < sizes[s]; ++i)
      out[static_cast<std::size_t>(s)].posts.push_back(
          dataset.posts[static_cast<std::size_t>(order[static_cast<std::size_t>(cursor++)])]);
  }
  return out;
}

Dataset subsample(const Dataset& train, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("subsample: fraction must be in (0,1], got " + std::to_string(fraction));
  const int n = static_cast<int>(train.posts.size());
  const int m = static_cast<int>(std::ceil(fraction * n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::fork(seed, rng_salt::kSubsample);
  for (int i = 0; i < m; ++i) {
    const int j = i + rng.next_int(n - i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  Dataset out;
  out.config = train.config;
  out.split_name = train.split_name;
  out.posts.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    out.posts.push_back(train.posts[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  return out;
}

void write_jsonl(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("write_jsonl: cannot open " + path + " for writing");
  json meta{{"version", 1}, {"split_name", dataset.split_name},
            {"config", config_to_json(dataset.config)}};
  out << meta.dump() << "\n";
  for (const Post& post : dataset.posts) {
    std::vector<std::vector<double>> patch_rows;
    patch_rows.reserve(static_cast<std::size_t>(post.patches.rows()));
    for (int p = 0; p < post.patches.rows(); ++p) {
      std::vector<double> row;
      row.reserve(static_cast<std::size_t>(post.patches.cols()));
      for (int j = 0; j < post.patches.cols(); ++j) row.push_back(post.patches.at(p, j));
      patch_rows.push_back(std::move(row));
    }
    json line{{"id", post.post_id},
              {"tokens", post.tokens},
              {"patches", patch_rows},
              {"label", post.label},
              {"relation",
               {{"image_adds", post.relation.image_adds},
                {"text_represented", post.relation.text_represented}}}};
    out << line.dump() << "\n";
  }
  if (!out) throw InputError("write_jsonl: write to " + path + " failed");
}

Dataset read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("read_jsonl: cannot open " + path);
  std::string text;
  long line_no = 0;
  Dataset ds;
  bool have_meta = false;
  while (std::getline(in, text)) {
    ++line_no;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("read_jsonl: malformed JSON: ") + e.what(), line_no);
    }
    try {
      if (!have_meta) {
        if (j.at("version").get<int>() != 1)
          throw ParseError("read_jsonl: unsupported version", line_no);
        ds.split_name = j.at("split_name").get<std::string>();
        ds.config = config_from_json(j.at("config"));
        ds.config.validate();
        have_meta = true;
        continue;
      }
      Post post;
      post.post_id = j.at("id").get<int>();
      post.tokens = j.at("tokens").get<std::vector<int>>();
      const auto rows = j.at("patches").get<std::vector<std::vector<double>>>();
      post.patches = Tensor::zeros({static_cast<int>(rows.size()),
                                    rows.empty() ? 0 : static_cast<int>(rows[0].size())});
      for (std::size_t p = 0; p < rows.size(); ++p) {
        if (rows[p].size() != rows[0].size())
          throw ParseError("read_jsonl: ragged patch rows", line_no);
        for (std::size_t c = 0; c < rows[p].size(); ++c)
          post.patches.at(static_cast<int>(p), static_cast<int>(c)) = rows[p][c];
      }
      post.label = j.at("label").get<int>();
      post.relation.image_adds = j.at("relation").at("image_adds").get<bool>();
      post.relation.text_represented = j.at("relation").at("text_represented").get<bool>();
      for (int tok : post.tokens)
        if (tok < 0 || tok >= ds.config.vocab_size)
          throw ParseError("read_jsonl: token id outside vocabulary", line_no);
      if (static_cast<int>(post.tokens.size()) > ds.config.max_len)
        throw ParseError("read_jsonl: token sequence longer than max_len", line_no);
      if (post.label < 0 || post.label >= ds.config.num_classes)
        throw ParseError("read_jsonl: label outside [0, num_classes)", line_no);
      ds.posts.push_back(std::move(post));
    } catch (const json::exception& e) {
      throw ParseError(std::string("read_jsonl: bad record: ") + e.what(), line_no);
    }
  }
  if (!have_meta) throw ParseError("read_jsonl: missing metadata line", 1);
  return ds;
}

}  // namespace mmaux
