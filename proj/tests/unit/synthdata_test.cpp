#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mmaux/errors.hpp"
#include "mmaux/synthdata.hpp"

using namespace mmaux;

namespace {

std::vector<double> mean_patch(const Post& post) {
  std::vector<double> m(static_cast<std::size_t>(post.patches.cols()), 0.0);
  for (int p = 0; p < post.patches.rows(); ++p)
    for (int j = 0; j < post.patches.cols(); ++j)
      m[static_cast<std::size_t>(j)] += post.patches.at(p, j) / post.patches.rows();
  return m;
}

// Brute-force baseline: per-class centroid of mean patch vectors from the
// first half, nearest-centroid classification on the second half.
double nearest_centroid_accuracy(const Dataset& ds) {
  const std::size_t half = ds.posts.size() / 2;
  const int k = ds.config.num_classes;
  const std::size_t dim = static_cast<std::size_t>(ds.config.patch_dim);
  std::vector<std::vector<double>> centroid(static_cast<std::size_t>(k),
                                            std::vector<double>(dim, 0.0));
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < half; ++i) {
    const auto m = mean_patch(ds.posts[i]);
    const auto lab = static_cast<std::size_t>(ds.posts[i].label);
    for (std::size_t j = 0; j < dim; ++j) centroid[lab][j] += m[j];
    count[lab] += 1;
  }
  for (int c = 0; c < k; ++c) {
    REQUIRE(count[static_cast<std::size_t>(c)] > 0);
    for (std::size_t j = 0; j < dim; ++j)
      centroid[static_cast<std::size_t>(c)][j] /= count[static_cast<std::size_t>(c)];
  }
  int hits = 0;
  for (std::size_t i = half; i < ds.posts.size(); ++i) {
    const auto m = mean_patch(ds.posts[i]);
    int best = 0;
    double best_d = 1e300;
    for (int c = 0; c < k; ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = m[j] - centroid[static_cast<std::size_t>(c)][j];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    hits += (best == ds.posts[i].label) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.posts.size() - half);
}

SynthConfig base_config() {
  SynthConfig cfg;
  cfg.num_posts = 400;
  cfg.num_classes = 2;
  cfg.vocab_size = 64;
  cfg.max_len = 16;
  cfg.patch_count = 4;
  cfg.patch_dim = 8;
  cfg.seed = 77;
  return cfg;
}

std::string temp_path(const char* name) {
  return std::string("synthdata_test_") + name + ".jsonl";
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  SynthConfig cfg = base_config();
  cfg.num_classes = 0;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = base_config();
  cfg.num_posts = -1;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = base_config();
  cfg.vocab_size = 5;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = base_config();
  cfg.relation_mix = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = base_config();
  cfg.text_signal = 1.5;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = base_config();
  cfg.noise_level = -0.1;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = base_config();
  cfg.max_len = 1;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("generation is deterministic and respects field ranges") {
  SynthConfig cfg = base_config();
  cfg.num_posts = 0;
  CHECK(generate(cfg).posts.empty());

  cfg.num_posts = 300;
  cfg.noise_level = 0.4;
  Dataset a = generate(cfg);
  Dataset b = generate(cfg);
  CHECK(a == b);
  CHECK(a.posts.size() == 300);

  std::set<int> ids;
  for (const Post& p : a.posts) {
    ids.insert(p.post_id);
    CHECK(p.label >= 0);
    CHECK(p.label < cfg.num_classes);
    CHECK(static_cast<int>(p.tokens.size()) <= cfg.max_len);
    CHECK(static_cast<int>(p.tokens.size()) >= 2);
    for (int tok : p.tokens) {
      CHECK(tok >= 0);
      CHECK(tok < cfg.vocab_size);
    }
    CHECK(p.patches.rows() == cfg.patch_count);
    CHECK(p.patches.cols() == cfg.patch_dim);
    CHECK(p.patches.all_finite());
  }
  CHECK(ids.size() == a.posts.size());

  cfg.seed = 78;
  CHECK_FALSE(generate(cfg) == a);
}

TEST_CASE("relation proportions track the mix within multinomial noise") {
  SynthConfig cfg = base_config();
  cfg.num_posts = 4000;
  cfg.relation_mix = {0.4, 0.3, 0.2, 0.1};
  Dataset ds = generate(cfg);
  int counts[4] = {0, 0, 0, 0};
  for (const Post& p : ds.posts) {
    const int idx = p.relation.image_adds ? (p.relation.text_represented ? 0 : 1)
                                          : (p.relation.text_represented ? 2 : 3);
    counts[idx] += 1;
  }
  for (int i = 0; i < 4; ++i) {
    const double expect = cfg.relation_mix[static_cast<std::size_t>(i)] * cfg.num_posts;
    const double sigma = std::sqrt(expect * (1.0 - cfg.relation_mix[static_cast<std::size_t>(i)]));
    CHECK(std::fabs(counts[i] - expect) <= 3.0 * sigma);
  }
}

TEST_CASE("clean image-only regime is perfectly separable by patch centroids") {
  SynthConfig cfg = base_config();
  cfg.relation_mix = {0.0, 1.0, 0.0, 0.0};
  cfg.text_signal = 0.0;
  cfg.image_signal = 1.0;
  cfg.noise_level = 0.0;
  CHECK(nearest_centroid_accuracy(generate(cfg)) == 1.0);
}

TEST_CASE("zero image signal leaves patch centroids at chance") {
  SynthConfig cfg = base_config();
  cfg.num_posts = 1000;
  cfg.relation_mix = {1.0, 0.0, 0.0, 0.0};
  cfg.image_signal = 0.0;
  cfg.noise_level = 0.5;
  const double acc = nearest_centroid_accuracy(generate(cfg));
  const double sigma = std::sqrt(0.25 / 500.0);
  CHECK(std::fabs(acc - 0.5) <= 3.0 * sigma);
}

TEST_CASE("interaction regime hides the label from each single modality") {
  SynthConfig cfg = base_config();
  cfg.num_posts = 600;
  cfg.relation_mix = {0.0, 1.0, 0.0, 0.0};
  cfg.text_signal = 1.0;
  cfg.image_signal = 1.0;
  cfg.noise_level = 0.0;
  Dataset ds = generate(cfg);

  // Image alone is at chance: the prototype index mixes the label with a key.
  const double acc = nearest_centroid_accuracy(ds);
  const double sigma = std::sqrt(0.25 / 300.0);
  CHECK(std::fabs(acc - 0.5) <= 3.0 * sigma);

  // Noise-free patches collapse to exactly num_classes distinct prototypes.
  std::set<std::vector<double>> distinct;
  for (const Post& p : ds.posts) distinct.insert(mean_patch(p));
  CHECK(distinct.size() == static_cast<std::size_t>(cfg.num_classes));

  // Every post carries a key token, and (label, key) pins the prototype.
  std::map<std::pair<int, int>, std::vector<double>> by_pair;
  for (const Post& p : ds.posts) {
    int key = -1;
    for (int tok : p.tokens)
      if (tok >= cfg.num_classes && tok < 2 * cfg.num_classes) key = tok - cfg.num_classes;
    REQUIRE(key >= 0);
    const auto m = mean_patch(p);
    auto [it, inserted] = by_pair.try_emplace({p.label, key}, m);
    if (!inserted) CHECK(it->second == m);
  }
  CHECK(by_pair.size() == 4);
}

TEST_CASE("split sizes, disjointness, and rounding rule") {
  SynthConfig cfg = base_config();
  cfg.num_posts = 100;
  Dataset ds = generate(cfg);
  auto [train, val, test] = split(ds, {0.8, 0.1, 0.1}, 5);
  CHECK(train.posts.size() == 80);
  CHECK(val.posts.size() == 10);
  CHECK(test.posts.size() == 10);
  CHECK(train.split_name == "train");
  CHECK(val.split_name == "val");
  CHECK(test.split_name == "test");

  std::set<int> seen;
  for (const Dataset* d : {&train, &val, &test})
    for (const Post& p : d->posts) CHECK(seen.insert(p.post_id).second);
  CHECK(seen.size() == 100);

  auto [t2, v2, s2] = split(ds, {0.8, 0.1, 0.1}, 5);
  CHECK(t2 == train);
  auto [t3, v3, s3] = split(ds, {1.0, 0.0, 0.0}, 5);
  CHECK(t3.posts.size() == 100);
  CHECK(v3.posts.empty());
  CHECK(s3.posts.empty());

  for (int n = 0; n <= 20; ++n) {
    SynthConfig small = base_config();
    small.num_posts = n;
    Dataset d = generate(small);
    auto [tr, va, te] = split(d, {0.8, 0.1, 0.1}, 3);
    const int expect_val = n / 10;
    const int expect_test = n / 10;
    CHECK(static_cast<int>(va.posts.size()) == expect_val);
    CHECK(static_cast<int>(te.posts.size()) == expect_test);
    CHECK(static_cast<int>(tr.posts.size()) == n - expect_val - expect_test);
  }

  CHECK_THROWS_AS(split(ds, {0.8, 0.1, 0.2}, 5), ConfigError);
  CHECK_THROWS_AS(split(ds, {1.2, -0.1, -0.1}, 5), ConfigError);
}

TEST_CASE("subsample sizes and determinism") {
  SynthConfig cfg = base_config();
  cfg.num_posts = 100;
  Dataset ds = generate(cfg);
  CHECK(subsample(ds, 0.2, 9).posts.size() == 20);

  SynthConfig ten = base_config();
  ten.num_posts = 10;
  CHECK(subsample(generate(ten), 0.15, 9).posts.size() == 2);

  Dataset full = subsample(ds, 1.0, 9);
  std::set<int> a, b;
  for (const Post& p : ds.posts) a.insert(p.post_id);
  for (const Post& p : full.posts) b.insert(p.post_id);
  CHECK(a == b);

  Dataset s1 = subsample(ds, 0.3, 11);
  Dataset s2 = subsample(ds, 0.3, 11);
  CHECK(s1 == s2);
  CHECK_THROWS_AS(subsample(ds, 0.0, 9), ConfigError);
  CHECK_THROWS_AS(subsample(ds, 1.2, 9), ConfigError);
}

TEST_CASE("jsonl round trip is exact and byte-stable") {
  SynthConfig cfg = base_config();
  cfg.num_posts = 40;
  cfg.noise_level = 0.37;
  Dataset ds = generate(cfg);
  const std::string path = temp_path("roundtrip");
  write_jsonl(ds, path);
  Dataset back = read_jsonl(path);
  CHECK(back == ds);

  const std::string path2 = temp_path("roundtrip2");
  write_jsonl(back, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  std::remove(path.c_str());
  std::remove(path2.c_str());

  Dataset empty;
  empty.config = base_config();
  empty.config.num_posts = 0;
  empty.split_name = "val";
  const std::string path3 = temp_path("empty");
  write_jsonl(empty, path3);
  CHECK(read_jsonl(path3) == empty);
  std::remove(path3.c_str());
}

TEST_CASE("jsonl parse errors cite the line number") {
  SynthConfig cfg = base_config();
  cfg.num_posts = 5;
  Dataset ds = generate(cfg);
  const std::string path = temp_path("broken");
  write_jsonl(ds, path);

  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  in.close();
  lines[2] = lines[2].substr(0, lines[2].size() / 2);
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
  out.close();

  try {
    read_jsonl(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::remove(path.c_str());

  const std::string path2 = temp_path("nometa");
  std::ofstream out2(path2);
  out2 << "{\"not\": \"metadata\"}\n";
  out2.close();
  CHECK_THROWS_AS(read_jsonl(path2), ParseError);
  std::remove(path2.c_str());

  CHECK_THROWS_AS(read_jsonl("does_not_exist.jsonl"), InputError);
}
