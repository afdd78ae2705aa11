#include "mmaux/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mmaux/errors.hpp"

namespace mmaux {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) {
      parts.push_back(trim(s.substr(start)));
      return parts;
    }
    parts.push_back(trim(s.substr(start, comma - start)));
    start = comma + 1;
  }
}

double parse_double(const std::string& v, long line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ParseError("config: expected a number, got '" + v + "'", line);
  }
}

int parse_int(const std::string& v, long line) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<int>(x);
  } catch (const std::exception&) {
    throw ParseError("config: expected an integer, got '" + v + "'", line);
  }
}

std::uint64_t parse_u64(const std::string& v, long line) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size() || v.empty() || v[0] == '-')
      throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ParseError("config: expected an unsigned integer, got '" + v + "'", line);
  }
}

bool parse_bool(const std::string& v, long line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError("config: expected true or false, got '" + v + "'", line);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");

  ExperimentConfig cfg;
  std::string section;
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("config: unterminated section header", line_no);
      section = line.substr(1, line.size() - 2);
      if (section != "data" && section != "model" && section != "train")
        throw ParseError("config: unknown section '[" + section + "]'", line_no);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ParseError("config: key '" + key + "' appears before any section", line_no);

    if (section == "data") {
      if (key == "num_posts") cfg.data.num_posts = parse_int(value, line_no);
      else if (key == "num_classes") cfg.data.num_classes = parse_int(value, line_no);
      else if (key == "vocab_size") cfg.data.vocab_size = parse_int(value, line_no);
      else if (key == "max_len") cfg.data.max_len = parse_int(value, line_no);
      else if (key == "patch_count") cfg.data.patch_count = parse_int(value, line_no);
      else if (key == "patch_dim") cfg.data.patch_dim = parse_int(value, line_no);
      else if (key == "relation_mix") {
        const auto parts = split_csv(value);
        if (parts.size() != 4)
          throw ParseError("config: relation_mix needs 4 comma-separated values", line_no);
        for (std::size_t i = 0; i < 4; ++i)
          cfg.data.relation_mix[i] = parse_double(parts[i], line_no);
      } else if (key == "text_signal") cfg.data.text_signal = parse_double(value, line_no);
      else if (key == "image_signal") cfg.data.image_signal = parse_double(value, line_no);
      else if (key == "noise_level") cfg.data.noise_level = parse_double(value, line_no);
      else if (key == "seed") cfg.data.seed = parse_u64(value, line_no);
      else if (key == "split_ratios") {
        const auto parts = split_csv(value);
        if (parts.size() != 3)
          throw ParseError("config: split_ratios needs 3 comma-separated values", line_no);
        for (std::size_t i = 0; i < 3; ++i)
          cfg.split_ratios[i] = parse_double(parts[i], line_no);
      } else if (key == "dir") cfg.data_dir = value;
      else throw ParseError("config: unknown key '" + key + "' in [data]", line_no);
    } else if (section == "model") {
      if (key == "model_dim") cfg.train.model.dims.model_dim = parse_int(value, line_no);
      else if (key == "proj_dim") cfg.train.model.dims.proj_dim = parse_int(value, line_no);
      else if (key == "layers") cfg.train.model.dims.layers = parse_int(value, line_no);
      else if (key == "heads") cfg.train.model.dims.heads = parse_int(value, line_no);
      else if (key == "ffn_hidden") cfg.train.model.dims.ffn_hidden = parse_int(value, line_no);
      else if (key == "use_positions")
        cfg.train.model.dims.use_positions = parse_bool(value, line_no);
      else if (key == "fusion") {
        try {
          cfg.train.model.fusion = fusion_from_name(value);
        } catch (const ConfigError&) {
          throw ParseError("config: fusion must be conc or att, got '" + value + "'", line_no);
        }
      } else if (key == "fusion_heads")
        cfg.train.model.fusion_heads = parse_int(value, line_no);
      else throw ParseError("config: unknown key '" + key + "' in [model]", line_no);
    } else {
      if (key == "learning_rate") cfg.train.learning_rate = parse_double(value, line_no);
      else if (key == "max_epochs") cfg.train.max_epochs = parse_int(value, line_no);
      else if (key == "patience") cfg.train.patience = parse_int(value, line_no);
      else if (key == "batch_size") cfg.train.batch_size = parse_int(value, line_no);
      else if (key == "preset") {
        try {
          cfg.preset = preset_from_name(value);
        } catch (const ConfigError&) {
          throw ParseError("config: preset must be base, C, M, or CM, got '" + value + "'",
                           line_no);
        }
      } else if (key == "seeds") {
        cfg.seeds.clear();
        for (const std::string& part : split_csv(value))
          cfg.seeds.push_back(parse_u64(part, line_no));
      } else if (key == "data_fraction") cfg.train.data_fraction = parse_double(value, line_no);
      else if (key == "itm_replace_prob")
        cfg.train.itm_replace_prob = parse_double(value, line_no);
      else if (key == "ce_only_validation")
        cfg.train.ce_only_validation = parse_bool(value, line_no);
      else throw ParseError("config: unknown key '" + key + "' in [train]", line_no);
    }
  }

  // The encoders consume exactly what the generator produces.
  cfg.train.model.dims.vocab_size = cfg.data.vocab_size;
  cfg.train.model.dims.max_len = cfg.data.max_len;
  cfg.train.model.dims.patch_count = cfg.data.patch_count;
  cfg.train.model.dims.patch_dim = cfg.data.patch_dim;
  cfg.train.model.num_classes = cfg.data.num_classes;
  cfg.train.weights = preset_weights(cfg.preset);

  cfg.data.validate();
  double ratio_sum = 0.0;
  for (double r : cfg.split_ratios) {
    if (r < 0.0) throw ConfigError("config: split_ratios entries must be >= 0");
    ratio_sum += r;
  }
  if (std::fabs(ratio_sum - 1.0) > 1e-9)
    throw ConfigError("config: split_ratios must sum to 1");
  if (cfg.seeds.empty()) throw ConfigError("config: seeds must not be empty");
  cfg.train.validate();
  return cfg;
}

nlohmann::json experiment_config_json(const ExperimentConfig& cfg) {
  return nlohmann::json{
      {"data",
       {{"num_posts", cfg.data.num_posts},
        {"num_classes", cfg.data.num_classes},
        {"vocab_size", cfg.data.vocab_size},
        {"max_len", cfg.data.max_len},
        {"patch_count", cfg.data.patch_count},
        {"patch_dim", cfg.data.patch_dim},
        {"relation_mix", cfg.data.relation_mix},
        {"text_signal", cfg.data.text_signal},
        {"image_signal", cfg.data.image_signal},
        {"noise_level", cfg.data.noise_level},
        {"seed", cfg.data.seed},
        {"split_ratios", cfg.split_ratios},
        {"dir", cfg.data_dir}}},
      {"preset", preset_name(cfg.preset)},
      {"seeds", cfg.seeds},
      {"train", train_config_json(cfg.train)}};
}

}  // namespace mmaux
