// Experiment driver: generate / train / sweep / compare / verify.
//
// Exit codes: 0 success, 1 check or experiment failure (including degenerate
// significance tests), 2 configuration problems.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmaux/config.hpp"
#include "mmaux/errors.hpp"
#include "mmaux/metrics.hpp"
#include "mmaux/synthdata.hpp"
#include "mmaux/trainer.hpp"
#include "mmaux/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmaux;

namespace {

// Shortest round-trip formatting, same as the JSON artifacts, so console
// numbers and files agree byte for byte.
std::string num(double x) { return json(x).dump(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void echo_config(const json& effective, const fs::path& out_dir) {
  write_text(out_dir / "effective_config.json", effective.dump(2) + "\n");
}

struct LoadedData {
  Dataset train, val, test;
};

LoadedData load_datasets(const ExperimentConfig& cfg) {
  LoadedData d;
  const std::array<std::pair<std::string, Dataset*>, 3> parts = {
      {{"train", &d.train}, {"val", &d.val}, {"test", &d.test}}};
  for (const auto& [name, slot] : parts) {
    const fs::path path = fs::path(cfg.data_dir) / (name + ".jsonl");
    if (!fs::exists(path))
      throw ConfigError("dataset file " + path.string() + " not found; run generate first");
    *slot = read_jsonl(path.string());
  }
  return d;
}

void print_split_summary(const Dataset& ds) {
  std::map<int, int> by_class;
  std::map<std::string, int> by_relation;
  for (const Post& p : ds.posts) {
    ++by_class[p.label];
    ++by_relation[relation_key(p.relation)];
  }
  std::printf("%-5s %5zu posts | classes", ds.split_name.c_str(), ds.posts.size());
  for (const auto& [label, count] : by_class) std::printf(" %d:%d", label, count);
  std::printf(" | relations");
  for (const auto& [key, count] : by_relation) std::printf(" %s:%d", key.c_str(), count);
  std::printf("\n");
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  Dataset full = generate(cfg.data);
  std::array<Dataset, 3> parts = split(full, cfg.split_ratios, cfg.data.seed);

  fs::create_directories(out_dir);
  const std::array<std::string, 3> names = {"train", "val", "test"};
  for (std::size_t i = 0; i < 3; ++i)
    write_jsonl(parts[i], (fs::path(out_dir) / (names[i] + ".jsonl")).string());
  echo_config(experiment_config_json(cfg), out_dir);

  std::printf("wrote %s/{train,val,test}.jsonl (seed %llu)\n", out_dir.c_str(),
              static_cast<unsigned long long>(cfg.data.seed));
  for (const Dataset& ds : parts) print_split_summary(ds);
  return 0;
}

json aggregate_json(const ExperimentConfig& cfg, const MultiSeedResult& res) {
  json per_relation = json::object();
  if (!res.records.empty()) {
    for (std::size_t row = 0; row < res.records.front().test.relations.rows.size(); ++row) {
      const RelationAccuracy& first = res.records.front().test.relations.rows[row];
      double acc_sum = 0.0;
      for (const RunRecord& rec : res.records)
        acc_sum += rec.test.relations.rows[row].accuracy;
      per_relation[relation_key(first.tag)] = {
          {"mean_accuracy", acc_sum / static_cast<double>(res.records.size())},
          {"support", first.support}};
    }
  }
  return json{{"preset", preset_name(cfg.preset)},
              {"fraction", cfg.train.data_fraction},
              {"seeds", cfg.seeds},
              {"per_seed_f1", res.per_seed_f1},
              {"mean_f1", res.f1.mean},
              {"std_f1", res.f1.sample_std},
              {"per_relation", per_relation}};
}

int cmd_train(ExperimentConfig cfg, const std::string& out_dir) {
  LoadedData data = load_datasets(cfg);
  MultiSeedResult res = run_multi_seed(cfg.train, cfg.seeds, data.train, data.val, data.test);

  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const std::string name = "run_seed" + std::to_string(cfg.seeds[i]) + ".json";
    save_run_record(res.records[i], (fs::path(out_dir) / name).string());
  }
  write_text(fs::path(out_dir) / "aggregate.json", aggregate_json(cfg, res).dump(2) + "\n");
  echo_config(experiment_config_json(cfg), out_dir);

  for (std::size_t i = 0; i < res.per_seed_f1.size(); ++i)
    std::printf("seed %llu: weighted F1 %s\n",
                static_cast<unsigned long long>(cfg.seeds[i]), num(res.per_seed_f1[i]).c_str());
  std::printf("preset %s fraction %s: mean F1 %s, std %s\n", preset_name(cfg.preset).c_str(),
              num(cfg.train.data_fraction).c_str(), num(res.f1.mean).c_str(),
              num(res.f1.sample_std).c_str());
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& fractions,
              const std::string& out_dir) {
  if (fractions.empty()) throw ConfigError("sweep: at least one fraction is required");
  LoadedData data = load_datasets(cfg);
  std::vector<SweepRow> rows =
      sweep_fractions(cfg.train, fractions, cfg.seeds, data.train, data.val, data.test);

  fs::create_directories(out_dir);
  std::string csv = "fraction,preset,mean_f1,std_f1\n";
  for (const SweepRow& row : rows)
    csv += num(row.fraction) + "," + preset_name(row.preset) + "," + num(row.f1.mean) + "," +
           num(row.f1.sample_std) + "\n";
  write_text(fs::path(out_dir) / "sweep.csv", csv);
  json effective = experiment_config_json(cfg);
  effective["fractions"] = fractions;
  echo_config(effective, out_dir);

  std::printf("%s", csv.c_str());
  return 0;
}

std::vector<double> load_per_seed_f1(const std::string& dir) {
  const fs::path path = fs::path(dir) / "aggregate.json";
  if (!fs::exists(path))
    throw ConfigError("compare: " + path.string() + " not found");
  std::ifstream in(path);
  json j = json::parse(in);
  if (!j.contains("per_seed_f1"))
    throw ConfigError("compare: " + path.string() + " has no per_seed_f1 list");
  return j["per_seed_f1"].get<std::vector<double>>();
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b) {
  std::vector<double> a = load_per_seed_f1(dir_a);
  std::vector<double> b = load_per_seed_f1(dir_b);
  if (a.size() < 2 || b.size() < 2) {
    std::printf("degenerate test: need at least 2 seeds per side (have %zu and %zu)\n",
                a.size(), b.size());
    return 1;
  }
  Aggregate agg_a = aggregate(a), agg_b = aggregate(b);
  std::printf("A: mean F1 %s over %zu seeds\n", num(agg_a.mean).c_str(), a.size());
  std::printf("B: mean F1 %s over %zu seeds\n", num(agg_b.mean).c_str(), b.size());
  std::printf("mean difference (B - A): %s\n", num(agg_b.mean - agg_a.mean).c_str());
  try {
    WelchResult r = welch_t_test(a, b);
    std::printf("Welch t = %s, df = %s, p = %s\n", num(r.t).c_str(),
                num(r.degrees_of_freedom).c_str(), num(r.p_two_sided).c_str());
    std::printf("%s at p < 0.05\n",
                r.p_two_sided < 0.05 ? "significant" : "not significant");
  } catch (const DegenerateError& e) {
    std::printf("degenerate test: %s\n", e.what());
    return 1;
  }
  return 0;
}

int cmd_verify(const std::string& inject_fault) {
  std::vector<CheckResult> results = run_all_checks(inject_fault);
  std::vector<std::string> failing;
  double total = 0.0;
  for (const CheckResult& r : results) {
    std::printf("%-28s %-4s %8.3fs  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.seconds,
                r.detail.c_str());
    total += r.seconds;
    if (!r.pass) failing.push_back(r.name);
  }
  std::printf("%zu checks in %.3fs\n", results.size(), total);
  if (!failing.empty()) {
    std::string names;
    for (const std::string& n : failing) names += " " + n;
    std::printf("FAILED:%s\n", names.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic multimodal classification experiments"};
  app.require_subcommand(1);

  std::string gen_config, gen_out;
  CLI::App* gen = app.add_subcommand("generate", "generate and split a synthetic dataset");
  gen->add_option("--config", gen_config, "experiment config file")->required();
  gen->add_option("--out", gen_out, "output directory for the JSONL splits")->required();

  std::string tr_config, tr_out, tr_preset;
  double tr_fraction = -1.0;
  std::vector<std::uint64_t> tr_seeds;
  CLI::App* tr = app.add_subcommand("train", "train one preset over several seeds");
  tr->add_option("--config", tr_config, "experiment config file")->required();
  tr->add_option("--preset", tr_preset, "loss preset: base, C, M, or CM");
  tr->add_option("--fraction", tr_fraction, "training-data fraction in (0, 1]");
  tr->add_option("--seeds", tr_seeds, "training seeds")->delimiter(',');
  tr->add_option("--out", tr_out, "output directory for run records")->required();

  std::string sw_config, sw_out;
  std::vector<double> sw_fractions;
  CLI::App* sw = app.add_subcommand("sweep", "train every preset across data fractions");
  sw->add_option("--config", sw_config, "experiment config file")->required();
  sw->add_option("--fractions", sw_fractions, "data fractions")->delimiter(',')->required();
  sw->add_option("--out", sw_out, "output directory for the sweep table")->required();

  std::string cmp_a, cmp_b;
  CLI::App* cmp = app.add_subcommand("compare", "Welch t test between two run directories");
  cmp->add_option("dirA", cmp_a, "first run directory")->required();
  cmp->add_option("dirB", cmp_b, "second run directory")->required();

  std::string inject_fault;
  CLI::App* ver = app.add_subcommand("verify", "run the numeric self-check registry");
  ver->add_option("--inject-fault", inject_fault,
                  "corrupt one analytic gradient in the named check (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_config, gen_out);
    if (tr->parsed()) {
      ExperimentConfig cfg = parse_experiment_config(tr_config);
      if (!tr_preset.empty()) {
        cfg.preset = preset_from_name(tr_preset);
        cfg.train.weights = preset_weights(cfg.preset);
      }
      if (tr_fraction >= 0.0) cfg.train.data_fraction = tr_fraction;
      if (!tr_seeds.empty()) cfg.seeds = tr_seeds;
      cfg.train.validate();
      return cmd_train(cfg, tr_out);
    }
    if (sw->parsed()) return cmd_sweep(parse_experiment_config(sw_config), sw_fractions, sw_out);
    if (cmp->parsed()) return cmd_compare(cmp_a, cmp_b);
    if (ver->parsed()) return cmd_verify(inject_fault);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const DegenerateError& e) {
    std::fprintf(stderr, "degenerate result: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
