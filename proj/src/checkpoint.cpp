#include "mmaux/checkpoint.hpp"

#include <fstream>

#include "json.hpp"
#include "mmaux/errors.hpp"

namespace mmaux {

using nlohmann::json;

void save_checkpoint(const std::vector<Param*>& params, const std::string& path) {
  json entries = json::object();
  for (const Param* p : params) {
    if (entries.contains(p->name))
      throw InputError("checkpoint: duplicate param name " + p->name);
    entries[p->name] = json{{"shape", p->value.shape}, {"data", p->value.data}};
  }
  std::ofstream out(path);
  if (!out) throw InputError("checkpoint: cannot open " + path + " for writing");
  out << json{{"format", 1}, {"params", entries}}.dump() << "\n";
  if (!out) throw InputError("checkpoint: write to " + path + " failed");
}

void load_checkpoint(const std::vector<Param*>& params, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("checkpoint: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: malformed JSON: ") + e.what(), 1);
  }
  try {
    if (j.at("format").get<int>() != 1)
      throw InputError("checkpoint: unsupported format in " + path);
    const json& entries = j.at("params");
    if (entries.size() != params.size())
      throw InputError("checkpoint: file has " + std::to_string(entries.size()) +
                       " params, model has " + std::to_string(params.size()));
    for (Param* p : params) {
      if (!entries.contains(p->name))
        throw InputError("checkpoint: missing param " + p->name);
      const json& e = entries.at(p->name);
      const auto shape = e.at("shape").get<std::vector<int>>();
      if (shape != p->value.shape)
        throw InputError("checkpoint: shape mismatch for " + p->name + ": file " +
                         shape_str(shape) + " vs model " + shape_str(p->value.shape));
      p->value.data = e.at("data").get<std::vector<double>>();
      if (p->value.data.size() != numel_of(shape))
        throw InputError("checkpoint: data length mismatch for " + p->name);
      p->reset_grad();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: bad record: ") + e.what(), 1);
  }
}

}  // namespace mmaux
