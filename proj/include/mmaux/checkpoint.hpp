#pragma once

#include <string>
#include <vector>

#include "mmaux/param.hpp"

namespace mmaux {

// JSON map from param name to shape + row-major values. Doubles are written
// with shortest round-trip precision, so save/load is exact.
void save_checkpoint(const std::vector<Param*>& params, const std::string& path);

// Loads by name into the given params; every param must be present with a
// matching shape, and the file must not carry unknown names.
void load_checkpoint(const std::vector<Param*>& params, const std::string& path);

}  // namespace mmaux
