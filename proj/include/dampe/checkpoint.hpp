#pragma once

#include <string>
#include <vector>

#include "dampe/tape.hpp"

namespace dampe {

/// Checkpoint layout: <dir>/manifest.txt with one "name rows cols" line per
/// parameter, plus <dir>/<name>.mat in the DenseMatrix file format.
void save_params(const std::string& dir, const ParamStore& store,
                 const std::vector<std::string>& names);

/// Loads every manifest entry into the store (adding or overwriting in
/// place); shapes must match any existing parameter.
void load_params(const std::string& dir, ParamStore& store);

bool checkpoint_exists(const std::string& dir);

}  // namespace dampe
