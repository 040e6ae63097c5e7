#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "emd/solvers.hpp"

namespace emd {

/// {"m": int, "n": int, "a": [m·n numbers, row-major], "b": [m numbers], "z": [n numbers]?}
ProblemInstance parse_instance_json(std::string_view text);
ProblemInstance load_instance(const std::filesystem::path& path);
std::string instance_to_json(const ProblemInstance& p);

}  // namespace emd
