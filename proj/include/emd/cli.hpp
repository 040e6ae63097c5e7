#pragma once

#include <ostream>

namespace emd::cli {

/// Entry point of the `emd` executable. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace emd::cli
