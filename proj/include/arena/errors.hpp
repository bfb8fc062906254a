#pragma once

#include <stdexcept>

namespace arena {

// Numerical failures (solver breakdown, overlap violation, saturation).
// The CLI maps these to exit code 3; configuration/parse problems use
// std::invalid_argument / ConfigError and map to exit code 2.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace arena
