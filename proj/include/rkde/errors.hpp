#pragma once

#include <stdexcept>

namespace rkde {

// Kernel failed a support, normalization, or moment check.
struct invalid_kernel_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bandwidth outside (0, 1/2); the left/right boundary collars would overlap.
struct invalid_bandwidth_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Rejection sampler acceptance rate collapsed (distribution has almost no
// mass inside the unit cube).
struct pathological_distribution_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rkde
