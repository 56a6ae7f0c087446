#pragma once

#include <string_view>

#include "absnf/tape.hpp"

namespace absnf {

// phi(x) = |x1| + |x2 - x1| + mu |1 - cos(x1) - sin(x2)|, n = 2, s = 3.
// The constant mu is named "mu" on the tape.
Tape phimu_tape(double mu);

// Loads "builtin:phimu" or a JSON problem file.
Tape load_problem(std::string_view spec);

}  // namespace absnf
