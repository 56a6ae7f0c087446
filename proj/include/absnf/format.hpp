#pragma once

#include <string>

namespace absnf {

// Shortest round-trip decimal form; negative zero prints as "0".
std::string format_number(double v);

}  // namespace absnf
