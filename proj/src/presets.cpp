#include "absnf/presets.hpp"

namespace absnf {

const std::vector<ToolPreset>& tool_presets() {
  static const std::vector<ToolPreset> table = {
      {"jax", 1.0},         {"tensorflow", 0.0}, {"pytorch", 0.0},
      {"reversediff", 1.0}, {"adolc", 0.0},      {"codipack", 0.0},
  };
  return table;
}

std::optional<double> preset_kink_value(std::string_view tool) {
  for (const auto& p : tool_presets()) {
    if (p.tool == tool) return p.kink_value;
  }
  return std::nullopt;
}

}  // namespace absnf
