#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace absnf {

// Value an AD tool uses for d|.|(0) during backward propagation.
struct ToolPreset {
  std::string_view tool;
  double kink_value;
};

const std::vector<ToolPreset>& tool_presets();

// Kink value for a tool name (lower case), or nullopt if unknown.
std::optional<double> preset_kink_value(std::string_view tool);

}  // namespace absnf
