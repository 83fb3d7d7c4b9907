#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "adcmd/rts/types.hpp"

namespace adcmd::rts {

// Named map presets. Geometry is point-symmetric between the two factions;
// the seed draws each resource node's amount independently, so the two sides
// are generally not equally rich.
std::vector<std::string> map_names();
GameConfig make_map(std::string_view name, std::uint64_t seed);

inline GameConfig default_config(std::uint64_t seed = 0) { return make_map("standard", seed); }

}  // namespace adcmd::rts
