#include "adcmd/rts/maps.hpp"

#include <random>

#include "adcmd/error.hpp"

namespace adcmd::rts {

namespace {

struct Preset {
  std::string_view name;
  int width;
  int height;
  Cell start;
  std::vector<Cell> expansions;
};

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = {
      {"standard", 32, 32, {4, 4}, {{14, 4}, {4, 14}}},
      {"compact", 24, 24, {3, 3}, {{11, 3}, {3, 11}}},
      {"wide", 40, 28, {4, 4}, {{16, 4}, {4, 14}}},
  };
  return all;
}

// Mineral offsets around a base site, then the geyser.
constexpr Cell kMineralOffsets[] = {{-3, -1}, {-3, 1}, {-1, -3}, {1, -3}};
constexpr Cell kGeyserOffset{-3, -3};

}  // namespace

std::vector<std::string> map_names() {
  std::vector<std::string> names;
  for (const Preset& p : presets()) names.emplace_back(p.name);
  return names;
}

GameConfig make_map(std::string_view name, std::uint64_t seed) {
  const Preset* preset = nullptr;
  for (const Preset& p : presets())
    if (p.name == name) preset = &p;
  if (preset == nullptr) throw Error(ErrorCode::invalid_config, "unknown map '" + std::string(name) + "'");

  GameConfig g;
  g.map_width = preset->width;
  g.map_height = preset->height;
  g.rng_seed = seed;
  auto mirror = [&](Cell c) { return Cell{preset->width - 1 - c.x, preset->height - 1 - c.y}; };
  g.start_locations = {preset->start, mirror(preset->start)};
  for (Cell e : preset->expansions) g.expansion_sites.push_back(e);
  for (Cell e : preset->expansions) g.expansion_sites.push_back(mirror(e));

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto draw = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };

  std::vector<Cell> sites{preset->start};
  sites.insert(sites.end(), preset->expansions.begin(), preset->expansions.end());
  for (std::size_t si = 0; si < sites.size(); ++si) {
    const bool main = si == 0;
    const int mineral_count = main ? 4 : 3;
    for (int side = 0; side < 2; ++side) {
      auto place = [&](Cell offset) {
        Cell c{sites[si].x + offset.x, sites[si].y + offset.y};
        return side == 0 ? c : mirror(c);
      };
      for (int m = 0; m < mineral_count; ++m)
        g.resource_layout.push_back(
            {place(kMineralOffsets[m]), ResourceKind::Minerals, main ? draw(3000, 5000) : draw(2500, 4000)});
      g.resource_layout.push_back({place(kGeyserOffset), ResourceKind::Gas, main ? draw(2000, 3000) : draw(1500, 2500)});
    }
  }
  return g;
}

}  // namespace adcmd::rts
