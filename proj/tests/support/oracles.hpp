#pragma once

// Independent oracles shared by the unit and acceptance tests.

#include <cstdlib>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/cos/summarizer.hpp"
#include "adcmd/opponent/opponent.hpp"
#include "adcmd/rts/maps.hpp"
#include "adcmd/rts/serialize.hpp"
#include "support/rollout.hpp"

namespace adcmd::testing {

// Recount from the canonical JSON rather than the structs, so the oracle
// shares no code with summarize_frame.
inline cos::FrameStats recount(const rts::GameState& s, int faction) {
  using namespace rts;
  const nlohmann::json j = state_to_json(s);
  const nlohmann::json& me = j["factions"][faction];
  const nlohmann::json& foe = j["factions"][1 - faction];
  cos::FrameStats r;
  r.faction = faction;
  r.minerals = me["minerals"];
  r.gas = me["gas"];
  r.supply_used = me["supply_used"];
  r.supply_cap = me["supply_cap"];
  const std::map<std::string, int> supply{{"Worker", 1}, {"Melee", 1}, {"Ranged", 2}, {"Air", 2}};
  auto unit_index = [](const std::string& k) { return static_cast<int>(*parse_unit_kind(k)); };
  auto building_index = [](const std::string& k) { return static_cast<int>(*parse_building_kind(k)); };
  for (const auto& u : me["units"]) {
    const std::string k = u["kind"];
    ++r.units[unit_index(k)];
    if (k != "Worker") r.army_supply += supply.at(k);
  }
  for (const auto& b : me["buildings"]) {
    const std::string k = b["kind"];
    ++r.buildings[building_index(k)];
    if (k == "Base") ++r.bases;
    if (b["construction_remaining"].get<int>() > 0) ++r.under_construction;
    r.queued_units += static_cast<int>(b.at("queue").size());
  }
  for (const auto& u : foe["units"]) {
    const std::string k = u["kind"];
    ++r.enemy_units[unit_index(k)];
    if (k != "Worker") r.enemy_army_supply += supply.at(k);
  }
  for (const auto& b : foe["buildings"]) ++r.enemy_buildings[building_index(b["kind"].get<std::string>())];
  for (const auto& b : me["buildings"]) {
    if (b["kind"] != "Base") continue;
    for (const auto& u : foe["units"]) {
      if (u["kind"] == "Worker") continue;
      const int dx = std::abs(u["position"][0].get<int>() - b["position"][0].get<int>());
      const int dy = std::abs(u["position"][1].get<int>() - b["position"][1].get<int>());
      if (std::max(dx, dy) <= 8) r.under_attack = true;
    }
  }
  return r;
}

// Empty when equal, else the first differing field.
inline std::string count_mismatch(const cos::FrameStats& got, const cos::FrameStats& want) {
  const auto a = got.fields(), b = want.fields();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return fmt::format("{}: summary {}, recount {}", a[i].first, a[i].second, b[i].second);
  if (got.faction != want.faction) return "faction";
  return "";
}

// Reachable states: behavior-tree games against the built-in opponents plus a
// few random-command rollouts, sampled along the way.
inline std::vector<rts::GameState> reachable_states(int wanted) {
  using namespace rts;
  std::vector<GameState> out;
  const bt::Policy player = bt::PolicyLibrary::builtin().instantiate("balanced_macro");
  std::mt19937_64 rng(99);
  for (std::uint64_t seed = 0; static_cast<int>(out.size()) < wanted; ++seed) {
    const int difficulty = 1 + static_cast<int>(seed % 6);
    const auto profile = opponent::variant(opponent::OpponentPresets::builtin().at(difficulty), seed);
    GameConfig cfg = default_config(seed);
    cfg.tick_limit = 6000;
    opponent::apply_handicap(cfg, profile);
    GameState s = reset(cfg);
    const bool random_play = seed % 5 == 4;
    while (s.terminal.kind == TerminalKind::None && static_cast<int>(out.size()) < wanted) {
      ActionSet a = random_play ? random_actions(s, kPlayer, rng) : bt::tick(player, s, kPlayer);
      ActionSet b = opponent::opponent_actions(s, profile, seed);
      step_in_place(s, a, b);
      if (s.tick % 97 == 0 || s.terminal.kind != TerminalKind::None) out.push_back(s);
    }
  }
  return out;
}

}  // namespace adcmd::testing
