#pragma once

// Condition and action leaves of the behavior tree. Private to the library.

#include <array>
#include <optional>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "adcmd/bt/modulators.hpp"
#include "adcmd/rts/types.hpp"

namespace adcmd::bt::detail {

struct Threat {
  rts::Cell base;    // the threatened own Base
  rts::Cell target;  // nearest intruder
};

// Per-tick scratch state. Emitters spend from the running budget so that one
// ActionSet never over-commits resources or supply.
struct Context {
  Context(const rts::GameState& state, int faction, const ModulatorSet& modulators);

  const rts::GameState& s;
  int faction;
  const rts::FactionState& me;
  const rts::FactionState& foe;
  const ModulatorSet& m;

  rts::ActionSet out;
  int minerals;
  int gas;
  int committed_supply;  // living units plus queued production plus this tick's orders
  std::unordered_set<rts::EntityId> commanded;
  std::vector<rts::Cell> reserved;  // placements issued this tick

  int workers = 0;                   // existing plus queued
  std::array<int, 3> army_counts{};  // existing plus queued, by army_index
  int army_supply = 0;               // existing units only
  int bases = 0;  // including under construction, excluding mined-out ones
  int complete_bases = 0;
  rts::Cell main;  // own main Base, or the start location once it is gone
  rts::Cell enemy_start;
  int reserve_minerals = 0;  // army and production spending leave this much

  std::optional<std::optional<Threat>> threat_cache;
  const std::optional<Threat>& threat();

  bool affordable(int minerals, int gas) const { return this->minerals >= minerals && this->gas >= gas; }
  void emit(rts::Command c);
};

// Army kinds with positive weight, largest deficit first.
std::vector<rts::UnitKind> ranked_kinds(const std::array<double, 3>& weights, const std::array<int, 3>& counts);

using Predicate = bool (*)(Context&);
using Emitter = void (*)(Context&);

// nullptr when unknown.
Predicate find_predicate(std::string_view name);
Emitter find_emitter(std::string_view name);

const std::vector<std::string_view>& predicate_names();
const std::vector<std::string_view>& emitter_names();

}  // namespace adcmd::bt::detail
