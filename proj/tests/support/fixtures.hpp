#pragma once

// Hand-built states for unit tests.

#include "adcmd/rts/constants.hpp"
#include "adcmd/rts/game.hpp"
#include "adcmd/rts/maps.hpp"

namespace adcmd::testing {

inline void refresh_supply(rts::FactionState& f) {
  int used = 0, cap = 0;
  for (const rts::Unit& u : f.units) used += rts::stats(u.kind).supply;
  for (const rts::Building& b : f.buildings)
    if (b.complete()) cap += rts::stats(b.kind).supply_provided;
  f.supply_used = used;
  f.supply_cap = cap < rts::kMaxSupply ? cap : rts::kMaxSupply;
}

inline rts::Unit& add_unit(rts::GameState& s, int faction, rts::UnitKind kind, rts::Cell at) {
  rts::Unit u;
  u.id = s.next_id++;
  u.kind = kind;
  u.hp = rts::stats(kind).hp;
  u.position = at;
  auto& f = s.factions[faction];
  f.units.push_back(u);
  refresh_supply(f);
  return f.units.back();
}

inline rts::Building& add_building(rts::GameState& s, int faction, rts::BuildingKind kind, rts::Cell at) {
  rts::Building b;
  b.id = s.next_id++;
  b.kind = kind;
  b.hp = rts::stats(kind).hp;
  b.position = at;
  auto& f = s.factions[faction];
  f.buildings.push_back(b);
  refresh_supply(f);
  return f.buildings.back();
}

// Every worker of `faction` harvesting its closest mineral node.
inline void send_workers_to_minerals(rts::GameState& s, int faction) {
  for (rts::Unit& u : s.factions[faction].units) {
    if (u.kind != rts::UnitKind::Worker) continue;
    const rts::ResourceNode* best = nullptr;
    for (const rts::ResourceNode& n : s.resource_nodes)
      if (n.kind == rts::ResourceKind::Minerals &&
          (best == nullptr || rts::distance(n.position, u.position) < rts::distance(best->position, u.position)))
        best = &n;
    u.order = rts::Order{rts::OrderKind::Harvest, best->position, best->id, false};
    u.position = best->position;
  }
}

}  // namespace adcmd::testing
