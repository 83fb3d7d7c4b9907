#include "adcmd/rts/types.hpp"

#include <algorithm>

#include "adcmd/rts/constants.hpp"

namespace adcmd::rts {

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::Worker: return "Worker";
    case UnitKind::Melee: return "Melee";
    case UnitKind::Ranged: return "Ranged";
    case UnitKind::Air: return "Air";
  }
  return "?";
}

std::string_view to_string(BuildingKind kind) {
  switch (kind) {
    case BuildingKind::Base: return "Base";
    case BuildingKind::SupplyDepot: return "SupplyDepot";
    case BuildingKind::Barracks: return "Barracks";
    case BuildingKind::Factory: return "Factory";
    case BuildingKind::Airport: return "Airport";
    case BuildingKind::Turret: return "Turret";
  }
  return "?";
}

std::string_view to_string(ResourceKind kind) {
  return kind == ResourceKind::Minerals ? "minerals" : "gas";
}

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::BuildUnit: return "BuildUnit";
    case CommandKind::BuildStructure: return "BuildStructure";
    case CommandKind::AssignWorker: return "AssignWorker";
    case CommandKind::Move: return "Move";
    case CommandKind::Attack: return "Attack";
    case CommandKind::Stop: return "Stop";
  }
  return "?";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::UnitDied: return "unit_died";
    case EventKind::BuildingDestroyed: return "building_destroyed";
    case EventKind::ProductionComplete: return "production_complete";
    case EventKind::ResourceExhausted: return "resource_exhausted";
  }
  return "?";
}

std::optional<UnitKind> parse_unit_kind(std::string_view name) {
  for (UnitKind k : kAllUnitKinds)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::optional<BuildingKind> parse_building_kind(std::string_view name) {
  for (BuildingKind k : kAllBuildingKinds)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::optional<ResourceKind> parse_resource_kind(std::string_view name) {
  if (name == "minerals") return ResourceKind::Minerals;
  if (name == "gas") return ResourceKind::Gas;
  return std::nullopt;
}

std::optional<CommandKind> parse_command_kind(std::string_view name) {
  for (CommandKind k : {CommandKind::BuildUnit, CommandKind::BuildStructure, CommandKind::AssignWorker,
                        CommandKind::Move, CommandKind::Attack, CommandKind::Stop})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::uint8_t Unit::tags() const { return stats(kind).tags; }

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, EntityId id) {
  auto it = std::lower_bound(items.begin(), items.end(), id,
                             [](const T& item, EntityId key) { return item.id < key; });
  return (it != items.end() && it->id == id) ? &*it : nullptr;
}

}  // namespace

const Unit* GameState::find_unit(int faction, EntityId id) const {
  return find_by_id(factions[faction].units, id);
}

const Building* GameState::find_building(int faction, EntityId id) const {
  return find_by_id(factions[faction].buildings, id);
}

const ResourceNode* GameState::find_node(EntityId id) const { return find_by_id(resource_nodes, id); }

Command Command::build_unit(EntityId building, UnitKind kind) {
  Command c;
  c.kind = CommandKind::BuildUnit;
  c.actor = building;
  c.unit_kind = kind;
  return c;
}

Command Command::build_structure(BuildingKind kind, Cell cell) {
  Command c;
  c.kind = CommandKind::BuildStructure;
  c.building_kind = kind;
  c.cell = cell;
  return c;
}

Command Command::assign_worker(EntityId worker, EntityId node) {
  Command c;
  c.kind = CommandKind::AssignWorker;
  c.actor = worker;
  c.target = node;
  return c;
}

Command Command::move(EntityId unit, Cell cell) {
  Command c;
  c.kind = CommandKind::Move;
  c.actor = unit;
  c.cell = cell;
  return c;
}

Command Command::attack(EntityId unit, Cell cell) {
  Command c;
  c.kind = CommandKind::Attack;
  c.actor = unit;
  c.cell = cell;
  return c;
}

Command Command::stop(EntityId unit) {
  Command c;
  c.kind = CommandKind::Stop;
  c.actor = unit;
  return c;
}

}  // namespace adcmd::rts
