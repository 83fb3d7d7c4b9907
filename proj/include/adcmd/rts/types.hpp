#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adcmd::rts {

using EntityId = std::int64_t;

inline constexpr int kPlayer = 0;
inline constexpr int kOpponent = 1;
inline constexpr int other(int faction) { return 1 - faction; }

enum class UnitKind : std::uint8_t { Worker, Melee, Ranged, Air };
enum class BuildingKind : std::uint8_t { Base, SupplyDepot, Barracks, Factory, Airport, Turret };
enum class ResourceKind : std::uint8_t { Minerals, Gas };

inline constexpr std::array<UnitKind, 4> kAllUnitKinds{UnitKind::Worker, UnitKind::Melee,
                                                       UnitKind::Ranged, UnitKind::Air};
inline constexpr std::array<UnitKind, 3> kArmyKinds{UnitKind::Melee, UnitKind::Ranged, UnitKind::Air};
inline constexpr std::array<BuildingKind, 6> kAllBuildingKinds{
    BuildingKind::Base,    BuildingKind::SupplyDepot, BuildingKind::Barracks,
    BuildingKind::Factory, BuildingKind::Airport,     BuildingKind::Turret};

std::string_view to_string(UnitKind kind);
std::string_view to_string(BuildingKind kind);
std::string_view to_string(ResourceKind kind);
std::optional<UnitKind> parse_unit_kind(std::string_view name);
std::optional<BuildingKind> parse_building_kind(std::string_view name);
std::optional<ResourceKind> parse_resource_kind(std::string_view name);

enum Tag : std::uint8_t { kGround = 1, kAir = 2, kArmored = 4 };

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

// Chebyshev distance: diagonal steps cost the same as straight ones.
inline int distance(Cell a, Cell b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

enum class OrderKind : std::uint8_t { None, Move, Attack, Harvest };

struct Order {
  OrderKind kind = OrderKind::None;
  Cell target{};
  EntityId node = 0;    // Harvest only
  bool manual = false;  // issued by the human; the behavior tree leaves it alone
  bool operator==(const Order&) const = default;
};

struct Unit {
  EntityId id = 0;
  UnitKind kind = UnitKind::Worker;
  int hp = 0;
  Cell position{};
  Order order{};
  int move_cooldown = 0;
  int harvest_progress = 0;
  std::uint8_t tags() const;
  bool operator==(const Unit&) const = default;
};

struct ProductionItem {
  UnitKind kind = UnitKind::Worker;
  int ticks_remaining = 0;
  bool operator==(const ProductionItem&) const = default;
};

struct Building {
  EntityId id = 0;
  BuildingKind kind = BuildingKind::Base;
  int hp = 0;
  Cell position{};
  int construction_remaining = 0;  // 0 once complete
  std::vector<ProductionItem> production_queue;
  bool complete() const { return construction_remaining == 0; }
  bool operator==(const Building&) const = default;
};

struct ResourceNode {
  EntityId id = 0;
  ResourceKind kind = ResourceKind::Minerals;
  Cell position{};
  int amount = 0;
  bool operator==(const ResourceNode&) const = default;
};

struct FactionState {
  int minerals = 0;
  int gas = 0;
  int supply_used = 0;
  int supply_cap = 0;
  std::vector<Unit> units;          // sorted by id
  std::vector<Building> buildings;  // sorted by id
  // Ledger for the conservation invariant: minerals == mined - spent (+ start).
  std::int64_t mined_minerals = 0;
  std::int64_t mined_gas = 0;
  std::int64_t spent_minerals = 0;
  std::int64_t spent_gas = 0;
  // Harvest speed in permille of the base rate. A worker adds this to its
  // progress every tick and yields one unit per period*1000.
  int income_permille = 1000;
  bool operator==(const FactionState&) const = default;
};

enum class TerminalKind : std::uint8_t { None, Winner, Draw };

struct Terminal {
  TerminalKind kind = TerminalKind::None;
  int winner = -1;
  bool operator==(const Terminal&) const = default;
  static Terminal none() { return {}; }
  static Terminal win(int faction) { return {TerminalKind::Winner, faction}; }
  static Terminal draw() { return {TerminalKind::Draw, -1}; }
};

struct GameState {
  std::int64_t tick = 0;
  std::int64_t tick_limit = 20000;
  int width = 32;
  int height = 32;
  std::array<FactionState, 2> factions;
  std::vector<ResourceNode> resource_nodes;  // sorted by id
  std::vector<Cell> base_sites;              // [0], [1] are the start locations
  EntityId next_id = 1;
  Terminal terminal{};
  bool operator==(const GameState&) const = default;

  const Unit* find_unit(int faction, EntityId id) const;
  const Building* find_building(int faction, EntityId id) const;
  const ResourceNode* find_node(EntityId id) const;
};

struct ResourceSpec {
  Cell cell{};
  ResourceKind kind = ResourceKind::Minerals;
  int amount = 0;
  bool operator==(const ResourceSpec&) const = default;
};

struct GameConfig {
  int map_width = 32;
  int map_height = 32;
  int starting_workers = 6;
  int starting_base_hp = 1500;
  int starting_minerals = 100;
  int starting_gas = 0;
  std::vector<Cell> start_locations;  // exactly two
  std::vector<Cell> expansion_sites;
  std::vector<ResourceSpec> resource_layout;
  std::uint64_t rng_seed = 0;
  std::int64_t tick_limit = 20000;
  // Income handicap per faction in permille; scales the harvest period.
  std::array<int, 2> income_permille{1000, 1000};
  bool operator==(const GameConfig&) const = default;
};

enum class CommandKind : std::uint8_t { BuildUnit, BuildStructure, AssignWorker, Move, Attack, Stop };

std::string_view to_string(CommandKind kind);
std::optional<CommandKind> parse_command_kind(std::string_view name);

// One command addresses at most one actor (unit or building). BuildStructure
// has no actor: the faction itself pays and places it.
struct Command {
  CommandKind kind = CommandKind::Stop;
  EntityId actor = 0;
  UnitKind unit_kind = UnitKind::Worker;
  BuildingKind building_kind = BuildingKind::Base;
  Cell cell{};
  EntityId target = 0;  // resource node for AssignWorker
  bool manual = false;
  bool operator==(const Command&) const = default;

  static Command build_unit(EntityId building, UnitKind kind);
  static Command build_structure(BuildingKind kind, Cell cell);
  static Command assign_worker(EntityId worker, EntityId node);
  static Command move(EntityId unit, Cell cell);
  static Command attack(EntityId unit, Cell cell);
  static Command stop(EntityId unit);
};

struct ActionSet {
  int faction = kPlayer;
  std::vector<Command> commands;
  bool operator==(const ActionSet&) const = default;
};

enum class EventKind : std::uint8_t { UnitDied, BuildingDestroyed, ProductionComplete, ResourceExhausted };

std::string_view to_string(EventKind kind);

struct Event {
  EventKind kind = EventKind::UnitDied;
  int faction = -1;  // owner; -1 for resource nodes
  EntityId id = 0;
  bool operator==(const Event&) const = default;
};

struct DroppedCommand {
  int faction = 0;
  Command command;
  std::string reason;
  bool operator==(const DroppedCommand&) const = default;
};

struct TickResult {
  int reward = 0;  // player perspective; nonzero only on the terminal tick
  std::vector<Event> events;
  std::vector<DroppedCommand> dropped;
};

}  // namespace adcmd::rts
