#pragma once

#include <cstdint>
#include <optional>

#include "adcmd/rts/types.hpp"

namespace adcmd::rts {

// Balance table. Damage is per tick of contact; there is no attack cooldown.
//
//   kind    cost(m/g)  supply  hp   dmg  range  move  build  tags            hits
//   Worker   50/0       1      40    0    0      2     40    ground          -
//   Melee    50/0       1      60    5    1      2     50    ground          ground
//   Ranged   75/25      2      90    4    4      3     70    ground,armored  ground+air (+4 vs air)
//   Air     100/75      2      80    4    3      2     90    air             ground+air (+3 vs Melee)
//
// Melee out-trades Ranged per mineral, Ranged shreds Air, Air is untouchable
// by Melee.
struct UnitStats {
  int minerals;
  int gas;
  int supply;
  int hp;
  int damage;
  int range;
  int move_period;
  int build_ticks;
  std::uint8_t tags;
  bool hits_ground;
  bool hits_air;
};

struct BuildingStats {
  int minerals;
  int gas;
  int hp;
  int build_ticks;
  int supply_provided;
  int damage;  // Turret only
  int range;
};

inline constexpr UnitStats kUnitStats[] = {
    /* Worker */ {50, 0, 1, 40, 0, 0, 2, 40, kGround, false, false},
    /* Melee  */ {50, 0, 1, 60, 5, 1, 2, 50, kGround, true, false},
    /* Ranged */ {75, 25, 2, 90, 4, 4, 3, 70, kGround | kArmored, true, true},
    /* Air    */ {100, 75, 2, 80, 4, 3, 2, 90, kAir, true, true},
};

inline constexpr BuildingStats kBuildingStats[] = {
    /* Base        */ {400, 0, 1500, 300, 10, 0, 0},
    /* SupplyDepot */ {100, 0, 400, 100, 8, 0, 0},
    /* Barracks    */ {150, 0, 1000, 200, 0, 0, 0},
    /* Factory     */ {150, 100, 1000, 250, 0, 0, 0},
    /* Airport     */ {150, 150, 1000, 300, 0, 0, 0},
    /* Turret      */ {100, 0, 400, 120, 0, 6, 5},
};

inline constexpr std::uint8_t kBuildingTags = kGround | kArmored;

inline constexpr int kRangedBonusVsAir = 4;
inline constexpr int kAirBonusVsMelee = 3;

inline constexpr int kMaxSupply = 100;
inline constexpr int kMaxQueue = 5;
inline constexpr int kMaxGasWorkers = 3;
inline constexpr int kHarvestRadius = 4;   // node must be this close to an own Base
inline constexpr int kBuildRadius = 6;     // non-Base structures near an own Base
inline constexpr int kAggroRadius = 6;     // attack-move units chase enemies this close
inline constexpr int kBaseMineralPeriod = 8;
inline constexpr int kBaseGasPeriod = 5;

inline const UnitStats& stats(UnitKind kind) { return kUnitStats[static_cast<int>(kind)]; }
inline const BuildingStats& stats(BuildingKind kind) { return kBuildingStats[static_cast<int>(kind)]; }

// Which building trains a unit kind.
inline BuildingKind producer_of(UnitKind kind) {
  switch (kind) {
    case UnitKind::Worker: return BuildingKind::Base;
    case UnitKind::Melee: return BuildingKind::Barracks;
    case UnitKind::Ranged: return BuildingKind::Factory;
    case UnitKind::Air: return BuildingKind::Airport;
  }
  return BuildingKind::Base;
}

// Damage one hit of `attacker` deals to a target with `target_tags`
// (and, for units, `target_kind`). Zero when the target cannot be hit.
int unit_damage(UnitKind attacker, std::uint8_t target_tags, std::optional<UnitKind> target_kind);
int turret_damage(std::uint8_t target_tags);

}  // namespace adcmd::rts
