#include "adcmd/rts/game.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "adcmd/error.hpp"
#include "adcmd/rts/constants.hpp"

namespace adcmd::rts {

int unit_damage(UnitKind attacker, std::uint8_t target_tags, std::optional<UnitKind> target_kind) {
  const UnitStats& s = stats(attacker);
  if (s.damage == 0) return 0;
  const bool is_air = (target_tags & kAir) != 0;
  if (is_air ? !s.hits_air : !s.hits_ground) return 0;
  int damage = s.damage;
  if (attacker == UnitKind::Ranged && is_air) damage += kRangedBonusVsAir;
  if (attacker == UnitKind::Air && target_kind == UnitKind::Melee) damage += kAirBonusVsMelee;
  return damage;
}

int turret_damage(std::uint8_t) { return stats(BuildingKind::Turret).damage; }

namespace {

bool in_bounds(const GameState& s, Cell c) { return c.x >= 0 && c.y >= 0 && c.x < s.width && c.y < s.height; }
bool in_bounds(const GameConfig& g, Cell c) {
  return c.x >= 0 && c.y >= 0 && c.x < g.map_width && c.y < g.map_height;
}

Unit* find_unit_mut(FactionState& f, EntityId id) {
  auto it = std::lower_bound(f.units.begin(), f.units.end(), id,
                             [](const Unit& u, EntityId key) { return u.id < key; });
  return (it != f.units.end() && it->id == id) ? &*it : nullptr;
}

Building* find_building_mut(FactionState& f, EntityId id) {
  auto it = std::lower_bound(f.buildings.begin(), f.buildings.end(), id,
                             [](const Building& b, EntityId key) { return b.id < key; });
  return (it != f.buildings.end() && it->id == id) ? &*it : nullptr;
}

ResourceNode* find_node_mut(GameState& s, EntityId id) {
  auto it = std::lower_bound(s.resource_nodes.begin(), s.resource_nodes.end(), id,
                             [](const ResourceNode& n, EntityId key) { return n.id < key; });
  return (it != s.resource_nodes.end() && it->id == id) ? &*it : nullptr;
}

bool base_near(const FactionState& f, Cell cell, int radius) {
  for (const Building& b : f.buildings)
    if (b.kind == BuildingKind::Base && b.complete() && distance(b.position, cell) <= radius) return true;
  return false;
}

void recompute_supply(FactionState& f) {
  int used = 0;
  for (const Unit& u : f.units) used += stats(u.kind).supply;
  int cap = 0;
  for (const Building& b : f.buildings)
    if (b.complete()) cap += stats(b.kind).supply_provided;
  f.supply_used = used;
  f.supply_cap = std::min(cap, kMaxSupply);
}

Cell step_toward(Cell from, Cell to) {
  auto sign = [](int v) { return (v > 0) - (v < 0); };
  return {from.x + sign(to.x - from.x), from.y + sign(to.y - from.y)};
}

void apply_command(GameState& s, int faction, const Command& c) {
  FactionState& f = s.factions[faction];
  switch (c.kind) {
    case CommandKind::BuildUnit: {
      Building* b = find_building_mut(f, c.actor);
      const UnitStats& us = stats(c.unit_kind);
      f.minerals -= us.minerals;
      f.gas -= us.gas;
      f.spent_minerals += us.minerals;
      f.spent_gas += us.gas;
      b->production_queue.push_back({c.unit_kind, us.build_ticks});
      break;
    }
    case CommandKind::BuildStructure: {
      const BuildingStats& bs = stats(c.building_kind);
      f.minerals -= bs.minerals;
      f.gas -= bs.gas;
      f.spent_minerals += bs.minerals;
      f.spent_gas += bs.gas;
      Building b;
      b.id = s.next_id++;
      b.kind = c.building_kind;
      b.hp = bs.hp;
      b.position = c.cell;
      b.construction_remaining = bs.build_ticks;
      f.buildings.push_back(std::move(b));
      break;
    }
    case CommandKind::AssignWorker: {
      Unit* u = find_unit_mut(f, c.actor);
      const ResourceNode* n = s.find_node(c.target);
      u->order = Order{OrderKind::Harvest, n->position, n->id, c.manual};
      u->position = n->position;
      u->harvest_progress = 0;
      break;
    }
    case CommandKind::Move:
      find_unit_mut(f, c.actor)->order = Order{OrderKind::Move, c.cell, 0, c.manual};
      break;
    case CommandKind::Attack:
      find_unit_mut(f, c.actor)->order = Order{OrderKind::Attack, c.cell, 0, c.manual};
      break;
    case CommandKind::Stop:
      find_unit_mut(f, c.actor)->order = Order{OrderKind::None, {}, 0, c.manual};
      break;
  }
}

struct Target {
  EntityId id;
  Cell position;
  std::uint8_t tags;
  std::optional<UnitKind> kind;
};

// All units and buildings of `faction`, merged in ascending id order.
std::vector<Target> targets_of(const FactionState& f) {
  std::vector<Target> out;
  out.reserve(f.units.size() + f.buildings.size());
  for (const Unit& u : f.units) out.push_back({u.id, u.position, u.tags(), u.kind});
  for (const Building& b : f.buildings) out.push_back({b.id, b.position, kBuildingTags, std::nullopt});
  std::sort(out.begin(), out.end(), [](const Target& a, const Target& b) { return a.id < b.id; });
  return out;
}

bool can_hit(UnitKind attacker, const Target& t) { return unit_damage(attacker, t.tags, t.kind) > 0; }

void resolve_orders(GameState& s, int faction, const ActionSet& actions, TickResult& result) {
  for (const Command& c : actions.commands) {
    std::string reason;
    if (actions.faction != faction)
      reason = "action set belongs to another faction";
    else
      reason = check_command(s, faction, c);
    if (!reason.empty()) {
      result.dropped.push_back({faction, c, std::move(reason)});
      continue;
    }
    apply_command(s, faction, c);
  }
}

void progress_production(GameState& s, TickResult& result) {
  for (int fi = 0; fi < 2; ++fi) {
    FactionState& f = s.factions[fi];
    std::vector<Unit> spawned;
    for (Building& b : f.buildings) {
      if (!b.complete()) {
        if (--b.construction_remaining == 0) result.events.push_back({EventKind::ProductionComplete, fi, b.id});
        continue;
      }
      if (b.production_queue.empty()) continue;
      ProductionItem& item = b.production_queue.front();
      if (--item.ticks_remaining > 0) continue;
      Unit u;
      u.id = s.next_id++;
      u.kind = item.kind;
      u.hp = stats(item.kind).hp;
      u.position = b.position;
      spawned.push_back(u);
      result.events.push_back({EventKind::ProductionComplete, fi, u.id});
      b.production_queue.erase(b.production_queue.begin());
    }
    // New ids exceed every existing id, so appending keeps the vector sorted.
    for (Unit& u : spawned) f.units.push_back(u);
  }
}

void move_units(GameState& s) {
  std::array<std::vector<Target>, 2> enemies{targets_of(s.factions[1]), targets_of(s.factions[0])};
  for (int fi = 0; fi < 2; ++fi) {
    const std::vector<Target>& foes = enemies[fi];
    for (Unit& u : s.factions[fi].units) {
      const int cooldown = u.move_cooldown;
      if (u.move_cooldown > 0) --u.move_cooldown;
      std::optional<Cell> goal;
      switch (u.order.kind) {
        case OrderKind::None:
        case OrderKind::Harvest:
          break;
        case OrderKind::Move:
          if (u.position == u.order.target)
            u.order = Order{};
          else
            goal = u.order.target;
          break;
        case OrderKind::Attack: {
          const UnitStats& us = stats(u.kind);
          bool engaged = false;
          const Target* chase = nullptr;
          int chase_dist = 0;
          for (const Target& t : foes) {
            if (!can_hit(u.kind, t)) continue;
            const int d = distance(u.position, t.position);
            if (d <= us.range) {
              engaged = true;
              break;
            }
            if (d <= kAggroRadius && (chase == nullptr || d < chase_dist)) {
              chase = &t;
              chase_dist = d;
            }
          }
          if (engaged) break;
          goal = chase ? chase->position : u.order.target;
          break;
        }
      }
      if (!goal || *goal == u.position || cooldown > 0) continue;
      u.position = step_toward(u.position, *goal);
      u.move_cooldown = stats(u.kind).move_period - 1;
    }
  }
}

void resolve_combat(GameState& s) {
  std::array<std::vector<Target>, 2> enemies{targets_of(s.factions[1]), targets_of(s.factions[0])};
  std::array<std::unordered_map<EntityId, int>, 2> damage_taken;  // indexed by victim faction
  for (int fi = 0; fi < 2; ++fi) {
    const std::vector<Target>& foes = enemies[fi];
    auto& sink = damage_taken[other(fi)];
    for (const Unit& u : s.factions[fi].units) {
      if (u.order.kind == OrderKind::Move || stats(u.kind).damage == 0) continue;
      const int range = stats(u.kind).range;
      for (const Target& t : foes) {
        if (distance(u.position, t.position) > range) continue;
        const int dmg = unit_damage(u.kind, t.tags, t.kind);
        if (dmg == 0) continue;
        sink[t.id] += dmg;
        break;
      }
    }
    for (const Building& b : s.factions[fi].buildings) {
      if (b.kind != BuildingKind::Turret || !b.complete()) continue;
      const int range = stats(BuildingKind::Turret).range;
      for (const Target& t : foes) {
        if (distance(b.position, t.position) > range) continue;
        sink[t.id] += turret_damage(t.tags);
        break;
      }
    }
  }
  for (int fi = 0; fi < 2; ++fi) {
    if (damage_taken[fi].empty()) continue;
    for (Unit& u : s.factions[fi].units)
      if (auto it = damage_taken[fi].find(u.id); it != damage_taken[fi].end()) u.hp -= it->second;
    for (Building& b : s.factions[fi].buildings)
      if (auto it = damage_taken[fi].find(b.id); it != damage_taken[fi].end()) b.hp -= it->second;
  }
}

void harvest(GameState& s, TickResult& result) {
  for (int fi = 0; fi < 2; ++fi) {
    FactionState& f = s.factions[fi];
    for (Unit& u : f.units) {
      if (u.order.kind != OrderKind::Harvest) continue;
      ResourceNode* n = find_node_mut(s, u.order.node);
      if (n == nullptr || n->amount == 0 || !base_near(f, n->position, kHarvestRadius)) {
        u.order = Order{};
        u.harvest_progress = 0;
        continue;
      }
      const bool gas = n->kind == ResourceKind::Gas;
      const int cost = (gas ? kBaseGasPeriod : kBaseMineralPeriod) * 1000;
      u.harvest_progress += f.income_permille;
      if (u.harvest_progress < cost) continue;
      u.harvest_progress -= cost;
      --n->amount;
      if (gas) {
        ++f.gas;
        ++f.mined_gas;
      } else {
        ++f.minerals;
        ++f.mined_minerals;
      }
      if (n->amount == 0) result.events.push_back({EventKind::ResourceExhausted, -1, n->id});
    }
  }
}

void remove_dead(GameState& s, TickResult& result) {
  for (int fi = 0; fi < 2; ++fi) {
    FactionState& f = s.factions[fi];
    for (const Unit& u : f.units)
      if (u.hp <= 0) result.events.push_back({EventKind::UnitDied, fi, u.id});
    for (const Building& b : f.buildings)
      if (b.hp <= 0) result.events.push_back({EventKind::BuildingDestroyed, fi, b.id});
    std::erase_if(f.units, [](const Unit& u) { return u.hp <= 0; });
    std::erase_if(f.buildings, [](const Building& b) { return b.hp <= 0; });
    recompute_supply(f);
  }
}

}  // namespace

void validate_config(const GameConfig& g) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::invalid_config, why); };
  if (g.map_width < 8 || g.map_height < 8) fail("map dimensions must be at least 8x8");
  if (g.map_width > 256 || g.map_height > 256) fail("map dimensions must be at most 256x256");
  if (g.start_locations.size() != 2) fail("exactly two faction start locations are required");
  for (Cell c : g.start_locations)
    if (!in_bounds(g, c)) fail("start location out of bounds");
  if (g.start_locations[0] == g.start_locations[1]) fail("start locations coincide");
  for (Cell c : g.expansion_sites)
    if (!in_bounds(g, c)) fail("expansion site out of bounds");
  for (const ResourceSpec& r : g.resource_layout) {
    if (r.amount <= 0) fail(fmt::format("resource node at ({},{}) has non-positive amount", r.cell.x, r.cell.y));
    if (!in_bounds(g, r.cell)) fail("resource node out of bounds");
  }
  if (g.starting_workers < 0 || g.starting_workers > kMaxSupply) fail("starting_workers out of range");
  if (g.starting_base_hp <= 0) fail("starting_base_hp must be positive");
  if (g.starting_minerals < 0 || g.starting_gas < 0) fail("starting resources must be non-negative");
  if (g.tick_limit <= 0) fail("tick_limit must be positive");
  for (int p : g.income_permille)
    if (p < 100 || p > 5000) fail("income multiplier out of range [0.1, 5]");
}

GameState reset(const GameConfig& g) {
  validate_config(g);
  GameState s;
  s.tick = 0;
  s.tick_limit = g.tick_limit;
  s.width = g.map_width;
  s.height = g.map_height;
  s.base_sites = g.start_locations;
  s.base_sites.insert(s.base_sites.end(), g.expansion_sites.begin(), g.expansion_sites.end());
  for (const ResourceSpec& r : g.resource_layout) s.resource_nodes.push_back({s.next_id++, r.kind, r.cell, r.amount});
  for (int fi = 0; fi < 2; ++fi) {
    FactionState& f = s.factions[fi];
    f.minerals = g.starting_minerals;
    f.gas = g.starting_gas;
    f.income_permille = g.income_permille[fi];
    Building base;
    base.id = s.next_id++;
    base.kind = BuildingKind::Base;
    base.hp = g.starting_base_hp;
    base.position = g.start_locations[fi];
    f.buildings.push_back(base);
    for (int w = 0; w < g.starting_workers; ++w) {
      Unit u;
      u.id = s.next_id++;
      u.kind = UnitKind::Worker;
      u.hp = stats(UnitKind::Worker).hp;
      u.position = g.start_locations[fi];
      f.units.push_back(u);
    }
    recompute_supply(f);
  }
  return s;
}

int committed_supply(const FactionState& f) {
  int total = f.supply_used;
  for (const Building& b : f.buildings)
    for (const ProductionItem& item : b.production_queue) total += stats(item.kind).supply;
  return total;
}

bool can_place(const GameState& s, int faction, BuildingKind kind, Cell cell) {
  if (!in_bounds(s, cell)) return false;
  for (const FactionState& f : s.factions)
    for (const Building& b : f.buildings)
      if (b.position == cell || (kind == BuildingKind::Base && b.kind == BuildingKind::Base &&
                                 distance(b.position, cell) < 3))
        return false;
  for (const ResourceNode& n : s.resource_nodes)
    if (n.position == cell) return false;
  const bool is_site = std::find(s.base_sites.begin(), s.base_sites.end(), cell) != s.base_sites.end();
  if (kind == BuildingKind::Base) return is_site;
  return !is_site && base_near(s.factions[faction], cell, kBuildRadius);
}

std::string check_command(const GameState& s, int faction, const Command& c) {
  const FactionState& f = s.factions[faction];
  switch (c.kind) {
    case CommandKind::BuildUnit: {
      const Building* b = s.find_building(faction, c.actor);
      if (b == nullptr) return "unknown building";
      if (!b->complete()) return "building under construction";
      if (producer_of(c.unit_kind) != b->kind) return "building cannot train this unit";
      if (static_cast<int>(b->production_queue.size()) >= kMaxQueue) return "production queue full";
      const UnitStats& us = stats(c.unit_kind);
      if (f.minerals < us.minerals || f.gas < us.gas) return "insufficient resources";
      if (committed_supply(f) + us.supply > f.supply_cap) return "supply capped";
      return {};
    }
    case CommandKind::BuildStructure: {
      const BuildingStats& bs = stats(c.building_kind);
      if (f.minerals < bs.minerals || f.gas < bs.gas) return "insufficient resources";
      if (!can_place(s, faction, c.building_kind, c.cell)) return "invalid placement";
      return {};
    }
    case CommandKind::AssignWorker: {
      const Unit* u = s.find_unit(faction, c.actor);
      if (u == nullptr) return "unknown unit";
      if (u->kind != UnitKind::Worker) return "not a worker";
      const ResourceNode* n = s.find_node(c.target);
      if (n == nullptr) return "unknown resource node";
      if (n->amount == 0) return "resource node exhausted";
      if (!base_near(f, n->position, kHarvestRadius)) return "resource node not near an own base";
      if (n->kind == ResourceKind::Gas) {
        int on_node = 0;
        for (const Unit& w : f.units)
          if (w.id != u->id && w.order.kind == OrderKind::Harvest && w.order.node == n->id) ++on_node;
        if (on_node >= kMaxGasWorkers) return "geyser saturated";
      }
      return {};
    }
    case CommandKind::Move:
    case CommandKind::Attack:
    case CommandKind::Stop: {
      const Unit* u = s.find_unit(faction, c.actor);
      if (u == nullptr) return "unknown unit";
      if (c.kind != CommandKind::Stop && !in_bounds(s, c.cell)) return "target cell out of bounds";
      if (c.kind == CommandKind::Attack && stats(u->kind).damage == 0) return "unit cannot attack";
      return {};
    }
  }
  return "unknown command";
}

Terminal check_victory(const GameState& s) {
  const bool player_has = !s.factions[kPlayer].buildings.empty();
  const bool opponent_has = !s.factions[kOpponent].buildings.empty();
  if (!player_has && !opponent_has) return Terminal::draw();
  if (!opponent_has) return Terminal::win(kPlayer);
  if (!player_has) return Terminal::win(kOpponent);
  if (s.tick >= s.tick_limit) return Terminal::draw();
  return Terminal::none();
}

TickResult step_in_place(GameState& s, const ActionSet& player_actions, const ActionSet& opponent_actions) {
  if (s.terminal.kind != TerminalKind::None) throw Error(ErrorCode::step_after_terminal, "state is terminal");
  TickResult result;
  ++s.tick;
  resolve_orders(s, kPlayer, player_actions, result);
  resolve_orders(s, kOpponent, opponent_actions, result);
  progress_production(s, result);
  move_units(s);
  resolve_combat(s);
  harvest(s, result);
  remove_dead(s, result);
  s.terminal = check_victory(s);
  if (s.terminal.kind == TerminalKind::Winner) result.reward = s.terminal.winner == kPlayer ? 1 : -1;
  return result;
}

std::pair<GameState, TickResult> step(const GameState& state, const ActionSet& player_actions,
                                      const ActionSet& opponent_actions) {
  GameState next = state;
  TickResult result = step_in_place(next, player_actions, opponent_actions);
  return {std::move(next), std::move(result)};
}

ActionSet merge_manual_actions(const ActionSet& bt_actions, const ActionSet& manual_actions) {
  std::unordered_set<EntityId> overridden;
  for (const Command& c : manual_actions.commands)
    if (c.actor != 0) overridden.insert(c.actor);
  ActionSet merged{bt_actions.faction, {}};
  merged.commands.reserve(bt_actions.commands.size() + manual_actions.commands.size());
  for (const Command& c : bt_actions.commands)
    if (c.actor == 0 || !overridden.contains(c.actor)) merged.commands.push_back(c);
  for (Command c : manual_actions.commands) {
    c.manual = true;
    merged.commands.push_back(c);
  }
  return merged;
}

}  // namespace adcmd::rts
