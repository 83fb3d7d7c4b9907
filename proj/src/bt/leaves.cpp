#include "leaves.hpp"

#include <algorithm>
#include <map>

#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/rts/constants.hpp"
#include "adcmd/rts/game.hpp"

namespace adcmd::bt::detail {

using namespace rts;

namespace {

constexpr int kMaxQueued = 2;  // the tree keeps producer queues short
constexpr int kSupplyHeadroom = 4;
constexpr int kTurretsPerBase = 2;
constexpr int kMaxProducersPerKind = 3;
constexpr int kBankedMinerals = 400;
constexpr int kMineralWorkersBeforeGas = 6;

bool is_army(UnitKind k) { return k != UnitKind::Worker; }

bool controllable(const Unit& u) { return !u.order.manual; }

Cell toward(Cell from, Cell to, int steps) {
  for (int i = 0; i < steps && from != to; ++i) {
    from.x += (to.x > from.x) - (to.x < from.x);
    from.y += (to.y > from.y) - (to.y < from.y);
  }
  return from;
}

Cell map_center(const GameState& s) { return {s.width / 2, s.height / 2}; }

const Building* main_base(const FactionState& f, Cell start) {
  const Building* best = nullptr;
  for (const Building& b : f.buildings) {
    if (b.kind != BuildingKind::Base) continue;
    if (best == nullptr || distance(b.position, start) < distance(best->position, start)) best = &b;
  }
  return best;
}

int count_buildings(const FactionState& f, BuildingKind kind) {
  int n = 0;
  for (const Building& b : f.buildings) n += b.kind == kind;
  return n;
}

// Free cell for `kind` near `anchor`, scanning outward ring by ring in a
// fixed order. Placement legality is the simulator's own rule.
std::optional<Cell> find_site(Context& c, BuildingKind kind, Cell base, Cell anchor) {
  for (int r = 0; r <= kBuildRadius; ++r) {
    std::optional<Cell> best;
    int best_base_d = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
        // Faction 1 scans mirrored so that mirrored states get mirrored layouts.
        const int sx = c.faction == kPlayer ? dx : -dx;
        const int sy = c.faction == kPlayer ? dy : -dy;
        const Cell cell{anchor.x + sx, anchor.y + sy};
        if (distance(cell, base) < 2 || distance(cell, base) > kBuildRadius) continue;
        if (std::find(c.reserved.begin(), c.reserved.end(), cell) != c.reserved.end()) continue;
        if (!can_place(c.s, c.faction, kind, cell)) continue;
        const int d = distance(cell, base);
        if (!best || d < best_base_d) {
          best = cell;
          best_base_d = d;
        }
      }
    if (best) return best;
  }
  return std::nullopt;
}

bool place(Context& c, BuildingKind kind, Cell base, Cell anchor, int reserve = 0) {
  const BuildingStats& bs = stats(kind);
  if (!c.affordable(bs.minerals + reserve, bs.gas)) return false;
  const std::optional<Cell> cell = find_site(c, kind, base, anchor);
  if (!cell) return false;
  c.minerals -= bs.minerals;
  c.gas -= bs.gas;
  c.reserved.push_back(*cell);
  c.emit(Command::build_structure(kind, *cell));
  return true;
}

// Complete producer of `kind` with the shortest queue below kMaxQueued.
const Building* free_producer(const Context& c, UnitKind kind) {
  const Building* best = nullptr;
  for (const Building& b : c.me.buildings) {
    if (b.kind != producer_of(kind) || !b.complete() || c.commanded.contains(b.id)) continue;
    if (static_cast<int>(b.production_queue.size()) >= kMaxQueued) continue;
    if (best == nullptr || b.production_queue.size() < best->production_queue.size()) best = &b;
  }
  return best;
}

bool train(Context& c, const Building& producer, UnitKind kind, int reserve = 0) {
  const UnitStats& us = stats(kind);
  if (!c.affordable(us.minerals + reserve, us.gas)) return false;
  if (c.committed_supply + us.supply > c.me.supply_cap) return false;
  c.minerals -= us.minerals;
  c.gas -= us.gas;
  c.committed_supply += us.supply;
  c.emit(Command::build_unit(producer.id, kind));
  return true;
}

double deficit(const std::array<double, 3>& w, const std::array<int, 3>& counts, UnitKind kind) {
  double total_w = w[0] + w[1] + w[2];
  int total_c = counts[0] + counts[1] + counts[2];
  return w[army_index(kind)] / total_w * (total_c + 1) - counts[army_index(kind)];
}

bool needs_gas(const Context& c) {
  return c.m.composition_weights[army_index(UnitKind::Ranged)] > 0 ||
         c.m.composition_weights[army_index(UnitKind::Air)] > 0;
}

bool harvestable(const Context& c, const ResourceNode& n) {
  if (n.amount == 0) return false;
  for (const Building& b : c.me.buildings)
    if (b.kind == BuildingKind::Base && b.complete() && distance(b.position, n.position) <= kHarvestRadius)
      return true;
  return false;
}

std::optional<Cell> attack_target(const Context& c) {
  const Building* best = nullptr;
  for (const Building& b : c.foe.buildings)
    if (best == nullptr || distance(b.position, c.enemy_start) < distance(best->position, c.enemy_start))
      best = &b;
  if (best == nullptr) return std::nullopt;
  return best->position;
}

Cell rally_point(const Context& c) { return toward(c.main, map_center(c.s), 3); }

std::optional<UnitKind> production_gap(const Context& c) {
  const std::vector<UnitKind> ranked = ranked_kinds(c.m.composition_weights, c.army_counts);
  for (UnitKind k : ranked)
    if (count_buildings(c.me, producer_of(k)) == 0) return k;
  if (ranked.empty() || c.minerals < kBankedMinerals) return std::nullopt;
  const UnitKind top = ranked.front();
  int producers = 0;
  for (const Building& b : c.me.buildings) {
    if (b.kind != producer_of(top)) continue;
    if (!b.complete() || static_cast<int>(b.production_queue.size()) < kMaxQueued) return std::nullopt;
    ++producers;
  }
  if (producers >= kMaxProducersPerKind) return std::nullopt;
  return top;
}

// --- conditions -------------------------------------------------------------

bool enemy_near_base(Context& c) { return c.threat().has_value(); }

bool build_turrets_enabled(Context& c) { return c.m.build_turrets; }

bool has_idle_workers(Context& c) {
  for (const Unit& u : c.me.units)
    if (u.kind == UnitKind::Worker && u.order.kind == OrderKind::None && controllable(u)) return true;
  return false;
}

bool supply_headroom_low(Context& c) {
  int projected = 0;
  for (const Building& b : c.me.buildings) projected += stats(b.kind).supply_provided;
  projected = std::min(projected, kMaxSupply);
  return projected < kMaxSupply && projected - c.committed_supply < kSupplyHeadroom;
}

bool need_workers(Context& c) { return c.workers < c.m.worker_target_per_base * c.complete_bases; }

bool can_expand(Context& c) { return c.minerals > kBankedMinerals && c.bases < c.m.max_bases; }

bool need_production(Context& c) { return production_gap(c).has_value(); }

bool turrets_wanted(Context& c) {
  return c.m.build_turrets && count_buildings(c.me, BuildingKind::Turret) < kTurretsPerBase * c.complete_bases;
}

bool army_ready(Context& c) { return c.army_supply >= c.m.attack_supply_threshold; }

// --- actions ----------------------------------------------------------------

void recall_army(Context& c) {
  const std::optional<Threat>& t = c.threat();
  if (!t) return;
  for (const Unit& u : c.me.units) {
    if (!is_army(u.kind) || !controllable(u)) continue;
    if (u.order.kind == OrderKind::Attack && distance(u.order.target, t->target) <= 2) continue;
    c.emit(Command::attack(u.id, t->target));
  }
}

void build_turret(Context& c) {
  if (const std::optional<Threat>& t = c.threat()) {
    place(c, BuildingKind::Turret, t->base, toward(t->base, t->target, 2));
    return;
  }
  // Spread turrets across complete bases, fewest first.
  const Building* target = nullptr;
  int fewest = 0;
  for (const Building& b : c.me.buildings) {
    if (b.kind != BuildingKind::Base || !b.complete()) continue;
    int near = 0;
    for (const Building& o : c.me.buildings)
      near += o.kind == BuildingKind::Turret && distance(o.position, b.position) <= kBuildRadius;
    if (target == nullptr || near < fewest) {
      target = &b;
      fewest = near;
    }
  }
  if (target != nullptr) place(c, BuildingKind::Turret, target->position, toward(target->position, c.enemy_start, 3));
}

void assign_workers(Context& c) {
  std::map<EntityId, int> load;
  int mineral_workers = 0;
  for (const Unit& u : c.me.units)
    if (u.order.kind == OrderKind::Harvest) {
      ++load[u.order.node];
      if (const ResourceNode* n = c.s.find_node(u.order.node); n && n->kind == ResourceKind::Minerals)
        ++mineral_workers;
    }
  for (const Unit& u : c.me.units) {
    if (u.kind != UnitKind::Worker || u.order.kind != OrderKind::None || !controllable(u)) continue;
    const ResourceNode* pick = nullptr;
    if (needs_gas(c) && mineral_workers >= kMineralWorkersBeforeGas)
      for (const ResourceNode& n : c.s.resource_nodes)
        if (n.kind == ResourceKind::Gas && harvestable(c, n) && load[n.id] < kMaxGasWorkers) {
          pick = &n;
          break;
        }
    if (pick == nullptr)
      for (const ResourceNode& n : c.s.resource_nodes)
        if (n.kind == ResourceKind::Minerals && harvestable(c, n) && (pick == nullptr || load[n.id] < load[pick->id]))
          pick = &n;
    if (pick == nullptr) return;
    ++load[pick->id];
    if (pick->kind == ResourceKind::Minerals) ++mineral_workers;
    c.emit(Command::assign_worker(u.id, pick->id));
  }
}

void build_supply_depot(Context& c) { place(c, BuildingKind::SupplyDepot, c.main, toward(c.main, map_center(c.s), 2)); }

void train_worker(Context& c) {
  for (const Building& b : c.me.buildings) {
    if (c.workers >= c.m.worker_target_per_base * c.complete_bases) return;
    if (b.kind != BuildingKind::Base || !b.complete()) continue;
    if (static_cast<int>(b.production_queue.size()) >= kMaxQueued) continue;
    if (!train(c, b, UnitKind::Worker)) return;
    ++c.workers;
  }
}

void build_base(Context& c) {
  const BuildingStats& bs = stats(BuildingKind::Base);
  if (!c.affordable(bs.minerals, bs.gas)) return;
  std::optional<Cell> best;
  for (const Cell& site : c.s.base_sites) {
    if (!can_place(c.s, c.faction, BuildingKind::Base, site)) continue;
    if (!best || distance(site, c.main) < distance(*best, c.main)) best = site;
  }
  if (!best) return;
  c.minerals -= bs.minerals;
  c.reserved.push_back(*best);
  c.emit(Command::build_structure(BuildingKind::Base, *best));
}

void build_production(Context& c) {
  const std::optional<UnitKind> kind = production_gap(c);
  if (kind) place(c, producer_of(*kind), c.main, toward(c.main, map_center(c.s), 3), c.reserve_minerals);
}

// Largest deficit first. Another kind with a positive deficit may go instead
// when every producer of the top kind is busy or missing; if the chosen kind
// is unaffordable the tree saves up rather than spending elsewhere.
void train_army(Context& c) {
  for (;;) {
    const std::vector<UnitKind> ranked = ranked_kinds(c.m.composition_weights, c.army_counts);
    bool trained = false;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const UnitKind k = ranked[i];
      if (i > 0 && deficit(c.m.composition_weights, c.army_counts, k) <= 0) break;
      const Building* producer = free_producer(c, k);
      if (producer == nullptr) continue;
      if (!train(c, *producer, k, c.reserve_minerals)) return;
      ++c.army_counts[army_index(k)];
      trained = true;
      break;
    }
    if (!trained) return;
  }
}

void attack_enemy_main(Context& c) {
  const std::optional<Cell> target = attack_target(c);
  if (!target) return;
  for (const Unit& u : c.me.units) {
    if (!is_army(u.kind) || !controllable(u)) continue;
    if (u.order.kind == OrderKind::Attack && u.order.target == *target) continue;
    c.emit(Command::attack(u.id, *target));
  }
}

void rally_army(Context& c) {
  const Cell rally = rally_point(c);
  for (const Unit& u : c.me.units) {
    if (!is_army(u.kind) || !controllable(u)) continue;
    const bool idle = u.order.kind == OrderKind::None;
    const bool arrived = u.order.kind == OrderKind::Attack && u.position == u.order.target && u.order.target != rally;
    if (idle || arrived) c.emit(Command::attack(u.id, rally));
  }
}

struct PredicateEntry {
  std::string_view name;
  Predicate fn;
};
struct EmitterEntry {
  std::string_view name;
  Emitter fn;
};

constexpr PredicateEntry kPredicates[] = {
    {"army_ready", army_ready},
    {"build_turrets_enabled", build_turrets_enabled},
    {"can_expand", can_expand},
    {"enemy_near_base", enemy_near_base},
    {"has_idle_workers", has_idle_workers},
    {"need_production", need_production},
    {"need_workers", need_workers},
    {"supply_headroom_low", supply_headroom_low},
    {"turrets_wanted", turrets_wanted},
};

constexpr EmitterEntry kEmitters[] = {
    {"assign_workers", assign_workers},
    {"attack_enemy_main", attack_enemy_main},
    {"build_base", build_base},
    {"build_production", build_production},
    {"build_supply_depot", build_supply_depot},
    {"build_turret", build_turret},
    {"rally_army", rally_army},
    {"recall_army", recall_army},
    {"train_army", train_army},
    {"train_worker", train_worker},
};

}  // namespace

// Army kinds with positive weight, best deficit first.
std::vector<UnitKind> ranked_kinds(const std::array<double, 3>& w, const std::array<int, 3>& counts) {
  double total_w = 0;
  int total_c = 0;
  for (int i = 0; i < 3; ++i) {
    total_w += w[i];
    total_c += counts[i];
  }
  std::vector<std::pair<double, UnitKind>> ranked;
  for (int i = 0; i < 3; ++i)
    if (w[i] > 0) ranked.push_back({w[i] / total_w * (total_c + 1) - counts[i], army_kind(i)});
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return to_string(a.second) < to_string(b.second);
  });
  std::vector<UnitKind> out;
  for (const auto& [d, k] : ranked) out.push_back(k);
  return out;
}

Context::Context(const GameState& state, int faction_, const ModulatorSet& modulators)
    : s(state),
      faction(faction_),
      me(state.factions[faction_]),
      foe(state.factions[other(faction_)]),
      m(modulators),
      out{faction_, {}},
      minerals(me.minerals),
      gas(me.gas),
      committed_supply(rts::committed_supply(me)) {
  for (const Unit& u : me.units) {
    if (u.kind == UnitKind::Worker) {
      ++workers;
    } else {
      ++army_counts[army_index(u.kind)];
      army_supply += stats(u.kind).supply;
    }
  }
  for (const Building& b : me.buildings) {
    for (const ProductionItem& item : b.production_queue) {
      if (item.kind == UnitKind::Worker)
        ++workers;
      else
        ++army_counts[army_index(item.kind)];
    }
    if (b.kind != BuildingKind::Base) continue;
    // A mined-out Base no longer counts against max_bases or the worker target.
    bool mined_out = b.complete();
    for (const ResourceNode& n : state.resource_nodes)
      if (n.amount > 0 && distance(n.position, b.position) <= kHarvestRadius) mined_out = false;
    if (mined_out) continue;
    ++bases;
    complete_bases += b.complete();
  }
  const Cell start = state.base_sites.at(faction);
  enemy_start = state.base_sites.at(other(faction));
  const Building* mb = main_base(me, start);
  main = mb ? mb->position : start;
  // Save up for the next Base once the current ones are staffed.
  if (bases < m.max_bases && complete_bases > 0 && workers >= m.worker_target_per_base * complete_bases)
    reserve_minerals = stats(BuildingKind::Base).minerals;
}

const std::optional<Threat>& Context::threat() {
  if (threat_cache) return *threat_cache;
  std::optional<Threat> found;
  int best_d = 0;
  for (const Building& b : me.buildings) {
    if (b.kind != BuildingKind::Base) continue;
    for (const Unit& u : foe.units) {
      if (!is_army(u.kind)) continue;
      const int d = distance(u.position, b.position);
      if (d <= kDefenseRadius && (!found || d < best_d)) {
        found = Threat{b.position, u.position};
        best_d = d;
      }
    }
  }
  threat_cache = found;
  return *threat_cache;
}

void Context::emit(Command c) {
  if (c.actor != 0) commanded.insert(c.actor);
  out.commands.push_back(c);
}

Predicate find_predicate(std::string_view name) {
  for (const PredicateEntry& e : kPredicates)
    if (e.name == name) return e.fn;
  return nullptr;
}

Emitter find_emitter(std::string_view name) {
  for (const EmitterEntry& e : kEmitters)
    if (e.name == name) return e.fn;
  return nullptr;
}

const std::vector<std::string_view>& predicate_names() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> v;
    for (const PredicateEntry& e : kPredicates) v.push_back(e.name);
    return v;
  }();
  return names;
}

const std::vector<std::string_view>& emitter_names() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> v;
    for (const EmitterEntry& e : kEmitters) v.push_back(e.name);
    return v;
  }();
  return names;
}

}  // namespace adcmd::bt::detail
