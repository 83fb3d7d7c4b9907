#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "adcmd/error.hpp"
#include "adcmd/rts/constants.hpp"
#include "adcmd/rts/game.hpp"
#include "adcmd/rts/maps.hpp"
#include "adcmd/rts/serialize.hpp"
#include "support/rollout.hpp"

using namespace adcmd;
using namespace adcmd::rts;

namespace {

const ActionSet kNoPlayer{kPlayer, {}};
const ActionSet kNoOpponent{kOpponent, {}};

Unit make_unit(GameState& s, UnitKind kind, Cell at) {
  Unit u;
  u.id = s.next_id++;
  u.kind = kind;
  u.hp = stats(kind).hp;
  u.position = at;
  return u;
}

// Both factions keep only their Base; the caller adds units.
GameState empty_arena() {
  GameState s = reset(default_config(1));
  for (auto& f : s.factions) f.units.clear();
  for (auto& f : s.factions) f.supply_used = 0;
  return s;
}

int count_units(const FactionState& f, UnitKind kind) {
  int n = 0;
  for (const Unit& u : f.units) n += u.kind == kind;
  return n;
}

}  // namespace

TEST_CASE("reset: default config gives two bases and twelve workers at tick 0") {
  const GameState s = reset(default_config());
  CHECK(s.tick == 0);
  CHECK(s.terminal.kind == TerminalKind::None);
  int bases = 0, workers = 0;
  for (const auto& f : s.factions) {
    bases += static_cast<int>(f.buildings.size());
    workers += count_units(f, UnitKind::Worker);
    CHECK(f.supply_used == 6);
    CHECK(f.supply_cap == 10);
  }
  CHECK(bases == 2);
  CHECK(workers == 12);
}

TEST_CASE("reset: same seed twice is byte-identical, different seeds differ") {
  CHECK(to_canonical_json(reset(default_config(42))) == to_canonical_json(reset(default_config(42))));
  CHECK(state_hash(reset(default_config(42))) != state_hash(reset(default_config(43))));
}

TEST_CASE("reset: invalid configs are rejected") {
  GameConfig g = default_config();
  g.resource_layout.push_back({{10, 10}, ResourceKind::Minerals, 0});
  CHECK_THROWS_AS(reset(g), Error);
  try {
    reset(g);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_config);
  }

  GameConfig small = default_config();
  small.map_width = 7;
  CHECK_THROWS_AS(reset(small), Error);

  GameConfig one_start = default_config();
  one_start.start_locations.pop_back();
  CHECK_THROWS_AS(reset(one_start), Error);
}

TEST_CASE("maps: every preset is valid and point-symmetric in geometry") {
  for (const std::string& name : map_names()) {
    const GameConfig g = make_map(name, 7);
    CHECK_NOTHROW(validate_config(g));
    const Cell a = g.start_locations[0], b = g.start_locations[1];
    CHECK(a.x + b.x == g.map_width - 1);
    CHECK(a.y + b.y == g.map_height - 1);
  }
  CHECK_THROWS_AS(make_map("nowhere", 0), Error);
}

TEST_CASE("canonical json round-trips through a key-sorting parser unchanged") {
  GameState s = reset(default_config(3));
  std::mt19937_64 rng(99);
  for (int t = 0; t < 400; ++t) {
    auto a = testing::random_actions(s, kPlayer, rng);
    auto b = testing::random_actions(s, kOpponent, rng);
    step_in_place(s, a, b);
    if (t % 50 == 0) {
      const std::string text = to_canonical_json(s);
      CHECK(nlohmann::json::parse(text).dump() == text);
    }
  }
}

TEST_CASE("step: empty actions on a fresh state only advance the tick") {
  const GameState s0 = reset(default_config());
  auto [s1, r] = step(s0, kNoPlayer, kNoOpponent);
  CHECK(s1.tick == 1);
  CHECK(s1.factions[0].minerals == s0.factions[0].minerals);
  CHECK(s1.factions[1].gas == s0.factions[1].gas);
  CHECK(r.reward == 0);
  CHECK(r.events.empty());
}

TEST_CASE("step: five workers on one node for 80 ticks mine 50 minerals") {
  // Oracle: 5 workers x 80 ticks / 8 ticks per mineral.
  GameState s = reset(default_config());
  const FactionState& f = s.factions[kPlayer];
  const ResourceNode* node = nullptr;
  for (const ResourceNode& n : s.resource_nodes)
    if (n.kind == ResourceKind::Minerals && distance(n.position, f.buildings[0].position) <= kHarvestRadius) {
      node = &n;
      break;
    }
  REQUIRE(node != nullptr);
  const EntityId node_id = node->id;
  ActionSet assign{kPlayer, {}};
  for (int i = 0; i < 5; ++i) assign.commands.push_back(Command::assign_worker(f.units[i].id, node_id));
  const int before = f.minerals;
  step_in_place(s, assign, kNoOpponent);
  for (int t = 1; t < 80; ++t) step_in_place(s, kNoPlayer, kNoOpponent);
  CHECK(s.factions[kPlayer].minerals - before == 5 * 80 / 8);
  CHECK(s.factions[kPlayer].mined_minerals == 50);
}

TEST_CASE("step: melee unit kills an adjacent worker on tick 8") {
  // Oracle: 8 ticks x 5 damage >= 40 hp; 7 x 5 < 40.
  GameState s = empty_arena();
  s.factions[kPlayer].units.push_back(make_unit(s, UnitKind::Melee, {15, 15}));
  Unit victim = make_unit(s, UnitKind::Worker, {16, 15});
  const EntityId victim_id = victim.id;
  s.factions[kOpponent].units.push_back(victim);
  for (int t = 1; t <= 8; ++t) {
    auto r = step_in_place(s, kNoPlayer, kNoOpponent);
    const bool alive = s.find_unit(kOpponent, victim_id) != nullptr;
    if (t < 8) {
      CHECK(alive);
    } else {
      CHECK_FALSE(alive);
      REQUIRE(r.events.size() == 1);
      CHECK(r.events[0].kind == EventKind::UnitDied);
    }
  }
}

TEST_CASE("combat: pairwise duels match the hand-written damage table") {
  // Independent damage-per-tick matrix [attacker][victim]; 0 = cannot hit.
  // Worker never deals damage; Melee cannot hit Air; Ranged +4 vs air;
  // Air +3 vs Melee.
  const std::map<std::pair<UnitKind, UnitKind>, int> expected = {
      {{UnitKind::Melee, UnitKind::Worker}, 5}, {{UnitKind::Melee, UnitKind::Melee}, 5},
      {{UnitKind::Melee, UnitKind::Ranged}, 5}, {{UnitKind::Melee, UnitKind::Air}, 0},
      {{UnitKind::Ranged, UnitKind::Worker}, 4}, {{UnitKind::Ranged, UnitKind::Melee}, 4},
      {{UnitKind::Ranged, UnitKind::Ranged}, 4}, {{UnitKind::Ranged, UnitKind::Air}, 8},
      {{UnitKind::Air, UnitKind::Worker}, 4},    {{UnitKind::Air, UnitKind::Melee}, 7},
      {{UnitKind::Air, UnitKind::Ranged}, 4},    {{UnitKind::Air, UnitKind::Air}, 4},
  };
  const std::map<UnitKind, int> hp = {
      {UnitKind::Worker, 40}, {UnitKind::Melee, 60}, {UnitKind::Ranged, 90}, {UnitKind::Air, 80}};
  for (const auto& [pair, dmg] : expected) {
    const auto [attacker, victim] = pair;
    CAPTURE(to_string(attacker));
    CAPTURE(to_string(victim));
    // One tick: the victim's hp loss depends only on the attacker.
    GameState s = empty_arena();
    s.factions[kPlayer].units.push_back(make_unit(s, attacker, {15, 15}));
    Unit v = make_unit(s, victim, {16, 15});
    const EntityId vid = v.id;
    s.factions[kOpponent].units.push_back(v);
    step_in_place(s, kNoPlayer, kNoOpponent);
    const Unit* after = s.find_unit(kOpponent, vid);
    REQUIRE(after != nullptr);
    CHECK(hp.at(victim) - after->hp == dmg);
  }
}

TEST_CASE("combat: simultaneous resolution and lowest-id targeting") {
  GameState s = empty_arena();
  s.factions[kPlayer].units.push_back(make_unit(s, UnitKind::Melee, {15, 15}));
  Unit low = make_unit(s, UnitKind::Worker, {16, 15});
  Unit high = make_unit(s, UnitKind::Worker, {14, 15});
  s.factions[kOpponent].units.push_back(low);
  s.factions[kOpponent].units.push_back(high);
  step_in_place(s, kNoPlayer, kNoOpponent);
  CHECK(s.find_unit(kOpponent, low.id)->hp == 35);
  CHECK(s.find_unit(kOpponent, high.id)->hp == 40);

  // Two melee units at 5 hp each trade simultaneously: both die.
  GameState t = empty_arena();
  Unit a = make_unit(t, UnitKind::Melee, {15, 15});
  Unit b = make_unit(t, UnitKind::Melee, {16, 15});
  a.hp = 5;
  b.hp = 5;
  t.factions[kPlayer].units.push_back(a);
  t.factions[kOpponent].units.push_back(b);
  step_in_place(t, kNoPlayer, kNoOpponent);
  CHECK(t.factions[kPlayer].units.empty());
  CHECK(t.factions[kOpponent].units.empty());
}

TEST_CASE("check_victory: building elimination and tick limit") {
  GameState s = reset(default_config());
  CHECK(check_victory(s) == Terminal::none());

  GameState no_enemy = s;
  no_enemy.factions[kOpponent].buildings.clear();
  CHECK(check_victory(no_enemy) == Terminal::win(kPlayer));

  GameState no_self = s;
  no_self.factions[kPlayer].buildings.clear();
  CHECK(check_victory(no_self) == Terminal::win(kOpponent));

  GameState limit = s;
  limit.tick = limit.tick_limit;
  CHECK(check_victory(limit) == Terminal::draw());
}

TEST_CASE("step: terminal state is absorbing and rewards only at the end") {
  GameState s = empty_arena();
  s.factions[kOpponent].buildings[0].hp = 3;
  s.factions[kPlayer].units.push_back(make_unit(s, UnitKind::Melee, s.factions[kOpponent].buildings[0].position));
  auto r = step_in_place(s, kNoPlayer, kNoOpponent);
  CHECK(s.terminal == Terminal::win(kPlayer));
  CHECK(r.reward == 1);
  try {
    step_in_place(s, kNoPlayer, kNoOpponent);
    FAIL("expected step-after-terminal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::step_after_terminal);
  }

  GameConfig g = default_config();
  g.tick_limit = 5;
  GameState d = reset(g);
  int rewards = 0;
  while (d.terminal.kind == TerminalKind::None) rewards += std::abs(step_in_place(d, kNoPlayer, kNoOpponent).reward);
  CHECK(d.tick == 5);
  CHECK(d.terminal == Terminal::draw());
  CHECK(rewards == 0);
}

TEST_CASE("orders: invalid commands are dropped, not fatal") {
  GameState s = reset(default_config());
  ActionSet bad{kPlayer,
                {Command::move(999999, {1, 1}), Command::build_unit(s.factions[kOpponent].buildings[0].id,
                                                                    UnitKind::Worker),
                 Command::build_structure(BuildingKind::Barracks, {30, 30})}};
  auto r = step_in_place(s, bad, kNoOpponent);
  CHECK(r.dropped.size() == 3);
  CHECK(s.tick == 1);

  ActionSet wrong_faction{kOpponent, {Command::stop(s.factions[kPlayer].units[0].id)}};
  CHECK(step_in_place(s, wrong_faction, kNoOpponent).dropped.size() == 1);
}

TEST_CASE("orders: production respects supply cap and queue length") {
  GameConfig g = default_config();
  g.starting_minerals = 100000;
  g.starting_workers = 8;
  GameState s = reset(g);
  const EntityId base = s.factions[kPlayer].buildings[0].id;
  ActionSet many{kPlayer, {}};
  for (int i = 0; i < 6; ++i) many.commands.push_back(Command::build_unit(base, UnitKind::Worker));
  auto r = step_in_place(s, many, kNoOpponent);
  // Cap 10, used 8: two fit; queue limit 5 is never reached.
  CHECK(s.factions[kPlayer].buildings[0].production_queue.size() == 2);
  CHECK(r.dropped.size() == 4);
  CHECK(committed_supply(s.factions[kPlayer]) <= s.factions[kPlayer].supply_cap);
}

TEST_CASE("merge_manual_actions: manual wins per actor, union otherwise") {
  ActionSet bt{kPlayer, {Command::attack(7, {20, 20}), Command::move(8, {3, 3}),
                         Command::build_structure(BuildingKind::SupplyDepot, {5, 5})}};
  ActionSet manual{kPlayer, {Command::move(7, {1, 1})}};
  ActionSet merged = merge_manual_actions(bt, manual);
  REQUIRE(merged.commands.size() == 3);
  int for7 = 0;
  for (const Command& c : merged.commands)
    if (c.actor == 7) {
      ++for7;
      CHECK(c.kind == CommandKind::Move);
      CHECK(c.manual);
    }
  CHECK(for7 == 1);

  CHECK(merge_manual_actions(bt, ActionSet{kPlayer, {}}) == bt);

  ActionSet disjoint{kPlayer, {Command::stop(9)}};
  ActionSet u = merge_manual_actions(bt, disjoint);
  CHECK(u.commands.size() == bt.commands.size() + 1);
}

TEST_CASE("property: random rollouts keep invariants and are deterministic") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    CAPTURE(seed);
    GameState a = reset(default_config(seed));
    GameState b = a;
    std::mt19937_64 rng(seed), rng_b(seed);
    std::int64_t initial_minerals = 0;
    for (const ResourceNode& n : a.resource_nodes)
      if (n.kind == ResourceKind::Minerals) initial_minerals += n.amount;
    const int start = a.factions[0].minerals;
    std::set<EntityId> seen_ids;
    for (int t = 0; t < 1500 && a.terminal.kind == TerminalKind::None; ++t) {
      auto pa = testing::random_actions(a, kPlayer, rng), oa = testing::random_actions(a, kOpponent, rng);
      auto pb = testing::random_actions(b, kPlayer, rng_b), ob = testing::random_actions(b, kOpponent, rng_b);
      const std::int64_t tick_before = a.tick;
      auto ra = step_in_place(a, pa, oa);
      step_in_place(b, pb, ob);
      REQUIRE(a.tick == tick_before + 1);
      REQUIRE(state_hash(a) == state_hash(b));
      if (ra.reward != 0) REQUIRE(a.terminal.kind != TerminalKind::None);
      std::int64_t mined_total = 0;
      for (const FactionState& f : a.factions) {
        REQUIRE(f.minerals >= 0);
        REQUIRE(f.gas >= 0);
        REQUIRE(f.minerals == start + f.mined_minerals - f.spent_minerals);
        int used = 0;
        for (const Unit& u : f.units) {
          used += stats(u.kind).supply;
          REQUIRE(u.hp > 0);
          REQUIRE(u.hp <= stats(u.kind).hp);
        }
        REQUIRE(used == f.supply_used);
        for (const Building& bl : f.buildings) REQUIRE(bl.production_queue.size() <= kMaxQueue);
        mined_total += f.mined_minerals;
      }
      REQUIRE(mined_total <= initial_minerals);
      for (const FactionState& f : a.factions)
        for (const Unit& u : f.units) seen_ids.insert(u.id);
    }
    CHECK(static_cast<EntityId>(seen_ids.size()) < a.next_id);
  }
}
