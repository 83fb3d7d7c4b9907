#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/error.hpp"
#include "adcmd/opponent/opponent.hpp"
#include "adcmd/rts/serialize.hpp"
#include "support/fixtures.hpp"
#include "support/rollout.hpp"

using namespace adcmd;
using namespace adcmd::rts;
using adcmd::testing::add_building;
using adcmd::testing::add_unit;

namespace {

bt::Policy policy_with(std::array<double, 3> weights) {
  bt::Policy p = bt::PolicyLibrary::builtin().instantiate("balanced_macro");
  p.modulators.composition_weights = weights;
  return p;
}

int count_kind(const ActionSet& a, CommandKind kind) {
  return static_cast<int>(std::count_if(a.commands.begin(), a.commands.end(),
                                        [&](const Command& c) { return c.kind == kind; }));
}

bool trains(const ActionSet& a, UnitKind kind) {
  return std::any_of(a.commands.begin(), a.commands.end(),
                     [&](const Command& c) { return c.kind == CommandKind::BuildUnit && c.unit_kind == kind; });
}

// A staffed one-base position with nothing left for the economy branch to do:
// workers harvesting, the Base queue full, a finished depot, little money.
GameState quiet_midgame() {
  GameState s = reset(default_config(3));
  testing::send_workers_to_minerals(s, kPlayer);
  FactionState& f = s.factions[kPlayer];
  f.buildings.front().production_queue = {{UnitKind::Worker, 40}, {UnitKind::Worker, 40}};
  add_building(s, kPlayer, BuildingKind::SupplyDepot, {6, 6});
  f.minerals = 300;
  f.gas = 300;
  return s;
}

// Oracle for the next army unit: the kind whose addition leaves the army
// closest (squared error) to the weight proportions; ties by kind name.
UnitKind closest_after_adding(std::array<double, 3> w, std::array<int, 3> c) {
  const double total_w = w[0] + w[1] + w[2];
  const int n = c[0] + c[1] + c[2] + 1;
  std::optional<UnitKind> best;
  double best_err = 0;
  for (UnitKind k : {UnitKind::Air, UnitKind::Melee, UnitKind::Ranged}) {  // name order
    const int i = bt::army_index(k);
    if (w[i] <= 0) continue;
    double err = 0;
    for (int j = 0; j < 3; ++j) {
      const double d = c[j] + (j == i) - w[j] / total_w * n;
      err += d * d;
    }
    if (!best || err < best_err - 1e-12) {
      best = k;
      best_err = err;
    }
  }
  return *best;
}

}  // namespace

TEST_CASE("validate_tree: shipped template is clean") {
  CHECK(bt::validate_tree(bt::TreeTemplate::builtin()).empty());
  const bt::TreeNode root = bt::build_tree(bt::TreeTemplate::builtin());
  CHECK(root.kind == bt::NodeKind::Selector);
  REQUIRE(root.children.size() == 3);
  CHECK(root.children[0].name == "emergency_defense");
  CHECK(root.children[1].name == "macro");
  CHECK(root.children[2].name == "army_control");
  CHECK(bt::validate_tree(root).empty());
}

TEST_CASE("validate_tree: arity, identifiers, cycles, sharing") {
  auto has = [](const std::vector<bt::TreeIssue>& issues, bt::TreeIssueKind kind) {
    return std::any_of(issues.begin(), issues.end(), [&](const bt::TreeIssue& i) { return i.kind == kind; });
  };
  bt::TreeTemplate t;
  t.root = "r";
  t.nodes["r"] = {bt::NodeKind::Selector, {}, ""};
  CHECK(has(bt::validate_tree(t), bt::TreeIssueKind::Arity));

  t.nodes["r"].children = {"a"};
  t.nodes["a"] = {bt::NodeKind::Action, {}, "xyz"};
  auto issues = bt::validate_tree(t);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].kind == bt::TreeIssueKind::UnknownIdentifier);
  CHECK(issues[0].detail.find("xyz") != std::string::npos);

  t.nodes["a"] = {bt::NodeKind::Sequence, {"r"}, ""};
  CHECK(has(bt::validate_tree(t), bt::TreeIssueKind::Cycle));

  t.nodes["a"] = {bt::NodeKind::Sequence, {"b", "b"}, ""};
  t.nodes["b"] = {bt::NodeKind::Condition, {}, "army_ready"};
  CHECK(has(bt::validate_tree(t), bt::TreeIssueKind::SharedNode));

  t.nodes["a"] = {bt::NodeKind::Sequence, {"b", "missing"}, ""};
  CHECK(has(bt::validate_tree(t), bt::TreeIssueKind::UnknownNode));

  t.nodes["a"] = {bt::NodeKind::Sequence, {"b"}, ""};
  t.nodes["orphan"] = {bt::NodeKind::Action, {}, "train_army"};
  CHECK(has(bt::validate_tree(t), bt::TreeIssueKind::Unreachable));
  t.nodes.erase("orphan");
  CHECK(bt::validate_tree(t).empty());

  bt::TreeNode leaf{bt::NodeKind::Condition, "c", "army_ready", {}};
  leaf.children.push_back({bt::NodeKind::Action, "x", "train_army", {}});
  CHECK(has(bt::validate_tree(leaf), bt::TreeIssueKind::Arity));

  t.nodes.erase("b");
  CHECK_THROWS_AS(bt::BehaviorTree{t}, Error);
}

TEST_CASE("tree template round-trips through JSON") {
  const bt::TreeTemplate& t = bt::TreeTemplate::builtin();
  const bt::TreeTemplate back = bt::TreeTemplate::from_json(t.to_json());
  CHECK(back.root == t.root);
  CHECK(back.to_json() == t.to_json());
  CHECK_THROWS_AS(bt::TreeTemplate::from_json(nlohmann::json{{"root", "r"}}), Error);
}

TEST_CASE("tick: Air-only weights and an idle Airport train Air") {
  GameState s = quiet_midgame();
  add_building(s, kPlayer, BuildingKind::Airport, {7, 6});
  const ActionSet a = bt::tick(policy_with({0, 0, 1}), s, kPlayer);
  CHECK(trains(a, UnitKind::Air));
  CHECK_FALSE(trains(a, UnitKind::Melee));
  CHECK_FALSE(trains(a, UnitKind::Ranged));
}

TEST_CASE("tick: no army and threshold 20 means no Attack") {
  const bt::Policy p = bt::PolicyLibrary::builtin().instantiate("balanced_macro");
  REQUIRE(p.modulators.attack_supply_threshold == 20);
  GameState s = reset(default_config(5));
  for (int t = 0; t < 300; ++t) {
    const ActionSet a = bt::tick(p, s, kPlayer);
    CHECK(count_kind(a, CommandKind::Attack) == 0);
    step_in_place(s, a, ActionSet{kOpponent, {}});
  }
}

TEST_CASE("tick: 4 Melee and weights {1,1,0} train Ranged next") {
  CHECK(bt::next_army_kind({1, 1, 0}, {4, 0, 0}) == UnitKind::Ranged);
  CHECK(closest_after_adding({1, 1, 0}, {4, 0, 0}) == UnitKind::Ranged);

  GameState s = quiet_midgame();
  add_building(s, kPlayer, BuildingKind::Barracks, {7, 6});
  add_building(s, kPlayer, BuildingKind::Factory, {7, 7});
  for (int i = 0; i < 4; ++i) add_unit(s, kPlayer, UnitKind::Melee, {8, 8});
  testing::refresh_supply(s.factions[kPlayer]);
  const ActionSet a = bt::tick(policy_with({1, 1, 0}), s, kPlayer);
  const auto first = std::find_if(a.commands.begin(), a.commands.end(),
                                  [](const Command& c) { return c.kind == CommandKind::BuildUnit; });
  REQUIRE(first != a.commands.end());
  CHECK(first->unit_kind == UnitKind::Ranged);
}

TEST_CASE("next_army_kind agrees with the squared-error oracle") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    std::array<double, 3> w{};
    for (double& x : w) x = static_cast<double>(rng() % 4);
    if (w[0] + w[1] + w[2] == 0) w[rng() % 3] = 1;
    std::array<int, 3> c{};
    for (int& x : c) x = static_cast<int>(rng() % 12);
    CAPTURE(w[0]);
    CAPTURE(w[1]);
    CAPTURE(w[2]);
    CHECK(bt::next_army_kind(w, c) == closest_after_adding(w, c));
  }
}

TEST_CASE("apply_modulators") {
  const bt::Policy base = policy_with({1, 1, 1});
  bt::ModulatorDelta d;
  d.composition_weights[bt::army_index(UnitKind::Air)] = 3;
  const bt::Policy p = bt::apply_modulators(base, d);
  CHECK(p.modulators.composition_weights == std::array<double, 3>{1, 1, 3});
  CHECK(p.revision == base.revision + 1);
  CHECK(p.policy_id == base.policy_id);

  bt::ModulatorDelta zero;
  zero.composition_weights = {0.0, 0.0, 0.0};
  try {
    bt::apply_modulators(base, zero);
    FAIL("expected invariant violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invariant_violation);
  }

  const bt::Policy same = bt::apply_modulators(base, bt::ModulatorDelta{});
  CHECK(same.modulators == base.modulators);
  CHECK(same.revision == base.revision + 1);

  bt::ModulatorDelta bad;
  bad.worker_target_per_base = 0;
  CHECK_THROWS_AS(bt::apply_modulators(base, bad), Error);
}

TEST_CASE("modulator JSON is strict") {
  const auto d = nlohmann::json::parse(R"({"composition_weights": {"Air": 3}, "build_turrets": true})")
                     .get<bt::ModulatorDelta>();
  CHECK(d.composition_weights[bt::army_index(UnitKind::Air)] == 3.0);
  CHECK(d.build_turrets == true);
  CHECK_FALSE(d.attack_supply_threshold.has_value());
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"mystery": 1})").get<bt::ModulatorDelta>(), Error);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"composition_weights": {"Zerg": 1}})").get<bt::ModulatorDelta>(), Error);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"max_bases": 1.5})").get<bt::ModulatorDelta>(), Error);
  const bt::Policy p = bt::PolicyLibrary::builtin().instantiate("ranged_armored");
  CHECK(nlohmann::json(p).get<bt::Policy>() == p);
}

TEST_CASE("policy library presets are valid and distinct") {
  const bt::PolicyLibrary& lib = bt::PolicyLibrary::builtin();
  CHECK(lib.default_id() == "balanced_macro");
  for (const char* id : {"balanced_macro", "melee_rush", "ranged_armored", "air_dominance", "turtle_defense",
                         "economic_expand"})
    CHECK(lib.contains(id));
  for (std::size_t i = 0; i < lib.entries().size(); ++i)
    for (std::size_t j = i + 1; j < lib.entries().size(); ++j)
      CHECK(lib.entries()[i].modulators != lib.entries()[j].modulators);
  CHECK_THROWS_AS(lib.at("nope"), Error);
}

TEST_CASE("tick: invalid policy is rejected") {
  bt::Policy p = policy_with({0, 0, 0});
  const GameState s = reset(default_config());
  try {
    bt::tick(p, s, kPlayer);
    FAIL("expected invalid-policy");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_policy);
  }
}

TEST_CASE("tick: pure, deterministic, own faction only, supply safe") {
  const bt::PolicyLibrary& lib = bt::PolicyLibrary::builtin();
  std::mt19937_64 rng(2024);
  for (int episode = 0; episode < 12; ++episode) {
    GameState s = reset(default_config(static_cast<std::uint64_t>(episode)));
    const std::size_t n = lib.entries().size();
    const bt::Policy p0 = lib.instantiate(lib.entries()[episode % n].id);
    const bt::Policy p1 = lib.instantiate(lib.entries()[(episode + 1) % n].id);
    for (int t = 0; t < 1500 && s.terminal.kind == TerminalKind::None; ++t) {
      const std::uint64_t before = state_hash(s);
      const ActionSet a = bt::tick(p0, s, kPlayer);
      const ActionSet a2 = bt::tick(p0, s, kPlayer);
      REQUIRE(state_hash(s) == before);
      REQUIRE(a == a2);
      REQUIRE(a.faction == kPlayer);

      int supply = committed_supply(s.factions[kPlayer]);
      for (const Command& c : a.commands) {
        if (c.kind == CommandKind::BuildUnit) {
          REQUIRE(s.find_building(kPlayer, c.actor) != nullptr);
          supply += stats(c.unit_kind).supply;
        } else if (c.kind != CommandKind::BuildStructure) {
          REQUIRE(s.find_unit(kPlayer, c.actor) != nullptr);
        }
      }
      REQUIRE(supply <= s.factions[kPlayer].supply_cap);

      // The opponent plays randomly so the tree sees varied positions.
      const ActionSet b = t % 3 == 0 ? bt::tick(p1, s, kOpponent) : testing::random_actions(s, kOpponent, rng);
      const TickResult r = step_in_place(s, a, b);
      for (const DroppedCommand& d : r.dropped) REQUIRE_MESSAGE(d.faction != kPlayer, d.reason);
    }
  }
}

TEST_CASE("composition converges to the weights in a combat-free sandbox") {
  const std::array<std::array<double, 3>, 5> cases{{{1, 1, 1}, {1, 3, 0}, {0, 0, 1}, {2, 1, 1}, {1, 2, 3}}};
  for (const auto& w : cases) {
    GameConfig cfg = default_config(9);
    cfg.starting_minerals = 1'000'000;
    cfg.starting_gas = 1'000'000;
    GameState s = reset(cfg);
    bt::Policy p = policy_with(w);
    p.modulators.attack_supply_threshold = bt::kMaxAttackThreshold;  // never leaves home
    for (int t = 0; t < 2000; ++t) step_in_place(s, bt::tick(p, s, kPlayer), ActionSet{kOpponent, {}});

    // Brute-force recount of existing plus queued army units.
    std::array<int, 3> counts{};
    for (const Unit& u : s.factions[kPlayer].units)
      if (u.kind != UnitKind::Worker) ++counts[bt::army_index(u.kind)];
    for (const Building& b : s.factions[kPlayer].buildings)
      for (const ProductionItem& item : b.production_queue)
        if (item.kind != UnitKind::Worker) ++counts[bt::army_index(item.kind)];
    const int n = counts[0] + counts[1] + counts[2];
    const double total_w = w[0] + w[1] + w[2];
    CAPTURE(w[0]);
    CAPTURE(w[1]);
    CAPTURE(w[2]);
    CHECK(n >= 20);
    for (int i = 0; i < 3; ++i) {
      CAPTURE(i);
      CAPTURE(counts[i]);
      CHECK(std::abs(counts[i] - w[i] / total_w * n) <= 1.0);
    }
    // No fighting happened.
    CHECK(s.factions[kOpponent].buildings.size() == 1);
  }
}

TEST_CASE("lowering the attack threshold never delays the first attack") {
  const opponent::OpponentProfile& opp = opponent::OpponentPresets::builtin().at(3);
  auto first_attack = [&](std::uint64_t seed, int threshold) -> std::int64_t {
    GameConfig cfg = default_config(seed);
    opponent::apply_handicap(cfg, opp);
    GameState s = reset(cfg);
    bt::Policy p = bt::PolicyLibrary::builtin().instantiate("balanced_macro");
    p.modulators.attack_supply_threshold = threshold;
    while (s.terminal.kind == TerminalKind::None && s.tick < 6000) {
      const ActionSet a = bt::tick(p, s, kPlayer);
      for (const Command& c : a.commands)
        if (c.kind == CommandKind::Attack)
          for (const Building& b : s.factions[kOpponent].buildings)
            if (b.position == c.cell) return s.tick;
      step_in_place(s, a, opponent::opponent_actions(s, opp, seed));
    }
    return std::numeric_limits<std::int64_t>::max();
  };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::int64_t prev = 0;
    for (int threshold : {2, 6, 10, 16, 24, 40}) {
      const std::int64_t t = first_attack(seed, threshold);
      CAPTURE(seed);
      CAPTURE(threshold);
      CHECK(t >= prev);
      prev = t;
    }
  }
}
