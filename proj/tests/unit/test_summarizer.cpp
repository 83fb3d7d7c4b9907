#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/cos/summarizer.hpp"
#include "adcmd/error.hpp"
#include "adcmd/opponent/opponent.hpp"
#include "adcmd/rts/maps.hpp"
#include "adcmd/rts/serialize.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace adcmd;
using namespace adcmd::rts;
using adcmd::testing::reachable_states;
using adcmd::testing::recount;

namespace {

// Field-by-field so a failure names the field.
bool same_counts(const cos::FrameStats& got, const cos::FrameStats& want) {
  const std::string diff = adcmd::testing::count_mismatch(got, want);
  if (!diff.empty()) MESSAGE(diff);
  return diff.empty();
}

cos::FrameSummary frame_with_army(std::int64_t tick, int army) {
  cos::FrameSummary f;
  f.tick = tick;
  f.structured.army_supply = army;
  f.structured.units[1] = army;
  f.structured.bases = 1;
  f.text = "frame\n";
  return f;
}

advisor::Instruction instruction(std::string text, std::int64_t tick = 0) {
  return advisor::Instruction{1, tick, std::move(text), advisor::Channel::Chat};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("summarize_frame: fresh reset") {
  const GameState s = reset(default_config(1));
  const cos::FrameSummary f = cos::summarize_frame(s, kPlayer);
  CHECK(f.tick == 0);
  CHECK(f.structured.buildings[static_cast<int>(BuildingKind::Base)] == 1);
  CHECK(f.structured.bases == 1);
  CHECK(f.structured.units[static_cast<int>(UnitKind::Worker)] == 6);
  CHECK(f.structured.army_supply == 0);
  CHECK_FALSE(f.structured.under_attack);
  CHECK(f.text.find("6 workers") != std::string::npos);
  CHECK(same_counts(f.structured, recount(s, kPlayer)));
  CHECK(same_counts(cos::summarize_frame(s, kOpponent).structured, recount(s, kOpponent)));
}

TEST_CASE("summarize_frame: enemy army inside the defense radius") {
  GameState s = reset(default_config(1));
  const Cell base = s.factions[kPlayer].buildings.front().position;
  adcmd::testing::add_unit(s, kOpponent, UnitKind::Worker, {base.x + 2, base.y});
  CHECK_FALSE(cos::summarize_frame(s, kPlayer).structured.under_attack);
  Unit& m = adcmd::testing::add_unit(s, kOpponent, UnitKind::Melee, {base.x + bt::kDefenseRadius + 1, base.y});
  CHECK_FALSE(cos::summarize_frame(s, kPlayer).structured.under_attack);
  m.position.x = base.x + bt::kDefenseRadius;
  const cos::FrameSummary f = cos::summarize_frame(s, kPlayer);
  CHECK(f.structured.under_attack);
  CHECK(same_counts(f.structured, recount(s, kPlayer)));
  CHECK(f.text.find("enemy army near") != std::string::npos);
}

TEST_CASE("summarize_window: deltas and trends") {
  SUBCASE("single frame") {
    const cos::WindowSummary w = cos::summarize_window({frame_with_army(10, 4)});
    for (const auto& [name, value] : w.deltas) CHECK_MESSAGE(value == 0, name);
    CHECK_FALSE(w.army_growing);
    CHECK_FALSE(w.losing_units);
    CHECK_FALSE(w.expanding);
  }
  SUBCASE("army 4 -> 10") {
    const cos::WindowSummary w =
        cos::summarize_window({frame_with_army(0, 4), frame_with_army(10, 7), frame_with_army(20, 10)});
    CHECK(w.delta("army_supply") == 6);
    CHECK(w.army_growing);
    CHECK_FALSE(w.losing_units);
    CHECK(w.first_tick == 0);
    CHECK(w.last_tick == 20);
  }
  SUBCASE("losses and expansion") {
    cos::FrameSummary a = frame_with_army(0, 10), b = frame_with_army(10, 6);
    b.structured.bases = 2;
    const cos::WindowSummary w = cos::summarize_window({a, b});
    CHECK(w.losing_units);
    CHECK(w.expanding);
    CHECK_FALSE(w.army_growing);
  }
  SUBCASE("errors") {
    try {
      cos::summarize_window({});
      FAIL("expected empty-window");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::empty_window);
    }
    CHECK_THROWS_AS(cos::summarize_window({frame_with_army(5, 1), frame_with_army(5, 2)}), Error);
  }
}

TEST_CASE("summarize_window: deltas match endpoint subtraction on real frames") {
  const auto states = reachable_states(60);
  std::vector<cos::FrameSummary> frames;
  for (const GameState& s : states) {
    if (!frames.empty() && s.tick <= frames.back().tick) break;
    frames.push_back(cos::summarize_frame(s, kPlayer));
  }
  REQUIRE(frames.size() > 2);
  const cos::WindowSummary w = cos::summarize_window(frames);
  const auto a = recount(states.front(), kPlayer).fields();
  const auto b = recount(states[frames.size() - 1], kPlayer).fields();
  REQUIRE(w.deltas.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(w.deltas[i].first == a[i].first);
    CHECK(w.deltas[i].second == b[i].second - a[i].second);
  }
  CHECK(w.text.size() <= cos::kWindowBudget);
}

TEST_CASE("integrate_context: verbatim instruction, policy naming, truncation") {
  const GameState s = reset(default_config(3));
  const cos::WindowSummary w = cos::summarize_window({cos::summarize_frame(s, kPlayer)});
  bt::Policy p = bt::PolicyLibrary::builtin().instantiate("ranged_armored");
  p.revision = 3;
  const cos::ActionDigest digest;

  const cos::AdvisorRequest r = cos::integrate_context(w, p, digest, instruction("attack now"),
                                                       bt::PolicyLibrary::builtin());
  CHECK(r.rendered.find("\nattack now\n") != std::string::npos);
  CHECK(r.rendered.find("ranged_armored (revision 3)") != std::string::npos);
  CHECK(r.rendered.size() <= cos::kRequestBudget);
  CHECK_FALSE(r.window_truncated);

  cos::WindowSummary big = w;
  big.text.clear();
  for (int i = 0; i < 400; ++i) big.text += "padding line " + std::to_string(i) + "\n";
  const std::string text = "hold the ramp   with  \"Ranged\"\tunits";
  const cos::AdvisorRequest t = cos::integrate_context(big, p, digest, instruction(text), bt::PolicyLibrary::builtin());
  CHECK(t.window_truncated);
  CHECK(t.rendered.size() <= cos::kRequestBudget);
  CHECK(t.rendered.find(text) != std::string::npos);
  CHECK(t.rendered.find("padding line 0\n") != std::string::npos);

  try {
    cos::integrate_context(w, p, digest, instruction(std::string(cos::kRequestBudget + 1, 'x')),
                           bt::PolicyLibrary::builtin());
    FAIL("expected budget-impossible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::budget_impossible);
  }
  CHECK_THROWS_AS(cos::integrate_context(w, p, digest, instruction(""), bt::PolicyLibrary::builtin()), Error);
}

TEST_CASE("action digest counts commands by kind") {
  cos::ActionDigest d;
  d.add(ActionSet{kPlayer,
                  {Command::build_unit(1, UnitKind::Air), Command::build_unit(2, UnitKind::Air),
                   Command::build_structure(BuildingKind::Turret, {3, 3}), Command::attack(4, {9, 9})}});
  CHECK(d.total() == 4);
  CHECK(d.commands[static_cast<int>(CommandKind::BuildUnit)] == 2);
  CHECK(d.units_ordered[static_cast<int>(UnitKind::Air)] == 2);
  CHECK(d.structures_ordered[static_cast<int>(BuildingKind::Turret)] == 1);
}

TEST_CASE("window sampler keeps stride frames and the current one") {
  cos::WindowSampler sampler(kPlayer, 3, 10);
  GameState s = reset(default_config(2));
  const bt::Policy p = bt::PolicyLibrary::builtin().instantiate("balanced_macro");
  for (int t = 0; t < 45; ++t) {
    sampler.observe(s);
    step_in_place(s, bt::tick(p, s, kPlayer), ActionSet{kOpponent, {}});
  }
  const auto frames = sampler.window(s);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].tick == 30);
  CHECK(frames[1].tick == 40);
  CHECK(frames[2].tick == 45);
}

TEST_CASE("prompt matches the golden file") {
  GameState s = reset(default_config(7));
  adcmd::testing::add_unit(s, kPlayer, UnitKind::Ranged, {5, 5});
  std::vector<cos::FrameSummary> frames{cos::summarize_frame(s, kPlayer)};
  s.tick = 10;
  adcmd::testing::add_unit(s, kPlayer, UnitKind::Air, {6, 5});
  frames.push_back(cos::summarize_frame(s, kPlayer));
  bt::Policy p = bt::PolicyLibrary::builtin().instantiate("balanced_macro");
  p.revision = 2;
  cos::ActionDigest d;
  d.since_tick = 0;
  d.add(ActionSet{kPlayer, {Command::build_unit(1, UnitKind::Worker)}});
  const cos::AdvisorRequest r = cos::integrate_context(cos::summarize_window(frames), p, d,
                                                       instruction("I want to play a sky army style", 10),
                                                       bt::PolicyLibrary::builtin());
  const char* root = std::getenv("ADCMD_SOURCE_DIR");
  REQUIRE(root != nullptr);
  const std::string path = std::string(root) + "/tests/golden/advisor_prompt.txt";
  if (std::getenv("ADCMD_UPDATE_GOLDEN") != nullptr) std::ofstream(path, std::ios::binary) << r.rendered;
  CHECK(r.rendered == read_file(path));
}

TEST_CASE("budgets and exact counts over reachable states") {
  const auto states = reachable_states(1000);
  REQUIRE(states.size() == 1000);
  const bt::PolicyLibrary& lib = bt::PolicyLibrary::builtin();
  std::size_t max_frame = 0, max_window = 0, max_prompt = 0;
  std::vector<cos::FrameSummary> window;
  for (const GameState& s : states) {
    for (int faction : {kPlayer, kOpponent}) {
      const cos::FrameSummary f = cos::summarize_frame(s, faction);
      REQUIRE(same_counts(f.structured, recount(s, faction)));
      max_frame = std::max(max_frame, f.text.size());
      if (faction != kPlayer) continue;
      if (!window.empty() && window.back().tick >= f.tick) window.clear();
      window.push_back(f);
      if (window.size() > 20) window.erase(window.begin());
      const cos::WindowSummary w = cos::summarize_window(window);
      max_window = std::max(max_window, w.text.size());
      const cos::AdvisorRequest r =
          cos::integrate_context(w, lib.instantiate("economic_expand"), {}, instruction("make more workers"), lib);
      max_prompt = std::max(max_prompt, r.rendered.size());
    }
  }
  MESSAGE("longest frame ", max_frame, ", window ", max_window, ", prompt ", max_prompt);
  CHECK(max_frame <= cos::kFrameBudget);
  CHECK(max_window <= cos::kWindowBudget);
  CHECK(max_prompt <= cos::kRequestBudget);
}
