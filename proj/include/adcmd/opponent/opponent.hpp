#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "adcmd/bt/modulators.hpp"
#include "adcmd/rts/types.hpp"

namespace adcmd::opponent {

// A built-in opponent: behavior-tree modulators plus an income handicap and a
// reaction cadence. The opponent only acts on ticks where
// (tick + seed) % reaction_ticks == 0, so slow opponents answer attacks late.
// Each seed also plays a jittered variant of the profile (see variant()), the
// way a built-in AI picks a different opening per game.
struct OpponentProfile {
  int difficulty = 1;
  std::string name;
  int income_permille = 1000;
  int attack_threshold = 20;
  int worker_target = 16;
  std::array<double, 3> composition_weights{1, 1, 1};  // Melee, Ranged, Air
  int reaction_ticks = 1;
  int max_bases = 2;
  bool build_turrets = false;

  bt::ModulatorSet modulators() const;
  bool operator==(const OpponentProfile&) const = default;
};

inline constexpr int kMinDifficulty = 1;
inline constexpr int kMaxDifficulty = 6;

class OpponentPresets {
 public:
  // Validates ranges and monotonicity; throws Error(invalid_config).
  explicit OpponentPresets(std::vector<OpponentProfile> profiles);

  static OpponentPresets from_json(const nlohmann::json& doc);
  static const OpponentPresets& builtin();

  // Throws Error(invalid_config) outside 1..6.
  const OpponentProfile& at(int difficulty) const;
  const std::vector<OpponentProfile>& profiles() const { return profiles_; }

 private:
  std::vector<OpponentProfile> profiles_;
};

// Seed-dependent variation: attack threshold scaled by [0.75, 1.25], nonzero
// composition weights scaled by [0.5, 1.5], worker target shifted by up to 2.
// Income and reaction cadence are never jittered.
OpponentProfile variant(const OpponentProfile& profile, std::uint64_t seed);

// Plays `profile` as given; pass variant(profile, seed) for per-game
// variation. `seed` only sets the reaction phase. Throws Error(precondition)
// on a terminal state.
rts::ActionSet opponent_actions(const rts::GameState& state, const OpponentProfile& profile, std::uint64_t seed,
                                int faction = rts::kOpponent);

bool acts_on_tick(std::int64_t tick, const OpponentProfile& profile, std::uint64_t seed);

// Writes the profile's income handicap into the config for `faction`.
void apply_handicap(rts::GameConfig& config, const OpponentProfile& profile, int faction = rts::kOpponent);

void to_json(nlohmann::json& j, const OpponentProfile& p);
void from_json(const nlohmann::json& j, OpponentProfile& p);

}  // namespace adcmd::opponent
