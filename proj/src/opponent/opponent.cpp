#include "adcmd/opponent/opponent.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/embedded_data.hpp"
#include "adcmd/error.hpp"

namespace adcmd::opponent {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in [0, 1) from the top 53 bits.
double unit(std::uint64_t& state) { return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53; }

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::invalid_config, "opponent presets: " + why); }

}  // namespace

bt::ModulatorSet OpponentProfile::modulators() const {
  bt::ModulatorSet m;
  m.composition_weights = composition_weights;
  m.attack_supply_threshold = attack_threshold;
  m.worker_target_per_base = worker_target;
  m.max_bases = max_bases;
  m.build_turrets = build_turrets;
  return m;
}

OpponentPresets::OpponentPresets(std::vector<OpponentProfile> profiles) : profiles_(std::move(profiles)) {
  if (static_cast<int>(profiles_.size()) != kMaxDifficulty) bad(fmt::format("expected {} profiles", kMaxDifficulty));
  std::sort(profiles_.begin(), profiles_.end(),
            [](const OpponentProfile& a, const OpponentProfile& b) { return a.difficulty < b.difficulty; });
  for (int i = 0; i < kMaxDifficulty; ++i) {
    const OpponentProfile& p = profiles_[i];
    if (p.difficulty != i + 1) bad("difficulties must be exactly 1..6");
    if (p.income_permille <= 0) bad("income must be positive");
    if (p.reaction_ticks < 1) bad("reaction_ticks must be at least 1");
    try {
      bt::validate_modulators(p.modulators());
    } catch (const Error& e) {
      bad(fmt::format("difficulty {}: {}", p.difficulty, e.what()));
    }
    if (i == 0) continue;
    const OpponentProfile& q = profiles_[i - 1];
    if (p.income_permille < q.income_permille || p.worker_target < q.worker_target ||
        p.reaction_ticks > q.reaction_ticks)
      bad(fmt::format("difficulty {} is not monotone against {}", p.difficulty, q.difficulty));
  }
}

OpponentPresets OpponentPresets::from_json(const nlohmann::json& doc) {
  try {
    return OpponentPresets(doc.at("profiles").get<std::vector<OpponentProfile>>());
  } catch (const nlohmann::json::exception& e) {
    bad(e.what());
  }
}

const OpponentPresets& OpponentPresets::builtin() {
  static const OpponentPresets presets = from_json(nlohmann::json::parse(embedded::kOpponentPresets));
  return presets;
}

const OpponentProfile& OpponentPresets::at(int difficulty) const {
  if (difficulty < kMinDifficulty || difficulty > kMaxDifficulty)
    throw Error(ErrorCode::invalid_config, fmt::format("difficulty {} outside 1..6", difficulty));
  return profiles_[difficulty - 1];
}

bool acts_on_tick(std::int64_t tick, const OpponentProfile& profile, std::uint64_t seed) {
  const auto r = static_cast<std::uint64_t>(profile.reaction_ticks);
  return (static_cast<std::uint64_t>(tick) + seed % r) % r == 0;
}

OpponentProfile variant(const OpponentProfile& profile, std::uint64_t seed) {
  OpponentProfile v = profile;
  std::uint64_t state = seed * 0x2545f4914f6cdd1dULL + static_cast<std::uint64_t>(profile.difficulty);
  v.attack_threshold = static_cast<int>(std::lround(profile.attack_threshold * (0.75 + 0.5 * unit(state))));
  for (double& w : v.composition_weights) w *= 0.5 + unit(state);
  v.worker_target = std::max(1, profile.worker_target + static_cast<int>(splitmix64(state) % 5) - 2);
  return v;
}

rts::ActionSet opponent_actions(const rts::GameState& state, const OpponentProfile& profile, std::uint64_t seed,
                                int faction) {
  if (state.terminal.kind != rts::TerminalKind::None)
    throw Error(ErrorCode::precondition, "opponent asked to act on a terminal state");
  if (!acts_on_tick(state.tick, profile, seed)) return rts::ActionSet{faction, {}};
  const bt::Policy policy{profile.name, profile.modulators(), 0};
  return bt::tick(policy, state, faction);
}

void apply_handicap(rts::GameConfig& config, const OpponentProfile& profile, int faction) {
  config.income_permille.at(faction) = profile.income_permille;
}

void to_json(nlohmann::json& j, const OpponentProfile& p) {
  j = nlohmann::json{{"difficulty", p.difficulty},
                     {"name", p.name},
                     {"income_permille", p.income_permille},
                     {"attack_threshold", p.attack_threshold},
                     {"worker_target", p.worker_target},
                     {"composition_weights",
                      {{"Melee", p.composition_weights[0]},
                       {"Ranged", p.composition_weights[1]},
                       {"Air", p.composition_weights[2]}}},
                     {"reaction_ticks", p.reaction_ticks},
                     {"max_bases", p.max_bases},
                     {"build_turrets", p.build_turrets}};
}

void from_json(const nlohmann::json& j, OpponentProfile& p) {
  p.difficulty = j.at("difficulty").get<int>();
  p.name = j.at("name").get<std::string>();
  p.income_permille = j.at("income_permille").get<int>();
  p.attack_threshold = j.at("attack_threshold").get<int>();
  p.worker_target = j.at("worker_target").get<int>();
  const auto& w = j.at("composition_weights");
  p.composition_weights = {w.at("Melee").get<double>(), w.at("Ranged").get<double>(), w.at("Air").get<double>()};
  p.reaction_ticks = j.at("reaction_ticks").get<int>();
  p.max_bases = j.value("max_bases", 2);
  p.build_turrets = j.value("build_turrets", false);
}

}  // namespace adcmd::opponent
