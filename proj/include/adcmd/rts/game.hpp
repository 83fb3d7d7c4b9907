#pragma once

#include <string>
#include <utility>

#include "adcmd/rts/types.hpp"

namespace adcmd::rts {

// Checks GameConfig invariants; throws Error(invalid_config).
void validate_config(const GameConfig& config);

// Initial state: one complete Base and `starting_workers` idle workers per
// faction at its start location. Identical configs give identical states.
GameState reset(const GameConfig& config);

// Advances one tick. Resolution order:
//   1. validate + apply orders (player first, then opponent)
//   2. construction and production progress
//   3. movement
//   4. combat (simultaneous, lowest-id target in range)
//   5. harvesting
//   6. death removal
//   7. victory check
// Invalid commands are dropped and reported in TickResult::dropped.
std::pair<GameState, TickResult> step(const GameState& state, const ActionSet& player_actions,
                                      const ActionSet& opponent_actions);

// In-place form of step(); same semantics, no state copy.
TickResult step_in_place(GameState& state, const ActionSet& player_actions,
                         const ActionSet& opponent_actions);

Terminal check_victory(const GameState& state);

// Manual commands win over behavior-tree commands for the same actor id.
ActionSet merge_manual_actions(const ActionSet& bt_actions, const ActionSet& manual_actions);

// Empty string when `command` is legal for `faction` right now, otherwise the
// reason it would be dropped. Does not account for earlier commands in the
// same ActionSet (step() re-checks each one against the evolving state).
std::string check_command(const GameState& state, int faction, const Command& command);

// Supply reserved by queued production plus living units.
int committed_supply(const FactionState& faction);

// Cells where BuildStructure(kind, cell) would currently be accepted.
bool can_place(const GameState& state, int faction, BuildingKind kind, Cell cell);

}  // namespace adcmd::rts
