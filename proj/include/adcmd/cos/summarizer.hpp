#pragma once

// Staged summaries: raw state -> frame text -> window text -> advisor
// prompt, each stage under a fixed character budget.

#include <array>
#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adcmd/advisor/types.hpp"
#include "adcmd/bt/modulators.hpp"
#include "adcmd/rts/types.hpp"

namespace adcmd::cos {

inline constexpr std::size_t kFrameBudget = 1200;
inline constexpr std::size_t kWindowBudget = 2000;
inline constexpr std::size_t kRequestBudget = 6000;

inline constexpr int kDefaultWindowFrames = 20;
inline constexpr int kDefaultStride = 10;

// Exact counts for one faction, own side and the opposing side.
struct FrameStats {
  int faction = rts::kPlayer;
  int minerals = 0;
  int gas = 0;
  int supply_used = 0;
  int supply_cap = 0;
  int army_supply = 0;  // supply of living Melee/Ranged/Air
  int bases = 0;        // Base buildings, complete or not
  std::array<int, 4> units{};      // by UnitKind
  std::array<int, 6> buildings{};  // by BuildingKind, complete or not
  int under_construction = 0;
  int queued_units = 0;
  std::array<int, 4> enemy_units{};
  std::array<int, 6> enemy_buildings{};
  int enemy_army_supply = 0;
  bool under_attack = false;  // an enemy army unit within the defense radius of an own Base

  // Numeric fields in a fixed order; the window deltas are taken over these.
  std::vector<std::pair<std::string, std::int64_t>> fields() const;
  bool operator==(const FrameStats&) const = default;
};

struct FrameSummary {
  std::int64_t tick = 0;
  std::string text;
  FrameStats structured;
};

FrameSummary summarize_frame(const rts::GameState& state, int faction);

struct WindowSummary {
  std::int64_t first_tick = 0;
  std::int64_t last_tick = 0;
  std::string text;
  std::vector<std::pair<std::string, std::int64_t>> deltas;  // last - first, FrameStats::fields() order
  bool army_growing = false;
  bool losing_units = false;
  bool expanding = false;

  // Throws Error(validation) for unknown names.
  std::int64_t delta(std::string_view field) const;
};

// Throws Error(empty_window) for no frames, Error(precondition) when ticks are
// not strictly increasing.
WindowSummary summarize_window(const std::vector<FrameSummary>& frames, int stride = kDefaultStride);

// Commands issued since the previous advisor request.
struct ActionDigest {
  std::int64_t since_tick = 0;
  std::array<int, 6> commands{};  // by CommandKind
  std::array<int, 4> units_ordered{};
  std::array<int, 6> structures_ordered{};

  void add(const rts::ActionSet& actions);
  int total() const;
  bool operator==(const ActionDigest&) const = default;
};

struct AdvisorRequest {
  WindowSummary window;
  bt::Policy current_policy;
  ActionDigest last_action_digest;
  advisor::Instruction instruction;
  std::vector<std::pair<std::string, std::string>> policy_library_digest;  // id, description
  std::string rendered;  // the prompt, at most kRequestBudget characters
  bool window_truncated = false;
};

// Throws Error(precondition) for an empty instruction and
// Error(budget_impossible) when the prompt without any window text is already
// over budget.
AdvisorRequest integrate_context(const WindowSummary& window, const bt::Policy& policy, const ActionDigest& digest,
                                 const advisor::Instruction& instruction, const bt::PolicyLibrary& library,
                                 std::size_t budget = kRequestBudget);

// Keeps a frame every `stride` ticks, at most `max_frames` of them.
class WindowSampler {
 public:
  explicit WindowSampler(int faction = rts::kPlayer, int max_frames = kDefaultWindowFrames,
                         int stride = kDefaultStride);

  // Records the state when its tick is a multiple of the stride.
  void observe(const rts::GameState& state);
  // The stored frames plus `now` when it is newer, trimmed to max_frames.
  std::vector<FrameSummary> window(const rts::GameState& now) const;
  int stride() const { return stride_; }

 private:
  int faction_;
  int max_frames_;
  int stride_;
  std::deque<FrameSummary> frames_;
};

}  // namespace adcmd::cos
