#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adcmd/rts/types.hpp"

namespace adcmd::bt {

// Index into composition weight arrays.
inline constexpr int army_index(rts::UnitKind kind) { return static_cast<int>(kind) - 1; }
inline constexpr rts::UnitKind army_kind(int index) { return static_cast<rts::UnitKind>(index + 1); }

// Behavior Modulators: the parameters every condition and emitter of the
// tree reads. A policy adjustment is a change to these and nothing else.
struct ModulatorSet {
  std::array<double, 3> composition_weights{1.0, 1.0, 1.0};  // Melee, Ranged, Air
  int attack_supply_threshold = 20;
  int worker_target_per_base = 16;
  int max_bases = 2;
  bool build_turrets = false;

  double weight(rts::UnitKind kind) const { return composition_weights[army_index(kind)]; }
  bool operator==(const ModulatorSet&) const = default;
};

// Declared ranges; validate_modulators() enforces them.
inline constexpr double kMaxWeight = 100.0;
inline constexpr int kMaxAttackThreshold = 200;
inline constexpr int kMaxWorkerTarget = 30;
inline constexpr int kMaxBases = 4;

// Partial ModulatorSet: absent fields are left unchanged.
struct ModulatorDelta {
  std::array<std::optional<double>, 3> composition_weights{};
  std::optional<int> attack_supply_threshold;
  std::optional<int> worker_target_per_base;
  std::optional<int> max_bases;
  std::optional<bool> build_turrets;

  bool empty() const;
  bool operator==(const ModulatorDelta&) const = default;
};

struct Policy {
  std::string policy_id;
  ModulatorSet modulators;
  int revision = 0;
  bool operator==(const Policy&) const = default;
};

// Throws Error(invariant_violation) naming the first offending field.
void validate_modulators(const ModulatorSet& m);

ModulatorSet apply_delta(const ModulatorSet& m, const ModulatorDelta& delta);

// Applies `delta`, validates, bumps the revision. The input is untouched on
// failure.
Policy apply_modulators(const Policy& policy, const ModulatorDelta& delta);

struct PolicyEntry {
  std::string id;
  std::string description;  // one line
  ModulatorSet modulators;
};

// The rule-based policy presets an advisor chooses among.
class PolicyLibrary {
 public:
  PolicyLibrary() = default;
  explicit PolicyLibrary(std::vector<PolicyEntry> entries, std::string default_id);

  static PolicyLibrary from_json(const nlohmann::json& doc);
  static const PolicyLibrary& builtin();

  const std::vector<PolicyEntry>& entries() const { return entries_; }
  const std::string& default_id() const { return default_id_; }
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  const PolicyEntry* find(std::string_view id) const;
  // Throws Error(invariant_violation) for unknown ids.
  const PolicyEntry& at(std::string_view id) const;
  Policy instantiate(std::string_view id) const;

 private:
  std::vector<PolicyEntry> entries_;
  std::string default_id_;
};

void to_json(nlohmann::json& j, const ModulatorSet& m);
void from_json(const nlohmann::json& j, ModulatorSet& m);
void to_json(nlohmann::json& j, const ModulatorDelta& d);
void from_json(const nlohmann::json& j, ModulatorDelta& d);
void to_json(nlohmann::json& j, const Policy& p);
void from_json(const nlohmann::json& j, Policy& p);

}  // namespace adcmd::bt
