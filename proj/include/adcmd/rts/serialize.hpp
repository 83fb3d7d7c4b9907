#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "adcmd/rts/types.hpp"

namespace adcmd {

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value);

}  // namespace adcmd

namespace adcmd::rts {

// Canonical serialization: compact, keys in lexicographic order at every
// level, integers only. nlohmann::json::parse(s).dump() == s holds.
std::string to_canonical_json(const GameState& state);
std::uint64_t state_hash(const GameState& state);

void to_json(nlohmann::json& j, const Cell& cell);
void from_json(const nlohmann::json& j, Cell& cell);
void to_json(nlohmann::json& j, const Command& command);
void from_json(const nlohmann::json& j, Command& command);
void to_json(nlohmann::json& j, const ActionSet& actions);
void from_json(const nlohmann::json& j, ActionSet& actions);
void to_json(nlohmann::json& j, const Event& event);
void to_json(nlohmann::json& j, const DroppedCommand& dropped);
void to_json(nlohmann::json& j, const Terminal& terminal);
void to_json(nlohmann::json& j, const ResourceSpec& spec);
void from_json(const nlohmann::json& j, ResourceSpec& spec);
void to_json(nlohmann::json& j, const GameConfig& config);
void from_json(const nlohmann::json& j, GameConfig& config);

nlohmann::json state_to_json(const GameState& state);

}  // namespace adcmd::rts
