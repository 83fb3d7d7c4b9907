#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "adcmd/bt/modulators.hpp"

namespace adcmd::advisor {

enum class Channel : std::uint8_t { Chat, Transcript };

std::string_view to_string(Channel channel);
std::optional<Channel> parse_channel(std::string_view name);

struct Instruction {
  std::int64_t id = 0;
  std::int64_t tick_received = 0;
  std::string text;
  Channel channel = Channel::Chat;
  bool operator==(const Instruction&) const = default;
};

enum class Backend : std::uint8_t { Scripted, Http };

std::string_view to_string(Backend backend);
std::optional<Backend> parse_backend(std::string_view name);

struct AdvisorConfig {
  Backend backend = Backend::Scripted;
  std::string endpoint;  // http only, e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model;
  double temperature = 0.0;
  int timeout_ms = 8000;
  std::string api_key_env = "ADCMD_API_KEY";
  bool operator==(const AdvisorConfig&) const = default;
};

// Throws Error(invalid_config).
void validate_config(const AdvisorConfig& config);

struct PolicyProposal {
  std::int64_t id = 0;
  std::string basis;  // policy id from the library
  bt::ModulatorDelta deltas;
  std::string rationale;
  Backend source_backend = Backend::Scripted;
  std::optional<std::int64_t> in_reply_to;  // instruction id
  bool operator==(const PolicyProposal&) const = default;
};

void to_json(nlohmann::json& j, const Instruction& i);
void from_json(const nlohmann::json& j, Instruction& i);
void to_json(nlohmann::json& j, const AdvisorConfig& c);
void from_json(const nlohmann::json& j, AdvisorConfig& c);
void to_json(nlohmann::json& j, const PolicyProposal& p);
void from_json(const nlohmann::json& j, PolicyProposal& p);

}  // namespace adcmd::advisor
