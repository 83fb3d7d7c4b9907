#pragma once

// Frames exchanged over /session/<id>/ws. docs/wire_schema.json describes
// every payload.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace adcmd::service {

enum class WireType : std::uint8_t {
  StateUpdate,
  FrameSummary,
  ChatIn,
  Proposal,
  Decision,
  ManualAction,
  EpisodeEnd,
  Error,
  Metrics,
};

std::string_view to_string(WireType type);
std::optional<WireType> parse_wire_type(std::string_view name);

struct WireMessage {
  WireType type = WireType::Error;
  std::string session_id;
  std::int64_t seq = 0;
  nlohmann::json payload = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const WireMessage& m);
// Throws Error(validation) on anything that is not a well-formed frame.
WireMessage parse_wire(std::string_view text);

}  // namespace adcmd::service
