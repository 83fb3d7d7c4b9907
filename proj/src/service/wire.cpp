#include "adcmd/service/wire.hpp"

#include <array>
#include <utility>

#include "adcmd/error.hpp"

namespace adcmd::service {

namespace {

constexpr std::array<std::pair<WireType, std::string_view>, 9> kNames{{
    {WireType::StateUpdate, "state_update"},
    {WireType::FrameSummary, "frame_summary"},
    {WireType::ChatIn, "chat_in"},
    {WireType::Proposal, "proposal"},
    {WireType::Decision, "decision"},
    {WireType::ManualAction, "manual_action"},
    {WireType::EpisodeEnd, "episode_end"},
    {WireType::Error, "error"},
    {WireType::Metrics, "metrics"},
}};

}  // namespace

std::string_view to_string(WireType type) {
  for (const auto& [t, name] : kNames)
    if (t == type) return name;
  return "?";
}

std::optional<WireType> parse_wire_type(std::string_view name) {
  for (const auto& [t, n] : kNames)
    if (n == name) return t;
  return std::nullopt;
}

void to_json(nlohmann::json& j, const WireMessage& m) {
  j = {{"type", to_string(m.type)}, {"session_id", m.session_id}, {"seq", m.seq}, {"payload", m.payload}};
}

WireMessage parse_wire(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::validation, "frame is not a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw Error(ErrorCode::validation, "frame has no type");
  const auto type = parse_wire_type(j["type"].get<std::string>());
  if (!type) throw Error(ErrorCode::validation, "unknown frame type " + j["type"].dump());
  if (!j.contains("seq") || !j["seq"].is_number_integer()) throw Error(ErrorCode::validation, "frame has no integer seq");
  WireMessage m;
  m.type = *type;
  m.seq = j["seq"].get<std::int64_t>();
  if (j.contains("session_id") && j["session_id"].is_string()) m.session_id = j["session_id"].get<std::string>();
  if (j.contains("payload")) {
    if (!j["payload"].is_object()) throw Error(ErrorCode::validation, "payload must be an object");
    m.payload = std::move(j["payload"]);
  }
  return m;
}

}  // namespace adcmd::service
