#include "adcmd/advisor/types.hpp"

#include <cmath>

#include <fmt/format.h>

#include "adcmd/error.hpp"

namespace adcmd::advisor {

std::string_view to_string(Channel channel) { return channel == Channel::Chat ? "chat" : "transcript"; }

std::optional<Channel> parse_channel(std::string_view name) {
  if (name == "chat") return Channel::Chat;
  if (name == "transcript") return Channel::Transcript;
  return std::nullopt;
}

std::string_view to_string(Backend backend) { return backend == Backend::Scripted ? "scripted" : "http"; }

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "scripted") return Backend::Scripted;
  if (name == "http") return Backend::Http;
  return std::nullopt;
}

void validate_config(const AdvisorConfig& c) {
  if (!std::isfinite(c.temperature) || c.temperature < 0 || c.temperature > 2)
    throw Error(ErrorCode::invalid_config, fmt::format("temperature {} outside [0, 2]", c.temperature));
  if (c.timeout_ms <= 0) throw Error(ErrorCode::invalid_config, "timeout must be positive");
  if (c.backend == Backend::Http) {
    if (c.endpoint.empty()) throw Error(ErrorCode::invalid_config, "http backend needs an endpoint URL");
    if (c.model.empty()) throw Error(ErrorCode::invalid_config, "http backend needs a model name");
    // Plain http only: the client is built without TLS. Put a local proxy in
    // front of https endpoints.
    if (c.endpoint.rfind("http://", 0) != 0)
      throw Error(ErrorCode::invalid_config, "endpoint must start with http://: " + c.endpoint);
  }
}

void to_json(nlohmann::json& j, const Instruction& i) {
  j = {{"id", i.id}, {"tick_received", i.tick_received}, {"text", i.text}, {"channel", to_string(i.channel)}};
}

void from_json(const nlohmann::json& j, Instruction& i) {
  i.id = j.at("id").get<std::int64_t>();
  i.tick_received = j.at("tick_received").get<std::int64_t>();
  i.text = j.at("text").get<std::string>();
  const auto channel = parse_channel(j.value("channel", "chat"));
  if (!channel) throw Error(ErrorCode::validation, "unknown instruction channel");
  i.channel = *channel;
}

void to_json(nlohmann::json& j, const AdvisorConfig& c) {
  j = {{"backend", to_string(c.backend)}, {"endpoint", c.endpoint},       {"model", c.model},
       {"temperature", c.temperature},    {"timeout_ms", c.timeout_ms}, {"api_key_env", c.api_key_env}};
}

void from_json(const nlohmann::json& j, AdvisorConfig& c) {
  AdvisorConfig d;
  const auto backend = parse_backend(j.value("backend", "scripted"));
  if (!backend) throw Error(ErrorCode::invalid_config, "unknown advisor backend");
  d.backend = *backend;
  d.endpoint = j.value("endpoint", d.endpoint);
  d.model = j.value("model", d.model);
  d.temperature = j.value("temperature", d.temperature);
  d.timeout_ms = j.value("timeout_ms", d.timeout_ms);
  d.api_key_env = j.value("api_key_env", d.api_key_env);
  c = d;
}

void to_json(nlohmann::json& j, const PolicyProposal& p) {
  j = {{"id", p.id},
       {"basis", p.basis},
       {"deltas", p.deltas},
       {"rationale", p.rationale},
       {"source_backend", to_string(p.source_backend)},
       {"in_reply_to", p.in_reply_to ? nlohmann::json(*p.in_reply_to) : nlohmann::json()}};
}

void from_json(const nlohmann::json& j, PolicyProposal& p) {
  p.id = j.at("id").get<std::int64_t>();
  p.basis = j.at("basis").get<std::string>();
  p.deltas = j.at("deltas").get<bt::ModulatorDelta>();
  p.rationale = j.at("rationale").get<std::string>();
  const auto backend = parse_backend(j.value("source_backend", "scripted"));
  if (!backend) throw Error(ErrorCode::validation, "unknown source_backend");
  p.source_backend = *backend;
  const auto it = j.find("in_reply_to");
  p.in_reply_to = it == j.end() || it->is_null() ? std::nullopt : std::optional(it->get<std::int64_t>());
}

}  // namespace adcmd::advisor
