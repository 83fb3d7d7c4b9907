#pragma once

// HTTP + web-socket front end for sessions.
//   POST /session            create; body is a partial SessionConfig
//   GET  /session/<id>       snapshot
//   GET  /session/<id>/log   the JSON Lines log, byte for byte
//   GET  /session/<id>/ws    web-socket upgrade, wire frames
//   GET  /metrics            service and per-session counters

#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>

#include "adcmd/loop/command_loop.hpp"
#include "adcmd/service/session.hpp"

namespace adcmd::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::string log_dir = "logs";
  // Base for every session. The advisor part is fixed by the operator;
  // clients can change the rest per session.
  loop::SessionConfig defaults;
  SessionOptions options;
  int threads = 4;
};

// Throws Error(invalid_config). An http advisor URL is checked for shape
// only; nothing is contacted.
void validate_config(const ServiceConfig& config);

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);

// Applies a POST /session body to the defaults. Throws Error(invalid_config).
loop::SessionConfig session_config_from(const loop::SessionConfig& defaults, const nlohmann::json& body);

class SessionService {
 public:
  explicit SessionService(ServiceConfig config);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Binds and serves on background threads. Throws Error(io) when the
  // address cannot be bound.
  void start();
  std::uint16_t port() const;
  // Returns after SIGINT/SIGTERM or request_stop().
  void wait_for_stop_signal();
  void request_stop();
  // Ends every session (unfinished ones are logged as aborted), flushes
  // logs, closes connections, joins threads. Idempotent.
  void stop();

  // Throws Error(invalid_config).
  std::string create_session(const nlohmann::json& body);
  // Throws Error(unknown_session).
  std::shared_ptr<Session> find(const std::string& id) const;
  nlohmann::json metrics() const;

  struct Impl;  // network internals

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace adcmd::service
