#pragma once

// One live session: a RealtimeRunner plus its subscribers. Loop records are
// turned into wire frames here; the network layer only moves bytes.

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adcmd/loop/realtime.hpp"
#include "adcmd/service/wire.hpp"

namespace adcmd::service {

// A connected client. send() must not block; close() goes out after the
// frames already sent.
struct Subscriber {
  virtual ~Subscriber() = default;
  virtual void send(std::string frame) = 0;
  virtual void close() = 0;
};

struct SessionOptions {
  int state_every = 5;  // ticks between periodic state_update frames
  int summary_every = 10;
  int metrics_every = 50;
};

class Session {
 public:
  // An empty log_path keeps the log in memory only.
  Session(std::string id, loop::SessionConfig config, const std::string& log_path, SessionOptions options = {},
          std::unique_ptr<advisor::Advisor> advisor = nullptr);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void start();
  // Ends the episode (aborted if unfinished), flushes the log, closes streams.
  void stop();

  const std::string& id() const { return id_; }
  const std::string& log_path() const { return log_path_; }
  bool ended() const;
  loop::Phase phase() const;

  // The first frame a new subscriber gets is a full snapshot.
  void subscribe(const std::shared_ptr<Subscriber>& sub);
  void unsubscribe(const Subscriber* sub);

  // Handles one client frame and waits for the loop to take it. Failures
  // go back to `from` as error frames.
  void handle_client(std::string_view frame, const std::shared_ptr<Subscriber>& from);

  nlohmann::json snapshot() const;
  nlohmann::json metrics() const;
  loop::RealtimeRunner& runner() { return *runner_; }

 private:
  class Observer;

  std::string frame(WireType type, nlohmann::json payload);  // takes a seq; mu_ held
  void broadcast(WireType type, nlohmann::json payload);
  void reply_error(Subscriber& to, ErrorCode code, const std::string& message, std::int64_t reply_to);
  nlohmann::json snapshot_locked(bool full) const;
  void on_event(const nlohmann::json& record);
  void on_tick(const rts::GameState& state);

  std::string id_;
  std::string log_path_;
  SessionOptions options_;
  std::unique_ptr<Observer> observer_;
  std::unique_ptr<loop::RealtimeRunner> runner_;

  mutable std::mutex mu_;
  std::int64_t seq_ = 0;
  std::vector<std::shared_ptr<Subscriber>> subs_;
  std::map<const Subscriber*, std::int64_t> client_seq_;
  rts::GameState state_;
  bt::Policy policy_;
  loop::Phase phase_ = loop::Phase::AwaitingInitialInstruction;
  nlohmann::json pending_;  // null when nothing is pending
  nlohmann::json end_;      // episode_end payload once ended
  int instructions_ = 0;
  int proposals_ = 0;
  int decisions_ = 0;
  int advisor_failures_ = 0;
  double latency_ms_total_ = 0;
  int latency_samples_ = 0;
};

}  // namespace adcmd::service
