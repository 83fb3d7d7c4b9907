#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>

#include "adcmd/loop/command_loop.hpp"

namespace adcmd::loop {

// Drives a CommandLoop on its own thread at the configured tick rate. All
// input goes through a serialized inbox; nothing else touches the loop.
// In realtime mode advisor calls run on a helper thread and ticks keep going;
// in lockstep mode the call is made inline and the game waits for it.
class RealtimeRunner {
 public:
  RealtimeRunner(SessionConfig config, std::unique_ptr<advisor::Advisor> advisor, std::string session_id,
                 std::unique_ptr<EpisodeLog> log);
  ~RealtimeRunner();

  RealtimeRunner(const RealtimeRunner&) = delete;
  RealtimeRunner& operator=(const RealtimeRunner&) = delete;

  // Observer callbacks run on the loop thread. Set before run().
  void set_observer(LoopObserver* observer) { observer_ = observer; }
  void run();

  // Thread-safe. Each future carries the loop's answer or its Error.
  std::future<std::int64_t> submit_chat(std::string text, advisor::Channel channel = advisor::Channel::Chat);
  std::future<bt::Policy> submit_decision(std::int64_t proposal_id, Decision decision);
  std::future<void> submit_manual(rts::ActionSet actions);
  // Starts the game with the default policy when no initial proposal was approved.
  std::future<void> submit_start();

  // Ends the episode (an unfinished one is logged as aborted), flushes the
  // log and joins the threads. Idempotent.
  void stop();
  bool finished() const;
  EpisodeResult result() const;
  Phase phase() const;
  const std::string& session_id() const { return session_id_; }
  const EpisodeLog& log() const { return *log_; }
  // The loop itself; only safe to read before run() or after stop().
  const CommandLoop& core() const { return *loop_; }
  // Blocks until the episode ends or the timeout passes.
  bool wait_finished(std::chrono::milliseconds timeout) const;

 private:
  struct Chat {
    std::string text;
    advisor::Channel channel;
    std::promise<std::int64_t> done;
  };
  struct Decide {
    std::int64_t proposal_id;
    Decision decision;
    std::promise<bt::Policy> done;
  };
  struct Manual {
    rts::ActionSet actions;
    std::promise<void> done;
  };
  struct Start {
    std::promise<void> done;
  };
  struct Reply {
    PreparedRequest prepared;
    AdvisorOutcome outcome;
  };
  struct Stop {};
  using Message = std::variant<Chat, Decide, Manual, Start, Reply, Stop>;

  void post(Message m);
  void thread_main();
  void handle(Message& m);
  void launch(PreparedRequest prepared);
  void mark_finished();
  void sync_phase();

  std::string session_id_;
  std::unique_ptr<EpisodeLog> log_;
  std::unique_ptr<CommandLoop> loop_;
  LoopObserver* observer_ = nullptr;
  std::chrono::microseconds interval_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::deque<Message> inbox_;
  bool finished_ = false;
  bool closed_ = false;  // no more messages accepted
  EpisodeResult result_;
  Phase phase_ = Phase::AwaitingInitialInstruction;

  // Loop-thread only.
  bool stopping_ = false;
  bool advisor_busy_ = false;
  std::optional<PreparedRequest> queued_;
  std::thread advisor_thread_;
  std::thread thread_;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace adcmd::loop
