#include "adcmd/loop/realtime.hpp"

#include "adcmd/error.hpp"

namespace adcmd::loop {

namespace {

using Clock = std::chrono::steady_clock;

// Errors raised by the request itself go back to the caller; advisor
// failures are already in the log and the caller only needs the id.
bool caller_error(ErrorCode c) {
  return c == ErrorCode::validation || c == ErrorCode::precondition || c == ErrorCode::session_ended;
}

template <typename T>
void fail(std::promise<T>& p, ErrorCode code, const char* what) {
  p.set_exception(std::make_exception_ptr(Error(code, what)));
}

}  // namespace

RealtimeRunner::RealtimeRunner(SessionConfig config, std::unique_ptr<advisor::Advisor> advisor,
                               std::string session_id, std::unique_ptr<EpisodeLog> log)
    : session_id_(std::move(session_id)), log_(log ? std::move(log) : std::make_unique<EpisodeLog>()) {
  loop_ = std::make_unique<CommandLoop>(std::move(config), std::move(advisor), session_id_, log_.get());
  interval_ = std::chrono::microseconds(1'000'000 / loop_->config().tick_rate);
}

RealtimeRunner::~RealtimeRunner() { stop(); }

void RealtimeRunner::run() {
  if (thread_.joinable()) return;
  loop_->set_observer(observer_);
  thread_ = std::thread([this] { thread_main(); });
}

void RealtimeRunner::post(Message m) {
  {
    std::lock_guard lock(mu_);
    if (!closed_) {
      inbox_.push_back(std::move(m));
      cv_.notify_all();
      return;
    }
  }
  std::visit(
      [](auto& msg) {
        if constexpr (requires { msg.done; }) fail(msg.done, ErrorCode::session_ended, "session is closed");
      },
      m);
}

std::future<std::int64_t> RealtimeRunner::submit_chat(std::string text, advisor::Channel channel) {
  Chat m{std::move(text), channel, {}};
  auto f = m.done.get_future();
  post(std::move(m));
  return f;
}

std::future<bt::Policy> RealtimeRunner::submit_decision(std::int64_t proposal_id, Decision decision) {
  Decide m{proposal_id, decision, {}};
  auto f = m.done.get_future();
  post(std::move(m));
  return f;
}

std::future<void> RealtimeRunner::submit_manual(rts::ActionSet actions) {
  Manual m{std::move(actions), {}};
  auto f = m.done.get_future();
  post(std::move(m));
  return f;
}

std::future<void> RealtimeRunner::submit_start() {
  Start m;
  auto f = m.done.get_future();
  post(std::move(m));
  return f;
}

void RealtimeRunner::stop() {
  if (thread_.joinable()) {
    post(Stop{});
    thread_.join();
    return;
  }
  std::lock_guard lock(mu_);
  if (closed_) return;
  closed_ = true;
  // Never ran: nothing else touches the loop.
  result_ = loop_->finish();
  log_->flush();
  finished_ = true;
  phase_ = loop_->phase();
  cv_.notify_all();
}

bool RealtimeRunner::finished() const {
  std::lock_guard lock(mu_);
  return finished_;
}

EpisodeResult RealtimeRunner::result() const {
  std::lock_guard lock(mu_);
  return result_;
}

Phase RealtimeRunner::phase() const {
  std::lock_guard lock(mu_);
  return phase_;
}

bool RealtimeRunner::wait_finished(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [this] { return finished_; });
}

void RealtimeRunner::mark_finished() {
  const EpisodeResult r = loop_->finish();
  log_->flush();
  std::lock_guard lock(mu_);
  result_ = r;
  finished_ = true;
  phase_ = loop_->phase();
  cv_.notify_all();
}

void RealtimeRunner::launch(PreparedRequest prepared) {
  advisor_busy_ = true;
  advisor::Advisor& advisor = loop_->advisor();
  advisor_thread_ = std::thread([this, &advisor, p = std::move(prepared)]() mutable {
    AdvisorOutcome outcome = call_advisor(advisor, p.request);
    post(Reply{std::move(p), std::move(outcome)});
  });
}

void RealtimeRunner::handle(Message& message) {
  std::visit(
      [this](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Stop>) {
          stopping_ = true;
        } else if constexpr (std::is_same_v<T, Reply>) {
          if (advisor_thread_.joinable()) advisor_thread_.join();
          advisor_busy_ = false;
          loop_->complete_instruction(m.prepared, m.outcome);
          if (queued_ && loop_->phase() == Phase::Running) {
            PreparedRequest next = std::move(*queued_);
            queued_.reset();
            launch(std::move(next));
          }
        } else {
          try {
            if constexpr (std::is_same_v<T, Chat>) {
              const Phase ph = loop_->phase();
              if (ph == Phase::AwaitingInitialInstruction || ph == Phase::AwaitingInitialDecision) {
                try {
                  loop_->initial_instruction(m.text, m.channel);
                } catch (const Error& e) {
                  if (caller_error(e.code())) throw;
                }
              } else if (loop_->config().mode == Mode::Lockstep) {
                loop_->handle_instruction(m.text, m.channel);
              } else {
                PreparedRequest prepared = loop_->begin_instruction(m.text, m.channel);
                if (!advisor_busy_) {
                  launch(std::move(prepared));
                } else {
                  if (queued_) {
                    AdvisorOutcome skipped;
                    skipped.error = ErrorCode::stale_proposal;
                    skipped.message = "superseded before the advisor was called";
                    loop_->complete_instruction(*queued_, skipped);
                  }
                  queued_ = std::move(prepared);
                }
              }
              sync_phase();
              m.done.set_value(loop_->last_instruction_id());
            } else if constexpr (std::is_same_v<T, Decide>) {
              bt::Policy p = loop_->decide(m.proposal_id, m.decision);
              sync_phase();
              m.done.set_value(std::move(p));
            } else if constexpr (std::is_same_v<T, Manual>) {
              loop_->queue_manual(m.actions);
              m.done.set_value();
            } else if constexpr (std::is_same_v<T, Start>) {
              if (loop_->phase() == Phase::Ended) throw Error(ErrorCode::session_ended, "episode is over");
              loop_->start();
              sync_phase();
              m.done.set_value();
            }
          } catch (...) {
            m.done.set_exception(std::current_exception());
          }
        }
      },
      message);
  sync_phase();
}

// Published before any promise is fulfilled, so callers see the new phase.
void RealtimeRunner::sync_phase() {
  std::lock_guard lock(mu_);
  phase_ = loop_->phase();
}

void RealtimeRunner::thread_main() {
  started_ = Clock::now();
  Clock::time_point next = started_;
  while (true) {
    std::deque<Message> batch;
    {
      std::unique_lock lock(mu_);
      const bool ticking = loop_->phase() == Phase::Running && !loop_->terminal();
      if (ticking)
        cv_.wait_until(lock, next, [this] { return !inbox_.empty(); });
      else
        cv_.wait(lock, [this] { return !inbox_.empty(); });
      batch.swap(inbox_);
    }
    for (Message& m : batch) handle(m);
    if (stopping_) break;

    if (loop_->phase() == Phase::Running && !loop_->terminal()) {
      const Clock::time_point now = Clock::now();
      if (now >= next) {
        const double wall_ms = std::chrono::duration<double, std::milli>(now - started_).count();
        loop_->advance({{"wall_ms", wall_ms}, {"advisor_busy", advisor_busy_}});
        next += interval_;
        // Fell behind by more than a tick: resync instead of bursting.
        if (Clock::now() > next + interval_) next = Clock::now() + interval_;
        if (loop_->terminal()) mark_finished();
        sync_phase();
      }
    } else if (loop_->phase() != Phase::Running) {
      next = Clock::now();
    }
  }
  if (advisor_thread_.joinable()) advisor_thread_.join();
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  // Anything still queued gets an answer.
  std::deque<Message> rest;
  {
    std::lock_guard lock(mu_);
    rest.swap(inbox_);
  }
  for (Message& m : rest)
    std::visit(
        [](auto& msg) {
          if constexpr (requires { msg.done; }) fail(msg.done, ErrorCode::session_ended, "session is closed");
        },
        m);
  mark_finished();
}

}  // namespace adcmd::loop
