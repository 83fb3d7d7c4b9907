#pragma once

// The steering loop: each tick the behavior tree picks actions from the
// active policy, manual commands override it per unit, the game steps, and
// then queued input is handled. An instruction is summarized against the new
// state and sent to the advisor; its proposal waits for a decision, and an
// approved proposal becomes the policy used from the next tick on. Without an
// approval the policy never changes.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adcmd/advisor/advisor.hpp"
#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/cos/summarizer.hpp"
#include "adcmd/error.hpp"
#include "adcmd/loop/episode_log.hpp"
#include "adcmd/opponent/opponent.hpp"
#include "adcmd/rts/game.hpp"
#include "adcmd/rts/maps.hpp"

namespace adcmd::loop {

enum class Mode : std::uint8_t { Lockstep, Realtime };
enum class Decision : std::uint8_t { Approve, Reject };
enum class Outcome : std::uint8_t { Win, Loss, Draw };
enum class Phase : std::uint8_t { AwaitingInitialInstruction, AwaitingInitialDecision, Running, Ended };

std::string_view to_string(Mode mode);
std::string_view to_string(Decision decision);
std::string_view to_string(Outcome outcome);
std::string_view to_string(Phase phase);
std::optional<Mode> parse_mode(std::string_view name);
std::optional<Decision> parse_decision(std::string_view name);

struct SessionConfig {
  rts::GameConfig game = rts::default_config();
  advisor::AdvisorConfig advisor;
  int opponent_difficulty = 6;
  Mode mode = Mode::Realtime;
  int tick_rate = 10;  // ticks per second, realtime only
  bool auto_approve = false;
  bool operator==(const SessionConfig&) const = default;
};

// Throws Error(invalid_config).
void validate_config(const SessionConfig& config);

void to_json(nlohmann::json& j, const SessionConfig& c);
void from_json(const nlohmann::json& j, SessionConfig& c);

struct EpisodeResult {
  Outcome outcome = Outcome::Draw;
  int reward = 0;  // +1 win, -1 loss, 0 draw
  std::int64_t ticks = 0;
  int policy_revision_count = 0;
  int instruction_count = 0;
  int proposals_accepted = 0;
  int proposals_rejected = 0;
  int advisor_failures = 0;
  bool operator==(const EpisodeResult&) const = default;
};

void to_json(nlohmann::json& j, const EpisodeResult& r);
void from_json(const nlohmann::json& j, EpisodeResult& r);

struct ScriptEntry {
  std::int64_t tick = 0;
  std::string text;
  std::optional<Decision> decision;  // none leaves the proposal pending
};

// A request ready for the advisor, produced on the loop thread.
struct PreparedRequest {
  advisor::Instruction instruction;
  cos::AdvisorRequest request;
};

// Either a proposal or the error the advisor call ended with.
struct AdvisorOutcome {
  std::optional<advisor::PolicyProposal> proposal;
  std::optional<ErrorCode> error;
  std::string message;
  double latency_ms = 0;
};

// Runs the advisor synchronously and captures failures.
AdvisorOutcome call_advisor(advisor::Advisor& advisor, const cos::AdvisorRequest& request);

// Receives everything the loop publishes, on the loop's thread.
struct LoopObserver {
  virtual ~LoopObserver() = default;
  virtual void on_tick(const rts::GameState&, const rts::TickResult&) {}
  virtual void on_event(const nlohmann::json&) {}  // the same object the log gets
};

// Single-threaded core. Not thread-safe: one owner drives it.
class CommandLoop {
 public:
  // `log` may be null. The advisor is used for synchronous calls only.
  CommandLoop(SessionConfig config, std::unique_ptr<advisor::Advisor> advisor, std::string session_id = "episode",
              EpisodeLog* log = nullptr, const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin());

  void set_observer(LoopObserver* observer) { observer_ = observer; }

  // Pre-game dialogue. Without it start() uses the library default.
  advisor::PolicyProposal initial_instruction(const std::string& text,
                                              advisor::Channel channel = advisor::Channel::Chat);
  // Approve adopts the proposal as the starting policy (revision 0) and
  // starts the game; reject goes back to awaiting an instruction.
  void decide_initial(std::int64_t proposal_id, Decision decision);
  void start();

  // One tick: act, step, publish. `timing` goes into the tick record as is.
  // Throws Error(session_ended) after the end.
  const rts::TickResult& advance(const nlohmann::json& timing = nullptr);

  // Realtime split of handle_instruction: begin() summarizes and logs the
  // instruction; complete() turns the advisor outcome into a pending
  // proposal or a logged failure. Returns the proposal when one was created.
  PreparedRequest begin_instruction(const std::string& text, advisor::Channel channel = advisor::Channel::Chat);
  std::optional<advisor::PolicyProposal> complete_instruction(const PreparedRequest& prepared,
                                                              const AdvisorOutcome& outcome);

  // begin + synchronous advisor call + complete. Auto-approves when
  // configured.
  std::optional<advisor::PolicyProposal> handle_instruction(const std::string& text,
                                                            advisor::Channel channel = advisor::Channel::Chat);

  // Throws Error(unknown_proposal) or Error(stale_proposal).
  const bt::Policy& decide(std::int64_t proposal_id, Decision decision, bool automatic = false);

  // Manual commands for the player's units, applied on the next tick.
  void queue_manual(const rts::ActionSet& actions);

  // Logs the end record once the game is terminal. Idempotent.
  EpisodeResult finish();

  Phase phase() const { return phase_; }
  bool terminal() const { return state_.terminal.kind != rts::TerminalKind::None; }
  const rts::GameState& state() const { return state_; }
  const bt::Policy& policy() const { return policy_; }
  const SessionConfig& config() const { return config_; }
  const std::string& session_id() const { return session_id_; }
  std::optional<advisor::PolicyProposal> pending() const;
  EpisodeResult result() const;
  // The tick events are stamped with: the last completed tick, -1 before the first.
  std::int64_t event_tick() const { return state_.tick - 1; }
  advisor::Advisor& advisor() { return *advisor_; }
  std::int64_t last_instruction_id() const { return next_instruction_id_ - 1; }

 private:
  void emit(nlohmann::json record);
  void require_running(const char* what) const;
  advisor::PolicyProposal register_proposal(advisor::PolicyProposal p);
  void mark_stale_pending(const char* reason);

  SessionConfig config_;
  std::unique_ptr<advisor::Advisor> advisor_;
  std::string session_id_;
  EpisodeLog* log_;
  bt::PolicyLibrary library_;
  LoopObserver* observer_ = nullptr;

  opponent::OpponentProfile opponent_;
  rts::GameState state_;
  bt::Policy policy_;
  Phase phase_ = Phase::AwaitingInitialInstruction;
  cos::WindowSampler sampler_;
  cos::ActionDigest digest_;
  rts::ActionSet manual_;
  rts::TickResult last_tick_;

  enum class Status { Pending, Approved, Rejected, Stale };
  std::map<std::int64_t, std::pair<advisor::PolicyProposal, Status>> proposals_;
  std::optional<std::int64_t> pending_id_;
  std::int64_t next_proposal_id_ = 1;
  std::int64_t next_instruction_id_ = 1;
  EpisodeResult counters_;
  bool finished_ = false;
};

// Lockstep headless episode with the scripted decisions. Script entries must
// be in non-decreasing tick order; an entry at tick T is handled after tick T
// has been stepped, so an approval is in force from tick T+1.
std::pair<EpisodeResult, EpisodeLog> run_episode(const SessionConfig& config,
                                                 const std::vector<ScriptEntry>& script = {},
                                                 std::unique_ptr<advisor::Advisor> advisor = nullptr,
                                                 const std::optional<std::string>& initial_instruction = std::nullopt,
                                                 bool keep_records = true);

// Faster variant for batch evaluation: no log, no advisor.
EpisodeResult play_headless(const SessionConfig& config, const bt::Policy& policy);

struct ReplayReport {
  std::size_t ticks_checked = 0;
  std::size_t ticks_matched = 0;
  std::optional<std::int64_t> first_mismatch;  // tick
  std::string detail;
  bool ok() const { return !first_mismatch && ticks_checked == ticks_matched; }
};

// Re-runs a log from its header, re-deriving every policy change from the
// logged proposals and decisions and re-applying the logged manual actions,
// and compares every state hash.
ReplayReport replay(const std::vector<nlohmann::json>& records);

}  // namespace adcmd::loop
