#include "adcmd/loop/command_loop.hpp"

#include <chrono>

#include <fmt/format.h>

#include "adcmd/error.hpp"
#include "adcmd/rts/serialize.hpp"

namespace adcmd::loop {

namespace {

constexpr std::size_t kMaxInstructionChars = 2000;

template <typename E, std::size_t N>
std::optional<E> parse_enum(std::string_view name, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [e, text] : table)
    if (text == name) return e;
  return std::nullopt;
}

constexpr std::array<std::pair<Mode, std::string_view>, 2> kModes{{{Mode::Lockstep, "lockstep"},
                                                                    {Mode::Realtime, "realtime"}}};
constexpr std::array<std::pair<Decision, std::string_view>, 2> kDecisions{{{Decision::Approve, "approve"},
                                                                            {Decision::Reject, "reject"}}};

Outcome outcome_of(const rts::GameState& s) {
  if (s.terminal.kind == rts::TerminalKind::Winner) return s.terminal.winner == rts::kPlayer ? Outcome::Win : Outcome::Loss;
  return Outcome::Draw;
}

int reward_of(Outcome o) { return o == Outcome::Win ? 1 : o == Outcome::Loss ? -1 : 0; }

opponent::OpponentProfile opponent_for(const SessionConfig& c) {
  return opponent::variant(opponent::OpponentPresets::builtin().at(c.opponent_difficulty), c.game.rng_seed);
}

SessionConfig effective(SessionConfig c) {
  validate_config(c);
  opponent::apply_handicap(c.game, opponent_for(c));
  return c;
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::Lockstep ? "lockstep" : "realtime"; }
std::string_view to_string(Decision d) { return d == Decision::Approve ? "approve" : "reject"; }
std::string_view to_string(Outcome o) { return o == Outcome::Win ? "win" : o == Outcome::Loss ? "loss" : "draw"; }
std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::AwaitingInitialInstruction: return "awaiting_initial_instruction";
    case Phase::AwaitingInitialDecision: return "awaiting_initial_decision";
    case Phase::Running: return "running";
    case Phase::Ended: return "ended";
  }
  return "?";
}
std::optional<Mode> parse_mode(std::string_view name) { return parse_enum(name, kModes); }
std::optional<Decision> parse_decision(std::string_view name) { return parse_enum(name, kDecisions); }

void validate_config(const SessionConfig& c) {
  if (c.opponent_difficulty < opponent::kMinDifficulty || c.opponent_difficulty > opponent::kMaxDifficulty)
    throw Error(ErrorCode::invalid_config,
                fmt::format("opponent difficulty {} outside [{}, {}]", c.opponent_difficulty,
                            opponent::kMinDifficulty, opponent::kMaxDifficulty));
  if (c.tick_rate <= 0 || c.tick_rate > 1000)
    throw Error(ErrorCode::invalid_config, fmt::format("tick rate {} outside (0, 1000]", c.tick_rate));
  rts::validate_config(c.game);
  advisor::validate_config(c.advisor);
}

void to_json(nlohmann::json& j, const SessionConfig& c) {
  j = {{"game", c.game},
       {"advisor", c.advisor},
       {"opponent_difficulty", c.opponent_difficulty},
       {"mode", to_string(c.mode)},
       {"tick_rate", c.tick_rate},
       {"auto_approve", c.auto_approve}};
}

void from_json(const nlohmann::json& j, SessionConfig& c) {
  SessionConfig d;
  try {
    if (j.contains("game")) d.game = j["game"].get<rts::GameConfig>();
    if (j.contains("advisor")) d.advisor = j["advisor"].get<advisor::AdvisorConfig>();
    d.opponent_difficulty = j.value("opponent_difficulty", d.opponent_difficulty);
    const auto mode = parse_mode(j.value("mode", std::string(to_string(d.mode))));
    if (!mode) throw Error(ErrorCode::invalid_config, "mode must be lockstep or realtime");
    d.mode = *mode;
    d.tick_rate = j.value("tick_rate", d.tick_rate);
    d.auto_approve = j.value("auto_approve", d.auto_approve);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_config, std::string("session config: ") + e.what());
  }
  c = d;
}

void to_json(nlohmann::json& j, const EpisodeResult& r) {
  j = {{"outcome", to_string(r.outcome)},
       {"reward", r.reward},
       {"ticks", r.ticks},
       {"policy_revision_count", r.policy_revision_count},
       {"instruction_count", r.instruction_count},
       {"proposals_accepted", r.proposals_accepted},
       {"proposals_rejected", r.proposals_rejected},
       {"advisor_failures", r.advisor_failures}};
}

void from_json(const nlohmann::json& j, EpisodeResult& r) {
  const std::string o = j.at("outcome").get<std::string>();
  r.outcome = o == "win" ? Outcome::Win : o == "loss" ? Outcome::Loss : Outcome::Draw;
  r.reward = j.at("reward").get<int>();
  r.ticks = j.at("ticks").get<std::int64_t>();
  r.policy_revision_count = j.at("policy_revision_count").get<int>();
  r.instruction_count = j.at("instruction_count").get<int>();
  r.proposals_accepted = j.at("proposals_accepted").get<int>();
  r.proposals_rejected = j.at("proposals_rejected").get<int>();
  r.advisor_failures = j.value("advisor_failures", 0);
}

AdvisorOutcome call_advisor(advisor::Advisor& advisor, const cos::AdvisorRequest& request) {
  AdvisorOutcome out;
  const auto started = std::chrono::steady_clock::now();
  try {
    out.proposal = advisor.adjust_policy(request);
  } catch (const Error& e) {
    out.error = e.code();
    out.message = e.what();
  } catch (const std::exception& e) {
    out.error = ErrorCode::backend_unavailable;
    out.message = e.what();
  }
  out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

CommandLoop::CommandLoop(SessionConfig config, std::unique_ptr<advisor::Advisor> advisor, std::string session_id,
                         EpisodeLog* log, const bt::PolicyLibrary& library)
    : config_(effective(std::move(config))),
      advisor_(std::move(advisor)),
      session_id_(std::move(session_id)),
      log_(log),
      library_(library),
      opponent_(opponent_for(config_)),
      state_(rts::reset(config_.game)),
      policy_(library_.instantiate(library_.default_id())),
      sampler_(rts::kPlayer) {
  if (!advisor_) advisor_ = advisor::make_advisor(config_.advisor, library_);
  emit({{"type", "header"},
        {"version", 1},
        {"session_id", session_id_},
        {"config", config_},
        {"opponent", opponent_},
        {"initial_hash", hex64(rts::state_hash(state_))}});
}

void CommandLoop::emit(nlohmann::json record) {
  if (log_ != nullptr) log_->append(record);
  if (observer_ != nullptr) observer_->on_event(record);
}

void CommandLoop::require_running(const char* what) const {
  if (phase_ == Phase::Ended || terminal()) throw Error(ErrorCode::session_ended, fmt::format("{}: episode is over", what));
  if (phase_ != Phase::Running)
    throw Error(ErrorCode::precondition, fmt::format("{}: game has not started ({})", what, to_string(phase_)));
}

advisor::PolicyProposal CommandLoop::initial_instruction(const std::string& text, advisor::Channel channel) {
  if (phase_ != Phase::AwaitingInitialInstruction && phase_ != Phase::AwaitingInitialDecision)
    throw Error(ErrorCode::precondition, "the game has already started");
  if (text.empty()) throw Error(ErrorCode::validation, "instruction text is empty");
  if (text.size() > kMaxInstructionChars)
    throw Error(ErrorCode::validation, fmt::format("instruction longer than {} characters", kMaxInstructionChars));
  mark_stale_pending("superseded");
  phase_ = Phase::AwaitingInitialInstruction;
  const advisor::Instruction instr{next_instruction_id_++, -1, text, channel};
  ++counters_.instruction_count;
  emit({{"type", "instruction"}, {"tick", -1}, {"instruction", instr}});
  const auto started = std::chrono::steady_clock::now();
  advisor::PolicyProposal p;
  try {
    p = advisor_->select_initial_policy(cos::summarize_frame(state_, rts::kPlayer), instr);
    advisor::resolve(p, policy_, library_);
  } catch (const Error& e) {
    ++counters_.advisor_failures;
    emit({{"type", "advisor_error"},
          {"tick", -1},
          {"instruction_id", instr.id},
          {"code", to_string(e.code())},
          {"message", e.what()}});
    throw;
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  p.in_reply_to = instr.id;
  p = register_proposal(std::move(p));
  emit({{"type", "proposal"}, {"tick", -1}, {"proposal", p}, {"timing", {{"latency_ms", ms}}}});
  phase_ = Phase::AwaitingInitialDecision;
  if (config_.auto_approve) decide_initial(p.id, Decision::Approve);
  return p;
}

void CommandLoop::decide_initial(std::int64_t proposal_id, Decision decision) {
  if (phase_ != Phase::AwaitingInitialDecision) throw Error(ErrorCode::precondition, "no initial proposal to decide");
  const auto it = proposals_.find(proposal_id);
  if (it == proposals_.end())
    throw Error(ErrorCode::unknown_proposal, fmt::format("no proposal {}", proposal_id));
  if (it->second.second != Status::Pending)
    throw Error(ErrorCode::stale_proposal, fmt::format("proposal {} is no longer pending", proposal_id));
  const advisor::PolicyProposal& p = it->second.first;
  emit({{"type", "decision"}, {"tick", -1}, {"proposal_id", proposal_id}, {"decision", to_string(decision)},
        {"auto", config_.auto_approve}});
  pending_id_.reset();
  if (decision == Decision::Reject) {
    it->second.second = Status::Rejected;
    ++counters_.proposals_rejected;
    phase_ = Phase::AwaitingInitialInstruction;
    return;
  }
  it->second.second = Status::Approved;
  ++counters_.proposals_accepted;
  policy_ = bt::Policy{p.basis, advisor::resolve(p, policy_, library_), 0};
  start();
}

void CommandLoop::start() {
  if (phase_ == Phase::Running || phase_ == Phase::Ended) return;
  mark_stale_pending("game started");
  phase_ = Phase::Running;
  emit({{"type", "start"}, {"tick", -1}, {"policy", policy_}});
}

const rts::TickResult& CommandLoop::advance(const nlohmann::json& timing) {
  require_running("advance");
  sampler_.observe(state_);
  const std::int64_t t = state_.tick;
  const rts::ActionSet bt_actions = bt::BehaviorTree::builtin().tick(policy_, state_, rts::kPlayer);
  const rts::ActionSet merged = rts::merge_manual_actions(bt_actions, manual_);
  const rts::ActionSet opp = opponent::opponent_actions(state_, opponent_, config_.game.rng_seed);
  digest_.add(merged);
  last_tick_ = rts::step_in_place(state_, merged, opp);

  nlohmann::json record{{"type", "tick"},
                        {"tick", t},
                        {"policy_id", policy_.policy_id},
                        {"revision", policy_.revision},
                        {"state_hash", hex64(rts::state_hash(state_))},
                        {"bt_actions", bt_actions.commands},
                        {"manual_actions", manual_.commands},
                        {"opponent_actions", opp.commands}};
  if (!last_tick_.dropped.empty()) record["dropped"] = last_tick_.dropped.size();
  if (last_tick_.reward != 0) record["reward"] = last_tick_.reward;
  if (!timing.is_null()) record["timing"] = timing;
  manual_.commands.clear();
  if (log_ != nullptr) log_->append(record);
  if (observer_ != nullptr) observer_->on_tick(state_, last_tick_);
  if (terminal()) finish();
  return last_tick_;
}

PreparedRequest CommandLoop::begin_instruction(const std::string& text, advisor::Channel channel) {
  require_running("instruction");
  if (text.empty()) throw Error(ErrorCode::validation, "instruction text is empty");
  if (text.size() > kMaxInstructionChars)
    throw Error(ErrorCode::validation, fmt::format("instruction longer than {} characters", kMaxInstructionChars));
  mark_stale_pending("superseded");
  PreparedRequest out;
  out.instruction = advisor::Instruction{next_instruction_id_++, event_tick(), text, channel};
  ++counters_.instruction_count;
  emit({{"type", "instruction"}, {"tick", event_tick()}, {"instruction", out.instruction}});
  const cos::WindowSummary window = cos::summarize_window(sampler_.window(state_), sampler_.stride());
  out.request = cos::integrate_context(window, policy_, digest_, out.instruction, library_);
  digest_ = cos::ActionDigest{};
  digest_.since_tick = state_.tick;
  return out;
}

std::optional<advisor::PolicyProposal> CommandLoop::complete_instruction(const PreparedRequest& prepared,
                                                                         const AdvisorOutcome& outcome) {
  if (phase_ == Phase::Ended) return std::nullopt;
  const std::int64_t instruction_id = prepared.instruction.id;
  if (!outcome.proposal) {
    ++counters_.advisor_failures;
    emit({{"type", "advisor_error"},
          {"tick", event_tick()},
          {"instruction_id", instruction_id},
          {"code", to_string(outcome.error.value_or(ErrorCode::backend_unavailable))},
          {"message", outcome.message},
          {"timing", {{"latency_ms", outcome.latency_ms}}}});
    return std::nullopt;
  }
  advisor::PolicyProposal p = *outcome.proposal;
  p.in_reply_to = instruction_id;
  p = register_proposal(std::move(p));
  emit({{"type", "proposal"},
        {"tick", event_tick()},
        {"proposal", p},
        {"timing", {{"latency_ms", outcome.latency_ms}}}});
  // A newer instruction has already superseded this one.
  if (instruction_id + 1 < next_instruction_id_) {
    mark_stale_pending("superseded");
    return std::nullopt;
  }
  if (config_.auto_approve) decide(p.id, Decision::Approve, true);
  return p;
}

std::optional<advisor::PolicyProposal> CommandLoop::handle_instruction(const std::string& text,
                                                                       advisor::Channel channel) {
  const PreparedRequest prepared = begin_instruction(text, channel);
  return complete_instruction(prepared, call_advisor(*advisor_, prepared.request));
}

advisor::PolicyProposal CommandLoop::register_proposal(advisor::PolicyProposal p) {
  p.id = next_proposal_id_++;
  proposals_[p.id] = {p, Status::Pending};
  pending_id_ = p.id;
  return p;
}

void CommandLoop::mark_stale_pending(const char* reason) {
  if (!pending_id_) return;
  auto& entry = proposals_.at(*pending_id_);
  if (entry.second == Status::Pending) {
    entry.second = Status::Stale;
    emit({{"type", "stale"}, {"tick", event_tick()}, {"proposal_id", *pending_id_}, {"reason", reason}});
  }
  pending_id_.reset();
}

const bt::Policy& CommandLoop::decide(std::int64_t proposal_id, Decision decision, bool automatic) {
  if (phase_ == Phase::AwaitingInitialDecision) {
    decide_initial(proposal_id, decision);
    return policy_;
  }
  const auto it = proposals_.find(proposal_id);
  if (it == proposals_.end())
    throw Error(ErrorCode::unknown_proposal, fmt::format("no proposal {}", proposal_id));
  if (it->second.second != Status::Pending)
    throw Error(ErrorCode::stale_proposal, fmt::format("proposal {} is no longer pending", proposal_id));
  require_running("decision");
  const advisor::PolicyProposal& p = it->second.first;
  bt::Policy next = policy_;
  if (decision == Decision::Approve) {
    next.modulators = advisor::resolve(p, policy_, library_);
    next.policy_id = p.basis;
    ++next.revision;
  }
  emit({{"type", "decision"},
        {"tick", event_tick()},
        {"proposal_id", proposal_id},
        {"decision", to_string(decision)},
        {"auto", automatic}});
  pending_id_.reset();
  if (decision == Decision::Reject) {
    it->second.second = Status::Rejected;
    ++counters_.proposals_rejected;
    return policy_;
  }
  it->second.second = Status::Approved;
  ++counters_.proposals_accepted;
  ++counters_.policy_revision_count;
  policy_ = std::move(next);
  emit({{"type", "policy"}, {"tick", event_tick()}, {"policy", policy_}});
  return policy_;
}

void CommandLoop::queue_manual(const rts::ActionSet& actions) {
  require_running("manual action");
  if (actions.faction != rts::kPlayer) throw Error(ErrorCode::validation, "manual actions must be for the player");
  for (rts::Command c : actions.commands) {
    c.manual = true;
    manual_.commands.push_back(c);
  }
}

std::optional<advisor::PolicyProposal> CommandLoop::pending() const {
  if (!pending_id_) return std::nullopt;
  return proposals_.at(*pending_id_).first;
}

EpisodeResult CommandLoop::result() const {
  EpisodeResult r = counters_;
  r.outcome = outcome_of(state_);
  r.reward = reward_of(r.outcome);
  r.ticks = state_.tick;
  return r;
}

EpisodeResult CommandLoop::finish() {
  if (finished_) return result();
  finished_ = true;
  mark_stale_pending("episode ended");
  phase_ = Phase::Ended;
  const EpisodeResult r = result();
  nlohmann::json record{{"type", "end"}, {"tick", event_tick()}, {"result", r}, {"final_hash", hex64(rts::state_hash(state_))}};
  if (!terminal()) record["aborted"] = true;
  emit(record);
  if (log_ != nullptr) log_->flush();
  return r;
}

std::pair<EpisodeResult, EpisodeLog> run_episode(const SessionConfig& config, const std::vector<ScriptEntry>& script,
                                                 std::unique_ptr<advisor::Advisor> advisor,
                                                 const std::optional<std::string>& initial_instruction,
                                                 bool keep_records) {
  for (std::size_t i = 1; i < script.size(); ++i)
    if (script[i].tick < script[i - 1].tick)
      throw Error(ErrorCode::precondition, fmt::format("script ticks decrease at entry {}", i));
  SessionConfig c = config;
  c.mode = Mode::Lockstep;
  EpisodeLog log;
  log.set_keep_records(keep_records);
  EpisodeResult result;
  {
    CommandLoop loop(c, std::move(advisor), "episode", &log);
    if (initial_instruction) {
      const advisor::PolicyProposal p = loop.initial_instruction(*initial_instruction);
      if (loop.phase() == Phase::AwaitingInitialDecision) loop.decide_initial(p.id, Decision::Approve);
    }
    loop.start();
    std::size_t next = 0;
    while (!loop.terminal()) {
      loop.advance();
      const std::int64_t t = loop.event_tick();
      while (next < script.size() && script[next].tick <= t && !loop.terminal()) {
        const ScriptEntry& e = script[next++];
        const auto p = loop.handle_instruction(e.text);
        if (p && e.decision && !c.auto_approve) loop.decide(p->id, *e.decision);
      }
    }
    result = loop.finish();
  }
  return {result, std::move(log)};
}

EpisodeResult play_headless(const SessionConfig& config, const bt::Policy& policy) {
  const SessionConfig c = effective(config);
  const opponent::OpponentProfile opp = opponent_for(c);
  rts::GameState s = rts::reset(c.game);
  const bt::BehaviorTree& tree = bt::BehaviorTree::builtin();
  while (s.terminal.kind == rts::TerminalKind::None) {
    const rts::ActionSet a = tree.tick(policy, s, rts::kPlayer);
    const rts::ActionSet b = opponent::opponent_actions(s, opp, c.game.rng_seed);
    rts::step_in_place(s, a, b);
  }
  EpisodeResult r;
  r.outcome = outcome_of(s);
  r.reward = reward_of(r.outcome);
  r.ticks = s.tick;
  return r;
}

ReplayReport replay(const std::vector<nlohmann::json>& records) {
  ReplayReport report;
  if (records.empty() || records.front().value("type", "") != "header")
    throw Error(ErrorCode::validation, "log does not start with a header record");
  const nlohmann::json& header = records.front();
  SessionConfig config;
  opponent::OpponentProfile profile;
  try {
    config = header.at("config").get<SessionConfig>();
    profile = header.at("opponent").get<opponent::OpponentProfile>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("bad header: ") + e.what());
  }
  const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin();
  rts::GameState s = rts::reset(config.game);
  if (hex64(rts::state_hash(s)) != header.value("initial_hash", "")) {
    report.first_mismatch = 0;
    report.detail = "initial state hash differs";
  }
  bt::Policy policy = library.instantiate(library.default_id());
  std::map<std::int64_t, advisor::PolicyProposal> proposals;
  const bt::BehaviorTree& tree = bt::BehaviorTree::builtin();

  try {
    for (std::size_t i = 1; i < records.size(); ++i) {
      const nlohmann::json& r = records[i];
      const std::string type = r.value("type", "");
      if (type == "start") {
        policy = r.at("policy").get<bt::Policy>();
      } else if (type == "proposal") {
        const auto p = r.at("proposal").get<advisor::PolicyProposal>();
        proposals[p.id] = p;
      } else if (type == "decision") {
        if (r.at("tick").get<std::int64_t>() < 0 || r.at("decision") != "approve") continue;
        const auto it = proposals.find(r.at("proposal_id").get<std::int64_t>());
        if (it == proposals.end()) throw Error(ErrorCode::validation, "decision for an unlogged proposal");
        bt::Policy next = policy;
        next.modulators = advisor::resolve(it->second, policy, library);
        next.policy_id = it->second.basis;
        ++next.revision;
        policy = next;
      } else if (type == "tick") {
        ++report.ticks_checked;
        if (report.first_mismatch) continue;
        const std::int64_t t = r.at("tick").get<std::int64_t>();
        if (t != s.tick || r.at("revision").get<int>() != policy.revision) {
          report.first_mismatch = t;
          report.detail = t != s.tick ? fmt::format("record for tick {} where tick {} was expected", t, s.tick)
                                      : fmt::format("policy revision {} where {} was re-derived",
                                                    r.at("revision").get<int>(), policy.revision);
          continue;
        }
        if (s.terminal.kind != rts::TerminalKind::None) {
          report.first_mismatch = t;
          report.detail = "tick record after the game ended";
          continue;
        }
        rts::ActionSet manual{rts::kPlayer, r.at("manual_actions").get<std::vector<rts::Command>>()};
        const rts::ActionSet a = rts::merge_manual_actions(tree.tick(policy, s, rts::kPlayer), manual);
        const rts::ActionSet b = opponent::opponent_actions(s, profile, config.game.rng_seed);
        rts::step_in_place(s, a, b);
        if (hex64(rts::state_hash(s)) == r.at("state_hash").get<std::string>()) {
          ++report.ticks_matched;
        } else {
          report.first_mismatch = t;
          report.detail = fmt::format("state hash differs after tick {}", t);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("bad log record: ") + e.what());
  }
  return report;
}

}  // namespace adcmd::loop
