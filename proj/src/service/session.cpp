#include "adcmd/service/session.hpp"

#include <algorithm>

#include "adcmd/cos/summarizer.hpp"
#include "adcmd/error.hpp"
#include "adcmd/rts/serialize.hpp"

namespace adcmd::service {

class Session::Observer : public loop::LoopObserver {
 public:
  explicit Observer(Session& s) : s_(s) {}
  void on_tick(const rts::GameState& state, const rts::TickResult&) override { s_.on_tick(state); }
  void on_event(const nlohmann::json& record) override { s_.on_event(record); }

 private:
  Session& s_;
};

Session::Session(std::string id, loop::SessionConfig config, const std::string& log_path, SessionOptions options,
                 std::unique_ptr<advisor::Advisor> advisor)
    : id_(std::move(id)), log_path_(log_path), options_(options), observer_(std::make_unique<Observer>(*this)) {
  auto log = log_path.empty() ? std::make_unique<loop::EpisodeLog>() : std::make_unique<loop::EpisodeLog>(log_path);
  if (!log_path.empty()) log->set_keep_records(false);
  runner_ = std::make_unique<loop::RealtimeRunner>(std::move(config), std::move(advisor), id_, std::move(log));
  state_ = runner_->core().state();
  policy_ = runner_->core().policy();
  runner_->set_observer(observer_.get());
}

Session::~Session() { stop(); }

void Session::start() { runner_->run(); }

void Session::stop() {
  runner_->stop();
  std::vector<std::shared_ptr<Subscriber>> subs;
  {
    std::lock_guard lock(mu_);
    subs.swap(subs_);
    client_seq_.clear();
  }
  for (const auto& s : subs) s->close();
}

bool Session::ended() const {
  std::lock_guard lock(mu_);
  return phase_ == loop::Phase::Ended;
}

loop::Phase Session::phase() const {
  std::lock_guard lock(mu_);
  return phase_;
}

std::string Session::frame(WireType type, nlohmann::json payload) {
  return nlohmann::json(WireMessage{type, id_, ++seq_, std::move(payload)}).dump();
}

void Session::broadcast(WireType type, nlohmann::json payload) {
  std::lock_guard lock(mu_);
  if (subs_.empty()) {
    ++seq_;
    return;
  }
  const std::string text = frame(type, std::move(payload));
  for (const auto& s : subs_) s->send(text);
}

void Session::reply_error(Subscriber& to, ErrorCode code, const std::string& message, std::int64_t reply_to) {
  std::lock_guard lock(mu_);
  to.send(frame(WireType::Error, {{"code", to_string(code)}, {"message", message}, {"reply_to", reply_to}}));
}

nlohmann::json Session::snapshot_locked(bool full) const {
  nlohmann::json j{{"tick", state_.tick},
                   {"phase", loop::to_string(phase_)},
                   {"policy", policy_},
                   {"pending", pending_},
                   {"snapshot", full},
                   {"state", rts::state_to_json(state_)}};
  return j;
}

nlohmann::json Session::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_locked(true);
}

nlohmann::json Session::metrics() const {
  std::lock_guard lock(mu_);
  return {{"session_id", id_},
          {"phase", loop::to_string(phase_)},
          {"tick", state_.tick},
          {"subscribers", subs_.size()},
          {"instructions", instructions_},
          {"proposals", proposals_},
          {"decisions", decisions_},
          {"advisor_failures", advisor_failures_},
          {"mean_advisor_latency_ms", latency_samples_ > 0 ? latency_ms_total_ / latency_samples_ : 0.0}};
}

void Session::subscribe(const std::shared_ptr<Subscriber>& sub) {
  std::lock_guard lock(mu_);
  sub->send(frame(WireType::StateUpdate, snapshot_locked(true)));
  if (phase_ == loop::Phase::Ended) {
    sub->send(frame(WireType::EpisodeEnd, end_));
    sub->close();
    return;
  }
  subs_.push_back(sub);
  client_seq_[sub.get()] = -1;
}

void Session::unsubscribe(const Subscriber* sub) {
  std::lock_guard lock(mu_);
  subs_.erase(std::remove_if(subs_.begin(), subs_.end(), [sub](const auto& s) { return s.get() == sub; }),
              subs_.end());
  client_seq_.erase(sub);
}

void Session::on_tick(const rts::GameState& state) {
  bool periodic = false;
  bool summary = false;
  bool metrics_due = false;
  {
    std::lock_guard lock(mu_);
    state_ = state;
    // The tick that just ran is state.tick - 1.
    const std::int64_t t = state.tick - 1;
    periodic = t % options_.state_every == 0;
    summary = t % options_.summary_every == 0;
    metrics_due = t % options_.metrics_every == 0;
  }
  if (periodic) {
    nlohmann::json payload;
    {
      std::lock_guard lock(mu_);
      payload = snapshot_locked(false);
    }
    broadcast(WireType::StateUpdate, std::move(payload));
  }
  if (summary) {
    const cos::FrameSummary f = cos::summarize_frame(state, rts::kPlayer);
    broadcast(WireType::FrameSummary, {{"tick", f.tick}, {"text", f.text}});
  }
  if (metrics_due) broadcast(WireType::Metrics, metrics());
}

void Session::on_event(const nlohmann::json& r) {
  const std::string type = r.at("type").get<std::string>();
  const std::int64_t tick = r.value("tick", std::int64_t{-1});
  const auto latency = [&r] {
    return r.contains("timing") ? r["timing"].value("latency_ms", 0.0) : 0.0;
  };
  if (type == "header" || type == "tick") return;
  if (type == "end") {
    std::vector<std::shared_ptr<Subscriber>> subs;
    {
      std::lock_guard lock(mu_);
      phase_ = loop::Phase::Ended;
      pending_ = nullptr;
      end_ = {{"result", r.at("result")}, {"final_hash", r.value("final_hash", "")},
              {"aborted", r.value("aborted", false)}, {"tick", state_.tick}};
      const std::string text = frame(WireType::EpisodeEnd, end_);
      for (const auto& s : subs_) s->send(text);
      subs.swap(subs_);
      client_seq_.clear();
    }
    for (const auto& s : subs) s->close();
    return;
  }

  if (type == "instruction") {
    {
      std::lock_guard lock(mu_);
      ++instructions_;
    }
    broadcast(WireType::ChatIn, {{"tick", tick}, {"instruction", r.at("instruction")}});
  } else if (type == "proposal") {
    {
      std::lock_guard lock(mu_);
      ++proposals_;
      latency_ms_total_ += latency();
      ++latency_samples_;
      pending_ = r.at("proposal");
      if (tick < 0) phase_ = loop::Phase::AwaitingInitialDecision;
    }
    broadcast(WireType::Proposal, {{"tick", tick}, {"proposal", r.at("proposal")}, {"latency_ms", latency()}});
  } else if (type == "decision") {
    {
      std::lock_guard lock(mu_);
      ++decisions_;
      pending_ = nullptr;
      if (tick < 0 && r.at("decision") == "reject") phase_ = loop::Phase::AwaitingInitialInstruction;
    }
    broadcast(WireType::Decision, {{"tick", tick},
                                   {"proposal_id", r.at("proposal_id")},
                                   {"decision", r.at("decision")},
                                   {"auto", r.value("auto", false)}});
  } else if (type == "stale") {
    {
      std::lock_guard lock(mu_);
      pending_ = nullptr;
    }
    broadcast(WireType::Decision,
              {{"tick", tick}, {"proposal_id", r.at("proposal_id")}, {"decision", "stale"}, {"reason", r.at("reason")}});
  } else if (type == "advisor_error") {
    {
      std::lock_guard lock(mu_);
      ++advisor_failures_;
      if (tick < 0) phase_ = loop::Phase::AwaitingInitialInstruction;
    }
    broadcast(WireType::Error, {{"tick", tick},
                                {"code", r.at("code")},
                                {"message", r.at("message")},
                                {"instruction_id", r.at("instruction_id")},
                                {"source", "advisor"}});
  } else if (type == "start" || type == "policy") {
    std::lock_guard lock(mu_);
    policy_ = r.at("policy").get<bt::Policy>();
    phase_ = loop::Phase::Running;
  }

  // Every event is followed by a fresh state_update. An approval is
  // followed by its start or policy record, which sends the update.
  if (type == "decision" && r.at("decision") == "approve") return;
  nlohmann::json payload;
  {
    std::lock_guard lock(mu_);
    payload = snapshot_locked(false);
  }
  broadcast(WireType::StateUpdate, std::move(payload));
}

void Session::handle_client(std::string_view text, const std::shared_ptr<Subscriber>& from) {
  std::int64_t seq = -1;
  try {
    const WireMessage m = parse_wire(text);
    seq = m.seq;
    {
      std::lock_guard lock(mu_);
      auto it = client_seq_.find(from.get());
      if (it != client_seq_.end()) {
        if (m.seq <= it->second)
          throw Error(ErrorCode::validation, "seq " + std::to_string(m.seq) + " is not above the last one received");
        it->second = m.seq;
      }
    }
    const nlohmann::json& p = m.payload;
    switch (m.type) {
      case WireType::ChatIn: {
        if (!p.contains("text") || !p["text"].is_string()) throw Error(ErrorCode::validation, "chat_in needs text");
        auto channel = advisor::parse_channel(p.value("channel", std::string("chat")));
        if (!channel) throw Error(ErrorCode::validation, "channel must be chat or transcript");
        runner_->submit_chat(p["text"].get<std::string>(), *channel).get();
        break;
      }
      case WireType::Decision: {
        const auto d = loop::parse_decision(p.value("decision", std::string()));
        if (!d) throw Error(ErrorCode::validation, "decision must be approve or reject");
        const nlohmann::json id = p.value("proposal_id", nlohmann::json());
        if (id.is_null()) {
          // No proposal: approve starts the game with the default policy.
          if (*d != loop::Decision::Approve) throw Error(ErrorCode::validation, "nothing to reject");
          runner_->submit_start().get();
        } else {
          if (!id.is_number_integer()) throw Error(ErrorCode::validation, "proposal_id must be an integer");
          runner_->submit_decision(id.get<std::int64_t>(), *d).get();
        }
        break;
      }
      case WireType::ManualAction: {
        if (!p.contains("commands") || !p["commands"].is_array())
          throw Error(ErrorCode::validation, "manual_action needs a commands array");
        rts::ActionSet actions{rts::kPlayer, {}};
        try {
          actions.commands = p["commands"].get<std::vector<rts::Command>>();
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::validation, std::string("bad command: ") + e.what());
        }
        runner_->submit_manual(actions).get();
        std::int64_t tick = 0;
        {
          std::lock_guard lock(mu_);
          tick = state_.tick;
        }
        broadcast(WireType::ManualAction, {{"tick", tick}, {"commands", actions.commands}});
        break;
      }
      default:
        throw Error(ErrorCode::validation, std::string("clients may not send ") + std::string(to_string(m.type)));
    }
  } catch (const Error& e) {
    reply_error(*from, e.code(), e.what(), seq);
  } catch (const std::exception& e) {
    reply_error(*from, ErrorCode::session_ended, e.what(), seq);
  }
}

}  // namespace adcmd::service
