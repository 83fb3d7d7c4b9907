#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "adcmd/error.hpp"
#include "adcmd/loop/command_loop.hpp"
#include "adcmd/rts/serialize.hpp"

using namespace adcmd;
using namespace adcmd::loop;

namespace {

SessionConfig lockstep(std::uint64_t seed, std::int64_t tick_limit = 3000, int difficulty = 3) {
  SessionConfig c;
  c.game = rts::default_config(seed);
  c.game.tick_limit = tick_limit;
  c.opponent_difficulty = difficulty;
  c.mode = Mode::Lockstep;
  return c;
}

std::vector<const nlohmann::json*> of_type(const EpisodeLog& log, const std::string& type) {
  std::vector<const nlohmann::json*> out;
  for (const nlohmann::json& r : log.records())
    if (r["type"] == type) out.push_back(&r);
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::io;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("adcmd_test_" + name)).string();
}

}  // namespace

TEST_CASE("no instructions: the policy never changes") {
  const auto [result, log] = run_episode(lockstep(1));
  CHECK(result.policy_revision_count == 0);
  CHECK(result.instruction_count == 0);
  for (const nlohmann::json* r : of_type(log, "tick")) REQUIRE((*r)["revision"] == 0);
  CHECK(of_type(log, "policy").empty());
  CHECK(of_type(log, "end").size() == 1);
}

TEST_CASE("one approved instruction: one revision, in force from the next tick") {
  const auto [result, log] = run_episode(lockstep(2), {{500, "play a sky army style", Decision::Approve}});
  CHECK(result.policy_revision_count == 1);
  CHECK(result.proposals_accepted == 1);
  const auto policies = of_type(log, "policy");
  REQUIRE(policies.size() == 1);
  CHECK((*policies[0])["tick"] == 500);
  const bt::Policy p = (*policies[0])["policy"].get<bt::Policy>();
  CHECK(p.revision == 1);
  const auto& w = p.modulators.composition_weights;
  CHECK(w[2] >= 2 * (w[0] + w[1]));
  for (const nlohmann::json* r : of_type(log, "tick")) {
    const std::int64_t t = (*r)["tick"];
    REQUIRE((*r)["revision"] == (t <= 500 ? 0 : 1));
  }
}

TEST_CASE("a rejected proposal leaves the policy bytes unchanged") {
  CommandLoop loop(lockstep(3), nullptr);
  loop.start();
  for (int i = 0; i < 50; ++i) loop.advance();
  const std::string before = nlohmann::json(loop.policy()).dump();
  const auto p = loop.handle_instruction("go air");
  REQUIRE(p);
  CHECK(nlohmann::json(loop.policy()).dump() == before);  // pending only
  loop.decide(p->id, Decision::Reject);
  CHECK(nlohmann::json(loop.policy()).dump() == before);
  CHECK(loop.result().proposals_rejected == 1);
  CHECK(loop.result().policy_revision_count == 0);
}

TEST_CASE("pending proposals: supersede, stale, unknown, double decision") {
  EpisodeLog log;
  CommandLoop loop(lockstep(4), nullptr, "s", &log);
  CHECK(code_of([&] { loop.begin_instruction("x"); }) == ErrorCode::precondition);
  loop.start();
  loop.advance();
  const auto first = loop.handle_instruction("armored push incoming");
  REQUIRE(first);
  CHECK(first->basis == "ranged_armored");
  CHECK(loop.pending()->id == first->id);
  const auto second = loop.handle_instruction("expand");
  REQUIRE(second);
  CHECK(code_of([&] { loop.decide(first->id, Decision::Approve); }) == ErrorCode::stale_proposal);
  CHECK(code_of([&] { loop.decide(999, Decision::Approve); }) == ErrorCode::unknown_proposal);
  loop.decide(second->id, Decision::Approve);
  CHECK(loop.policy().revision == 1);
  CHECK(loop.policy().modulators.max_bases == 3);
  CHECK(code_of([&] { loop.decide(second->id, Decision::Approve); }) == ErrorCode::stale_proposal);
  CHECK(of_type(log, "stale").size() == 1);
  CHECK(code_of([&] { loop.handle_instruction(""); }) == ErrorCode::validation);
}

TEST_CASE("instructions after the end are refused") {
  CommandLoop loop(lockstep(5, 40), nullptr);
  loop.start();
  while (!loop.terminal()) loop.advance();
  CHECK(loop.phase() == Phase::Ended);
  CHECK(loop.result().outcome == Outcome::Draw);
  CHECK(code_of([&] { loop.handle_instruction("attack now"); }) == ErrorCode::session_ended);
  CHECK(code_of([&] { loop.advance(); }) == ErrorCode::session_ended);
}

TEST_CASE("initial instruction picks the starting policy") {
  EpisodeLog log;
  CommandLoop loop(lockstep(6), nullptr, "s", &log);
  const auto p = loop.initial_instruction("rush them early");
  CHECK(p.basis == "melee_rush");
  CHECK(loop.phase() == Phase::AwaitingInitialDecision);
  loop.decide_initial(p.id, Decision::Reject);
  CHECK(loop.phase() == Phase::AwaitingInitialInstruction);
  const auto q = loop.initial_instruction("I expect armored units");
  loop.decide_initial(q.id, Decision::Approve);
  CHECK(loop.phase() == Phase::Running);
  CHECK(loop.policy().policy_id == "ranged_armored");
  CHECK(loop.policy().revision == 0);
}

TEST_CASE("identical runs give identical logs, and the log replays") {
  const std::vector<ScriptEntry> script{{200, "sky army", Decision::Approve},
                                        {900, "hello there", Decision::Approve},
                                        {1500, "attack now", Decision::Reject},
                                        {1600, "expand", std::nullopt},
                                        {1700, "more workers", Decision::Approve}};
  const auto a = run_episode(lockstep(7), script);
  const auto b = run_episode(lockstep(7), script);
  CHECK(a.second.content_hash() == b.second.content_hash());
  CHECK(a.first == b.first);
  CHECK(content_hash(a.second.records()) == a.second.content_hash());
  const ReplayReport r = replay(a.second.records());
  CHECK(r.ok());
  CHECK(r.ticks_checked == static_cast<std::size_t>(a.first.ticks));
}

TEST_CASE("log file round trip and tamper detection") {
  const std::string path = temp_path("loop.jsonl");
  {
    EpisodeLog log(path);
    CommandLoop loop(lockstep(8, 600), nullptr, "s", &log);
    loop.start();
    while (!loop.terminal()) {
      loop.advance();
      if (loop.state().tick == 100) {
        const auto p = loop.handle_instruction("melee swarm");
        loop.decide(p->id, Decision::Approve);
      }
      if (loop.state().tick == 150) {
        const rts::Unit& w = loop.state().factions[rts::kPlayer].units.front();
        loop.queue_manual(rts::ActionSet{rts::kPlayer, {rts::Command::move(w.id, {10, 10})}});
      }
    }
    CHECK(read_log(path).size() == log.size());
    CHECK(content_hash(read_log(path)) == log.content_hash());
  }
  std::vector<nlohmann::json> records = read_log(path);
  CHECK(replay(records).ok());

  // Dropping the manual action changes the game from tick 150 on.
  for (nlohmann::json& r : records)
    if (r["type"] == "tick" && r["tick"] == 150) r["manual_actions"] = nlohmann::json::array();
  const ReplayReport manual = replay(records);
  CHECK(manual.first_mismatch == 150);

  records = read_log(path);
  for (nlohmann::json& r : records)
    if (r["type"] == "tick" && r["tick"] == 321) r["state_hash"] = "0000000000000000";
  const ReplayReport tampered = replay(records);
  CHECK_FALSE(tampered.ok());
  CHECK(tampered.first_mismatch == 321);
  CHECK(tampered.ticks_matched == 321);

  CHECK(code_of([] { read_log("/nonexistent/dir/log.jsonl"); }) == ErrorCode::io);
  std::filesystem::remove(path);
}

TEST_CASE("auto-approve logs synthetic approvals") {
  SessionConfig c = lockstep(9);
  c.auto_approve = true;
  const auto [result, log] = run_episode(c, {{100, "air", std::nullopt}, {200, "hold", std::nullopt}});
  CHECK(result.policy_revision_count == 2);
  const auto decisions = of_type(log, "decision");
  REQUIRE(decisions.size() == 2);
  for (const nlohmann::json* d : decisions) CHECK((*d)["auto"] == true);
  CHECK(replay(log.records()).ok());
}

TEST_CASE("session config validation and JSON") {
  SessionConfig c = lockstep(1);
  c.opponent_difficulty = 9;
  CHECK(code_of([&] { CommandLoop loop(c, nullptr); }) == ErrorCode::invalid_config);
  c.opponent_difficulty = 2;
  c.tick_rate = 0;
  CHECK(code_of([&] { validate_config(c); }) == ErrorCode::invalid_config);
  c.tick_rate = 20;
  CHECK(nlohmann::json(c).get<SessionConfig>() == c);
  CHECK(code_of([] { run_episode(lockstep(1), {{10, "a", {}}, {5, "b", {}}}); }) == ErrorCode::precondition);
}
