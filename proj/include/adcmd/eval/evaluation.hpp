#pragma once

// Batch evaluation: win rates against the built-in opponents and
// instruction-following scores for an advisor. Both are automated proxy
// metrics, not human ratings.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adcmd/advisor/advisor.hpp"
#include "adcmd/bt/modulators.hpp"
#include "adcmd/cos/summarizer.hpp"
#include "adcmd/loop/command_loop.hpp"
#include "adcmd/opponent/opponent.hpp"

namespace adcmd::eval {

inline constexpr std::string_view kProxyNotice = "automated proxy metrics; not human ratings";

enum class FixtureTag : std::uint8_t { Composition, Aggression, Economy, Null };

std::string_view to_string(FixtureTag tag);
std::optional<FixtureTag> parse_tag(std::string_view name);

// One instruction and what an acceptable proposal must satisfy. `expect` is
// an object of checks, all of which must hold:
//   basis               proposal.basis equals this id
//   air_dominant        Air > Melee + Ranged
//   ground_floor        Melee + Ranged > 0
//   dominant            "Melee" | "Ranged" | "Air" strictly heaviest
//   no_change           resolved modulators equal the current ones
//   build_turrets       bool
//   threshold_at_least / threshold_at_most
//   workers_at_least
//   max_bases_at_least
// The checks other than basis look at the resolved modulators.
struct InstructionFixture {
  std::string text;
  FixtureTag tag = FixtureTag::Null;
  std::string current_policy = "balanced_macro";
  nlohmann::json expect = nlohmann::json::object();
};

// Throws Error(invalid_config) for unknown tags, policies or check names.
std::vector<InstructionFixture> load_corpus(const nlohmann::json& doc,
                                            const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin());
// data/instruction_corpus.json, compiled in.
const std::vector<InstructionFixture>& builtin_corpus();

// Empty when the proposal satisfies the fixture, else the first failed check.
std::string check_fixture(const InstructionFixture& fixture, const advisor::PolicyProposal& proposal,
                          const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin());

// A mid-game request: the fixture's policy plays the difficulty-3 opponent
// for 600 ticks on seed 1, then the instruction arrives.
cos::AdvisorRequest canonical_request(const std::string& text, const std::string& policy_id,
                                      const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin());

struct FixtureResult {
  std::string text;
  FixtureTag tag = FixtureTag::Null;
  bool matched = false;
  std::string detail;  // failed check or advisor error
  double latency_ms = 0;
};

struct FollowingReport {
  std::vector<FixtureResult> results;
  int matched = 0;
  double rate = 0;
  double mean_latency_ms = 0;
};

// Calls adjust_policy once per fixture. Advisor errors count as misses.
// Throws Error(precondition) for an empty corpus.
FollowingReport score_instruction_following(const std::vector<InstructionFixture>& corpus, advisor::Advisor& advisor,
                                            const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin());

struct Tally {
  int wins = 0;
  int losses = 0;
  int draws = 0;
  int games() const { return wins + losses + draws; }
  double rate() const { return games() > 0 ? static_cast<double>(wins) / games() : 0.0; }
  void add(loop::Outcome outcome);
};

struct BatchSpec {
  std::vector<int> difficulties{1, 2, 3, 4, 5, 6};
  std::string policy = "balanced_macro";
  int seeds = 50;
  std::uint64_t first_seed = 0;
  int threads = 0;  // 0: hardware concurrency
  std::optional<std::int64_t> tick_limit;
  // When set, every episode runs through the command loop with this script
  // and auto-approval, using the scripted advisor.
  std::vector<loop::ScriptEntry> script;
};

struct BatchRow {
  int difficulty = 1;
  std::string policy;
  int seeds = 0;
  Tally tally;
  double mean_ticks = 0;
};

struct EvalReport {
  std::vector<BatchRow> rows;
  std::uint64_t first_seed = 0;
  int seeds = 0;
  std::optional<FollowingReport> following;
};

// Throws Error(precondition) when seeds < 1 or no difficulty is given, and
// Error(invalid_config) for unknown policies or difficulties. The result
// depends only on `spec`, not on the thread count.
EvalReport run_batch(const BatchSpec& spec);

// Notice comment, then difficulty,policy,seeds,wins,losses,draws,rate.
std::string to_csv(const EvalReport& report);
std::string to_text(const EvalReport& report);

// Runs fn(i) for i in [0, n) on `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Player policy against an opponent profile, as-is (no seed variant).
loop::Outcome play_match(std::uint64_t seed, const bt::Policy& player, const opponent::OpponentProfile& profile);
// The same policy on both sides, both reacting every tick at full income.
Tally mirror_match(const std::string& policy, int seeds, std::uint64_t first_seed = 0, int threads = 0);
// Two built-in difficulties against each other, each playing its seed
// variant. Outcome is from `a`'s side.
loop::Outcome play_opponents(std::uint64_t seed, int a, int b);

}  // namespace adcmd::eval
