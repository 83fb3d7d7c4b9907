#include "adcmd/eval/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/embedded_data.hpp"
#include "adcmd/error.hpp"
#include "adcmd/rts/game.hpp"
#include "adcmd/rts/maps.hpp"

namespace adcmd::eval {

namespace {

constexpr std::array<std::string_view, 4> kTagNames{"composition", "aggression", "economy", "null"};
constexpr std::array<std::string_view, 3> kWeightNames{"Melee", "Ranged", "Air"};

const std::set<std::string>& check_names() {
  static const std::set<std::string> names{"basis",           "air_dominant",       "ground_floor",
                                           "dominant",        "no_change",          "build_turrets",
                                           "threshold_at_least", "threshold_at_most", "workers_at_least",
                                           "max_bases_at_least"};
  return names;
}

constexpr int kCanonicalTicks = 600;
constexpr std::uint64_t kCanonicalSeed = 1;
constexpr int kCanonicalDifficulty = 3;

loop::Outcome outcome_for(const rts::GameState& s, int faction) {
  if (s.terminal.kind != rts::TerminalKind::Winner) return loop::Outcome::Draw;
  return s.terminal.winner == faction ? loop::Outcome::Win : loop::Outcome::Loss;
}

// Second-side seed for games where both players draw a variant.
std::uint64_t other_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

}  // namespace

std::string_view to_string(FixtureTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

std::optional<FixtureTag> parse_tag(std::string_view name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i)
    if (kTagNames[i] == name) return static_cast<FixtureTag>(i);
  return std::nullopt;
}

std::vector<InstructionFixture> load_corpus(const nlohmann::json& doc, const bt::PolicyLibrary& library) {
  if (!doc.is_object() || !doc.contains("fixtures") || !doc["fixtures"].is_array())
    throw Error(ErrorCode::invalid_config, "corpus needs a \"fixtures\" array");
  std::vector<InstructionFixture> out;
  for (const auto& f : doc["fixtures"]) {
    InstructionFixture x;
    try {
      x.text = f.at("text").get<std::string>();
      const auto tag = parse_tag(f.at("tag").get<std::string>());
      if (!tag) throw Error(ErrorCode::invalid_config, "unknown tag " + f["tag"].dump());
      x.tag = *tag;
      x.current_policy = f.value("current_policy", x.current_policy);
      x.expect = f.at("expect");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::invalid_config, std::string("bad fixture: ") + e.what());
    }
    if (x.text.empty()) throw Error(ErrorCode::invalid_config, "fixture with empty text");
    if (!library.contains(x.current_policy))
      throw Error(ErrorCode::invalid_config, "unknown policy " + x.current_policy);
    if (!x.expect.is_object() || x.expect.empty())
      throw Error(ErrorCode::invalid_config, "fixture \"" + x.text + "\" has no checks");
    for (const auto& [k, v] : x.expect.items())
      if (check_names().count(k) == 0) throw Error(ErrorCode::invalid_config, "unknown check " + k);
    out.push_back(std::move(x));
  }
  return out;
}

const std::vector<InstructionFixture>& builtin_corpus() {
  static const std::vector<InstructionFixture> corpus =
      load_corpus(nlohmann::json::parse(embedded::kInstructionCorpus));
  return corpus;
}

std::string check_fixture(const InstructionFixture& fixture, const advisor::PolicyProposal& proposal,
                          const bt::PolicyLibrary& library) {
  const bt::Policy current = library.instantiate(fixture.current_policy);
  bt::ModulatorSet m;
  try {
    m = advisor::resolve(proposal, current, library);
  } catch (const Error& e) {
    return std::string("unusable proposal: ") + e.what();
  }
  const auto& w = m.composition_weights;
  for (const auto& [k, v] : fixture.expect.items()) {
    bool ok = true;
    if (k == "basis") {
      ok = proposal.basis == v.get<std::string>();
    } else if (k == "air_dominant") {
      ok = (w[2] > w[0] + w[1]) == v.get<bool>();
    } else if (k == "ground_floor") {
      ok = (w[0] + w[1] > 0) == v.get<bool>();
    } else if (k == "dominant") {
      const auto it = std::find(kWeightNames.begin(), kWeightNames.end(), v.get<std::string>());
      if (it == kWeightNames.end()) return "unknown weight " + v.dump();
      const auto i = static_cast<std::size_t>(it - kWeightNames.begin());
      for (std::size_t j = 0; j < 3; ++j)
        if (j != i && w[j] >= w[i]) ok = false;
    } else if (k == "no_change") {
      ok = (m == current.modulators) == v.get<bool>();
    } else if (k == "build_turrets") {
      ok = m.build_turrets == v.get<bool>();
    } else if (k == "threshold_at_least") {
      ok = m.attack_supply_threshold >= v.get<int>();
    } else if (k == "threshold_at_most") {
      ok = m.attack_supply_threshold <= v.get<int>();
    } else if (k == "workers_at_least") {
      ok = m.worker_target_per_base >= v.get<int>();
    } else if (k == "max_bases_at_least") {
      ok = m.max_bases >= v.get<int>();
    }
    if (!ok) return k + " " + v.dump();
  }
  return "";
}

cos::AdvisorRequest canonical_request(const std::string& text, const std::string& policy_id,
                                      const bt::PolicyLibrary& library) {
  const bt::Policy policy = library.instantiate(policy_id);
  rts::GameConfig config = rts::default_config(kCanonicalSeed);
  const opponent::OpponentProfile opp =
      opponent::variant(opponent::OpponentPresets::builtin().at(kCanonicalDifficulty), kCanonicalSeed);
  opponent::apply_handicap(config, opp);
  rts::GameState s = rts::reset(config);
  cos::WindowSampler sampler(rts::kPlayer);
  cos::ActionDigest digest;
  while (s.tick < kCanonicalTicks && s.terminal.kind == rts::TerminalKind::None) {
    sampler.observe(s);
    const rts::ActionSet a = bt::tick(policy, s, rts::kPlayer);
    digest.add(a);
    rts::step_in_place(s, a, opponent::opponent_actions(s, opp, kCanonicalSeed));
  }
  const cos::WindowSummary window = cos::summarize_window(sampler.window(s));
  const advisor::Instruction instruction{1, s.tick, text, advisor::Channel::Chat};
  return cos::integrate_context(window, policy, digest, instruction, library);
}

FollowingReport score_instruction_following(const std::vector<InstructionFixture>& corpus, advisor::Advisor& advisor,
                                            const bt::PolicyLibrary& library) {
  if (corpus.empty()) throw Error(ErrorCode::precondition, "empty instruction corpus");
  FollowingReport report;
  double total_ms = 0;
  for (const InstructionFixture& f : corpus) {
    FixtureResult r{f.text, f.tag, false, "", 0};
    const cos::AdvisorRequest request = canonical_request(f.text, f.current_policy, library);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const advisor::PolicyProposal p = advisor.adjust_policy(request);
      r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      r.detail = check_fixture(f, p, library);
      r.matched = r.detail.empty();
    } catch (const Error& e) {
      r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      r.detail = fmt::format("advisor {}: {}", to_string(e.code()), e.what());
    }
    total_ms += r.latency_ms;
    report.matched += r.matched ? 1 : 0;
    report.results.push_back(std::move(r));
  }
  report.rate = static_cast<double>(report.matched) / static_cast<double>(corpus.size());
  report.mean_latency_ms = total_ms / static_cast<double>(corpus.size());
  return report;
}

void Tally::add(loop::Outcome outcome) {
  switch (outcome) {
    case loop::Outcome::Win: ++wins; break;
    case loop::Outcome::Loss: ++losses; break;
    case loop::Outcome::Draw: ++draws; break;
  }
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  threads = std::min(threads, std::max(n, 1));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

EvalReport run_batch(const BatchSpec& spec) {
  if (spec.seeds < 1) throw Error(ErrorCode::precondition, fmt::format("seeds must be at least 1, got {}", spec.seeds));
  if (spec.difficulties.empty()) throw Error(ErrorCode::precondition, "no difficulty to evaluate");
  const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin();
  if (!library.contains(spec.policy)) throw Error(ErrorCode::invalid_config, "unknown policy " + spec.policy);
  // Scripted episodes go through the command loop, which starts from the
  // library default.
  if (!spec.script.empty() && spec.policy != library.default_id())
    throw Error(ErrorCode::invalid_config, "a script runs from the default policy " + library.default_id());
  for (int d : spec.difficulties) (void)opponent::OpponentPresets::builtin().at(d);
  if (spec.tick_limit && *spec.tick_limit < 1) throw Error(ErrorCode::invalid_config, "tick limit must be positive");

  const bt::Policy policy = library.instantiate(spec.policy);
  const int per = spec.seeds;
  const int n = static_cast<int>(spec.difficulties.size()) * per;
  std::vector<loop::EpisodeResult> results(static_cast<std::size_t>(n));
  parallel_for(n, spec.threads, [&](int i) {
    loop::SessionConfig c;
    c.game = rts::default_config(spec.first_seed + static_cast<std::uint64_t>(i % per));
    if (spec.tick_limit) c.game.tick_limit = *spec.tick_limit;
    c.opponent_difficulty = spec.difficulties[static_cast<std::size_t>(i / per)];
    c.auto_approve = true;
    results[static_cast<std::size_t>(i)] =
        spec.script.empty() ? loop::play_headless(c, policy)
                            : loop::run_episode(c, spec.script, nullptr, std::nullopt, false).first;
  });

  EvalReport report;
  report.first_seed = spec.first_seed;
  report.seeds = per;
  for (std::size_t k = 0; k < spec.difficulties.size(); ++k) {
    BatchRow row{spec.difficulties[k], spec.policy, per, {}, 0};
    double ticks = 0;
    for (int s = 0; s < per; ++s) {
      const loop::EpisodeResult& r = results[k * static_cast<std::size_t>(per) + static_cast<std::size_t>(s)];
      row.tally.add(r.outcome);
      ticks += static_cast<double>(r.ticks);
    }
    row.mean_ticks = ticks / per;
    report.rows.push_back(row);
  }
  return report;
}

std::string to_csv(const EvalReport& report) {
  std::string out = fmt::format("# {}\n", kProxyNotice);
  out += "difficulty,policy,seeds,wins,losses,draws,rate\n";
  for (const BatchRow& r : report.rows)
    out += fmt::format("{},{},{},{},{},{},{:.4f}\n", r.difficulty, r.policy, r.seeds, r.tally.wins, r.tally.losses,
                       r.tally.draws, r.tally.rate());
  return out;
}

std::string to_text(const EvalReport& report) {
  std::string out = fmt::format("{}\nseeds {}..{}\n\n", kProxyNotice, report.first_seed,
                                report.first_seed + static_cast<std::uint64_t>(report.seeds) - 1);
  out += fmt::format("{:>10}  {:<16} {:>5} {:>5} {:>5}  {:>6}  {:>8}\n", "difficulty", "policy", "win", "loss", "draw",
                     "rate", "ticks");
  for (const BatchRow& r : report.rows)
    out += fmt::format("{:>10}  {:<16} {:>5} {:>5} {:>5}  {:>6.3f}  {:>8.0f}\n", r.difficulty, r.policy, r.tally.wins,
                       r.tally.losses, r.tally.draws, r.tally.rate(), r.mean_ticks);
  if (report.following) {
    const FollowingReport& f = *report.following;
    out += fmt::format("\ninstruction following {}/{} ({:.3f}), mean advisor latency {:.2f} ms\n", f.matched,
                       f.results.size(), f.rate, f.mean_latency_ms);
    for (const FixtureResult& r : f.results)
      if (!r.matched) out += fmt::format("  miss [{}] \"{}\": {}\n", to_string(r.tag), r.text, r.detail);
  }
  return out;
}

loop::Outcome play_match(std::uint64_t seed, const bt::Policy& player, const opponent::OpponentProfile& profile) {
  rts::GameConfig config = rts::default_config(seed);
  opponent::apply_handicap(config, profile);
  rts::GameState s = rts::reset(config);
  const bt::BehaviorTree& tree = bt::BehaviorTree::builtin();
  while (s.terminal.kind == rts::TerminalKind::None) {
    const rts::ActionSet a = tree.tick(player, s, rts::kPlayer);
    rts::step_in_place(s, a, opponent::opponent_actions(s, profile, seed));
  }
  return outcome_for(s, rts::kPlayer);
}

Tally mirror_match(const std::string& policy, int seeds, std::uint64_t first_seed, int threads) {
  if (seeds < 1) throw Error(ErrorCode::precondition, "seeds must be at least 1");
  const bt::Policy p = bt::PolicyLibrary::builtin().instantiate(policy);
  opponent::OpponentProfile twin;
  twin.name = policy;
  twin.income_permille = 1000;
  twin.reaction_ticks = 1;
  twin.attack_threshold = p.modulators.attack_supply_threshold;
  twin.worker_target = p.modulators.worker_target_per_base;
  twin.composition_weights = p.modulators.composition_weights;
  twin.max_bases = p.modulators.max_bases;
  twin.build_turrets = p.modulators.build_turrets;
  std::vector<loop::Outcome> out(static_cast<std::size_t>(seeds));
  parallel_for(seeds, threads, [&](int i) {
    out[static_cast<std::size_t>(i)] = play_match(first_seed + static_cast<std::uint64_t>(i), p, twin);
  });
  Tally t;
  for (loop::Outcome o : out) t.add(o);
  return t;
}

loop::Outcome play_opponents(std::uint64_t seed, int a, int b) {
  const auto& presets = opponent::OpponentPresets::builtin();
  const opponent::OpponentProfile pa = opponent::variant(presets.at(a), seed);
  const opponent::OpponentProfile pb = opponent::variant(presets.at(b), other_seed(seed));
  rts::GameConfig config = rts::default_config(seed);
  opponent::apply_handicap(config, pa, rts::kPlayer);
  opponent::apply_handicap(config, pb, rts::kOpponent);
  rts::GameState s = rts::reset(config);
  while (s.terminal.kind == rts::TerminalKind::None) {
    const rts::ActionSet x = opponent::opponent_actions(s, pa, seed, rts::kPlayer);
    const rts::ActionSet y = opponent::opponent_actions(s, pb, other_seed(seed), rts::kOpponent);
    rts::step_in_place(s, x, y);
  }
  return outcome_for(s, rts::kPlayer);
}

}  // namespace adcmd::eval
