#include "adcmd/cos/summarizer.hpp"

#include <fmt/format.h>

#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/error.hpp"
#include "adcmd/rts/constants.hpp"

namespace adcmd::cos {

namespace {

using rts::BuildingKind;
using rts::UnitKind;

constexpr std::string_view kTruncated = "[earlier lines omitted]\n";

bool is_army(UnitKind k) { return k != UnitKind::Worker; }

std::string side_name(int faction) { return faction == rts::kPlayer ? "player" : "opponent"; }

std::string unit_list(const std::array<int, 4>& counts, bool with_workers) {
  std::string out;
  for (UnitKind k : rts::kAllUnitKinds) {
    if (k == UnitKind::Worker && !with_workers) continue;
    if (!out.empty()) out += ", ";
    out += fmt::format("{} {}", rts::to_string(k), counts[static_cast<int>(k)]);
  }
  return out;
}

std::string building_list(const std::array<int, 6>& counts) {
  std::string out;
  for (BuildingKind k : rts::kAllBuildingKinds) {
    if (!out.empty()) out += ", ";
    out += fmt::format("{} {}", rts::to_string(k), counts[static_cast<int>(k)]);
  }
  return out;
}

std::string signed_value(std::int64_t v) { return v > 0 ? fmt::format("+{}", v) : fmt::format("{}", v); }

// Hard cap for text whose length is already bounded by construction.
std::string cap(std::string text, std::size_t budget) {
  if (text.size() > budget) text.resize(budget);
  return text;
}

std::string timeline_line(const FrameSummary& f) {
  const FrameStats& s = f.structured;
  return fmt::format("t={} army {} workers {} bases {} minerals {} gas {} enemy army {}{}\n", f.tick, s.army_supply,
                     s.units[0], s.bases, s.minerals, s.gas, s.enemy_army_supply,
                     s.under_attack ? " UNDER ATTACK" : "");
}

}  // namespace

std::vector<std::pair<std::string, std::int64_t>> FrameStats::fields() const {
  std::vector<std::pair<std::string, std::int64_t>> out{
      {"minerals", minerals},   {"gas", gas}, {"supply_used", supply_used}, {"supply_cap", supply_cap},
      {"army_supply", army_supply}, {"bases", bases},
  };
  for (UnitKind k : rts::kAllUnitKinds)
    out.emplace_back(fmt::format("units.{}", rts::to_string(k)), units[static_cast<int>(k)]);
  for (BuildingKind k : rts::kAllBuildingKinds)
    out.emplace_back(fmt::format("buildings.{}", rts::to_string(k)), buildings[static_cast<int>(k)]);
  out.emplace_back("under_construction", under_construction);
  out.emplace_back("queued_units", queued_units);
  for (UnitKind k : rts::kAllUnitKinds)
    out.emplace_back(fmt::format("enemy_units.{}", rts::to_string(k)), enemy_units[static_cast<int>(k)]);
  for (BuildingKind k : rts::kAllBuildingKinds)
    out.emplace_back(fmt::format("enemy_buildings.{}", rts::to_string(k)), enemy_buildings[static_cast<int>(k)]);
  out.emplace_back("enemy_army_supply", enemy_army_supply);
  out.emplace_back("under_attack", under_attack ? 1 : 0);
  return out;
}

FrameSummary summarize_frame(const rts::GameState& state, int faction) {
  if (faction != rts::kPlayer && faction != rts::kOpponent)
    throw Error(ErrorCode::precondition, fmt::format("faction {} out of range", faction));
  const rts::FactionState& me = state.factions[faction];
  const rts::FactionState& foe = state.factions[rts::other(faction)];

  FrameStats s;
  s.faction = faction;
  s.minerals = me.minerals;
  s.gas = me.gas;
  s.supply_used = me.supply_used;
  s.supply_cap = me.supply_cap;
  for (const rts::Unit& u : me.units) {
    ++s.units[static_cast<int>(u.kind)];
    if (is_army(u.kind)) s.army_supply += rts::stats(u.kind).supply;
  }
  for (const rts::Building& b : me.buildings) {
    ++s.buildings[static_cast<int>(b.kind)];
    if (!b.complete()) ++s.under_construction;
    s.queued_units += static_cast<int>(b.production_queue.size());
  }
  s.bases = s.buildings[static_cast<int>(BuildingKind::Base)];
  for (const rts::Unit& u : foe.units) {
    ++s.enemy_units[static_cast<int>(u.kind)];
    if (is_army(u.kind)) s.enemy_army_supply += rts::stats(u.kind).supply;
  }
  for (const rts::Building& b : foe.buildings) ++s.enemy_buildings[static_cast<int>(b.kind)];
  for (const rts::Building& b : me.buildings) {
    if (b.kind != BuildingKind::Base) continue;
    for (const rts::Unit& u : foe.units)
      if (is_army(u.kind) && rts::distance(u.position, b.position) <= bt::kDefenseRadius) s.under_attack = true;
  }

  std::string text = fmt::format("Tick {}, {} side.\n", state.tick, side_name(faction));
  text += fmt::format("Economy: {} minerals, {} gas, {} workers, base count {}.\n", s.minerals, s.gas, s.units[0], s.bases);
  text += fmt::format("Supply: {}/{}, army supply {}.\n", s.supply_used, s.supply_cap, s.army_supply);
  text += fmt::format("Army: {}.\n", unit_list(s.units, false));
  text += fmt::format("Buildings: {} ({} under construction, {} units queued).\n", building_list(s.buildings),
                      s.under_construction, s.queued_units);
  text += fmt::format("Enemy units: {}; army supply {}.\n", unit_list(s.enemy_units, true), s.enemy_army_supply);
  text += fmt::format("Enemy buildings: {}.\n", building_list(s.enemy_buildings));
  text += s.under_attack ? "Status: enemy army near one of our bases.\n" : "Status: no enemy army near our bases.\n";
  if (state.terminal.kind == rts::TerminalKind::Winner)
    text += state.terminal.winner == faction ? "Game over: we won.\n" : "Game over: we lost.\n";
  else if (state.terminal.kind == rts::TerminalKind::Draw)
    text += "Game over: draw.\n";

  return FrameSummary{state.tick, cap(std::move(text), kFrameBudget), s};
}

std::int64_t WindowSummary::delta(std::string_view field) const {
  for (const auto& [name, value] : deltas)
    if (name == field) return value;
  throw Error(ErrorCode::validation, fmt::format("no window field '{}'", field));
}

WindowSummary summarize_window(const std::vector<FrameSummary>& frames, int stride) {
  if (frames.empty()) throw Error(ErrorCode::empty_window, "window has no frames");
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].tick <= frames[i - 1].tick)
      throw Error(ErrorCode::precondition, fmt::format("frame ticks not increasing at index {}", i));

  const FrameSummary& first = frames.front();
  const FrameSummary& last = frames.back();
  WindowSummary w;
  w.first_tick = first.tick;
  w.last_tick = last.tick;
  const auto a = first.structured.fields();
  const auto b = last.structured.fields();
  for (std::size_t i = 0; i < a.size(); ++i) w.deltas.emplace_back(a[i].first, b[i].second - a[i].second);

  std::int64_t unit_delta = 0;
  for (const auto& [name, value] : w.deltas)
    if (name.rfind("units.", 0) == 0) unit_delta += value;
  w.army_growing = w.delta("army_supply") > 0;
  w.losing_units = unit_delta < 0;
  w.expanding = w.delta("bases") > 0;

  // Sections in priority order: header, trends, latest frame, changes, then
  // as much of the timeline as fits, newest lines first.
  std::string head = fmt::format("Window: ticks {}-{}, {} frames sampled every {} ticks.\n", w.first_tick,
                                 w.last_tick, frames.size(), stride);
  std::string trends;
  if (w.army_growing) trends += "army growing";
  if (w.losing_units) trends += trends.empty() ? "losing units" : ", losing units";
  if (w.expanding) trends += trends.empty() ? "expanding" : ", expanding";
  head += fmt::format("Trends: {}.\n", trends.empty() ? "steady" : trends);
  const std::string latest = "Latest frame:\n" + last.text;

  std::string changes = "Changes:";
  bool any = false;
  for (const auto& [name, value] : w.deltas) {
    if (value == 0) continue;
    const std::string item = fmt::format(" {} {}", name, signed_value(value));
    if (head.size() + latest.size() + changes.size() + item.size() + 2 > kWindowBudget) break;
    changes += item;
    any = true;
  }
  changes += any ? ".\n" : " none.\n";

  std::size_t used = head.size() + changes.size() + latest.size();
  std::vector<std::string> lines;
  bool dropped = false;
  if (frames.size() > 1) {
    used += std::string_view("Timeline:\n").size();
    for (std::size_t i = frames.size(); i-- > 0;) {
      std::string line = timeline_line(frames[i]);
      if (used + line.size() + kTruncated.size() > kWindowBudget) {
        dropped = true;
        break;
      }
      used += line.size();
      lines.push_back(std::move(line));
    }
  }
  std::string text = head + changes;
  if (!lines.empty()) {
    text += "Timeline:\n";
    if (dropped) text += kTruncated;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) text += *it;
  }
  text += latest;
  w.text = cap(std::move(text), kWindowBudget);
  return w;
}

void ActionDigest::add(const rts::ActionSet& actions) {
  for (const rts::Command& c : actions.commands) {
    ++commands[static_cast<int>(c.kind)];
    if (c.kind == rts::CommandKind::BuildUnit) ++units_ordered[static_cast<int>(c.unit_kind)];
    if (c.kind == rts::CommandKind::BuildStructure) ++structures_ordered[static_cast<int>(c.building_kind)];
  }
}

int ActionDigest::total() const {
  int n = 0;
  for (int c : commands) n += c;
  return n;
}

namespace {

std::string render_digest(const ActionDigest& d) {
  if (d.total() == 0) return fmt::format("No commands since tick {}.\n", d.since_tick);
  std::string out = fmt::format("Commands since tick {}:", d.since_tick);
  constexpr std::array<rts::CommandKind, 6> kinds{rts::CommandKind::BuildUnit, rts::CommandKind::BuildStructure,
                                                  rts::CommandKind::AssignWorker, rts::CommandKind::Move,
                                                  rts::CommandKind::Attack, rts::CommandKind::Stop};
  for (rts::CommandKind k : kinds) out += fmt::format(" {} {}", rts::to_string(k), d.commands[static_cast<int>(k)]);
  out += ".\nUnits ordered: " + unit_list(d.units_ordered, true) + ".\n";
  out += "Structures ordered: " + building_list(d.structures_ordered) + ".\n";
  return out;
}

// Everything in the prompt except the window text, split around it.
struct Frame {
  std::string before;
  std::string after;
};

Frame prompt_frame(const bt::Policy& policy, const ActionDigest& digest, const advisor::Instruction& instruction,
                   const std::vector<std::pair<std::string, std::string>>& library) {
  Frame f;
  f.before =
      "You advise the commander of one side in a real-time strategy game. A behavior tree plays the game; "
      "you choose which preset policy it follows and how to adjust its modulators.\n"
      "Reply with one fenced JSON object and nothing else inside the fence:\n"
      "```json\n"
      "{\"basis\": \"<policy id>\", \"deltas\": {<modulators to change>}, \"rationale\": \"<one sentence>\"}\n"
      "```\n"
      "Modulators: composition_weights {\"Melee\",\"Ranged\",\"Air\"} each 0-100 with a positive sum; "
      "attack_supply_threshold 0-200; worker_target_per_base 1-30; max_bases 1-4; build_turrets true/false. "
      "Omit any modulator you do not change. If basis is the current policy id the deltas apply to the current "
      "modulators, otherwise to the preset.\n\n";
  f.before += fmt::format("## Current policy\n{} (revision {})\nmodulators: {}\n\n", policy.policy_id,
                          policy.revision, nlohmann::json(policy.modulators).dump());
  f.before += "## Policy library\n";
  for (const auto& [id, description] : library) f.before += fmt::format("- {}: {}\n", id, description);
  f.before += "\n## Recent actions\n" + render_digest(digest) + "\n## Game state\n";
  f.after = fmt::format("\n## Player instruction (tick {})\n", instruction.tick_received) + instruction.text + "\n";
  return f;
}

}  // namespace

AdvisorRequest integrate_context(const WindowSummary& window, const bt::Policy& policy, const ActionDigest& digest,
                                 const advisor::Instruction& instruction, const bt::PolicyLibrary& library,
                                 std::size_t budget) {
  if (instruction.text.empty()) throw Error(ErrorCode::precondition, "instruction text is empty");
  AdvisorRequest r;
  r.window = window;
  r.current_policy = policy;
  r.last_action_digest = digest;
  r.instruction = instruction;
  for (const bt::PolicyEntry& e : library.entries()) r.policy_library_digest.emplace_back(e.id, e.description);

  const Frame f = prompt_frame(policy, digest, instruction, r.policy_library_digest);
  const std::size_t fixed = f.before.size() + f.after.size();
  if (fixed > budget)
    throw Error(ErrorCode::budget_impossible,
                fmt::format("prompt needs {} characters without any game state; budget is {}", fixed, budget));

  std::string body = window.text;
  if (!body.empty() && body.back() != '\n') body += '\n';
  if (fixed + body.size() > budget) {
    // Keep the head of the window text; cut at a line boundary when possible.
    r.window_truncated = true;
    const std::size_t room = budget - fixed;
    if (room <= kTruncated.size()) {
      body.clear();
    } else {
      body.resize(room - kTruncated.size());
      if (const auto nl = body.rfind('\n'); nl != std::string::npos) body.resize(nl + 1);
      body += kTruncated;
    }
  }
  r.rendered = f.before + body + f.after;
  return r;
}

WindowSampler::WindowSampler(int faction, int max_frames, int stride)
    : faction_(faction), max_frames_(max_frames), stride_(stride) {
  if (max_frames < 1) throw Error(ErrorCode::invalid_config, "window needs at least one frame");
  if (stride < 1) throw Error(ErrorCode::invalid_config, "window stride must be positive");
}

void WindowSampler::observe(const rts::GameState& state) {
  if (state.tick % stride_ != 0) return;
  if (!frames_.empty() && frames_.back().tick >= state.tick) return;
  frames_.push_back(summarize_frame(state, faction_));
  while (static_cast<int>(frames_.size()) > max_frames_) frames_.pop_front();
}

std::vector<FrameSummary> WindowSampler::window(const rts::GameState& now) const {
  std::vector<FrameSummary> out(frames_.begin(), frames_.end());
  if (out.empty() || out.back().tick < now.tick) out.push_back(summarize_frame(now, faction_));
  while (static_cast<int>(out.size()) > max_frames_) out.erase(out.begin());
  return out;
}

}  // namespace adcmd::cos
