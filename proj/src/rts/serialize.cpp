#include "adcmd/rts/serialize.hpp"

#include <charconv>

#include <fmt/format.h>

#include "adcmd/error.hpp"

namespace adcmd {

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace adcmd

namespace adcmd::rts {

namespace {

// Hand-rolled writer: the state is serialized every tick for hashing, and
// building an nlohmann tree each time is several times slower. Keys are
// emitted in sorted order by construction.
class Writer {
 public:
  explicit Writer(std::string& out) : out_(out) {}

  void raw(std::string_view s) { out_.append(s); }
  void key(std::string_view k) {
    out_.push_back('"');
    out_.append(k);
    out_.append("\":");
  }
  void integer(std::int64_t v) {
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out_.append(buf, end);
  }
  void str(std::string_view s) {
    out_.push_back('"');
    out_.append(s);
    out_.push_back('"');
  }
  void boolean(bool b) { out_.append(b ? "true" : "false"); }
  void cell(Cell c) {
    out_.push_back('[');
    integer(c.x);
    out_.push_back(',');
    integer(c.y);
    out_.push_back(']');
  }

 private:
  std::string& out_;
};

std::string_view order_name(OrderKind k) {
  switch (k) {
    case OrderKind::None: return "none";
    case OrderKind::Move: return "move";
    case OrderKind::Attack: return "attack";
    case OrderKind::Harvest: return "harvest";
  }
  return "?";
}

std::string_view terminal_name(TerminalKind k) {
  switch (k) {
    case TerminalKind::None: return "none";
    case TerminalKind::Winner: return "winner";
    case TerminalKind::Draw: return "draw";
  }
  return "?";
}

void write_unit(Writer& w, const Unit& u) {
  w.raw("{");
  w.key("harvest_progress");
  w.integer(u.harvest_progress);
  w.raw(",");
  w.key("hp");
  w.integer(u.hp);
  w.raw(",");
  w.key("id");
  w.integer(u.id);
  w.raw(",");
  w.key("kind");
  w.str(to_string(u.kind));
  w.raw(",");
  w.key("move_cooldown");
  w.integer(u.move_cooldown);
  w.raw(",");
  w.key("order");
  w.raw("{");
  w.key("kind");
  w.str(order_name(u.order.kind));
  w.raw(",");
  w.key("manual");
  w.boolean(u.order.manual);
  w.raw(",");
  w.key("node");
  w.integer(u.order.node);
  w.raw(",");
  w.key("target");
  w.cell(u.order.target);
  w.raw("},");
  w.key("position");
  w.cell(u.position);
  w.raw("}");
}

void write_building(Writer& w, const Building& b) {
  w.raw("{");
  w.key("construction_remaining");
  w.integer(b.construction_remaining);
  w.raw(",");
  w.key("hp");
  w.integer(b.hp);
  w.raw(",");
  w.key("id");
  w.integer(b.id);
  w.raw(",");
  w.key("kind");
  w.str(to_string(b.kind));
  w.raw(",");
  w.key("position");
  w.cell(b.position);
  w.raw(",");
  w.key("queue");
  w.raw("[");
  for (std::size_t i = 0; i < b.production_queue.size(); ++i) {
    if (i) w.raw(",");
    w.raw("{");
    w.key("kind");
    w.str(to_string(b.production_queue[i].kind));
    w.raw(",");
    w.key("ticks");
    w.integer(b.production_queue[i].ticks_remaining);
    w.raw("}");
  }
  w.raw("]}");
}

void write_faction(Writer& w, const FactionState& f) {
  w.raw("{");
  w.key("buildings");
  w.raw("[");
  for (std::size_t i = 0; i < f.buildings.size(); ++i) {
    if (i) w.raw(",");
    write_building(w, f.buildings[i]);
  }
  w.raw("],");
  const std::pair<std::string_view, std::int64_t> scalars[] = {
      {"gas", f.gas},
      {"income_permille", f.income_permille},
      {"mined_gas", f.mined_gas},
      {"mined_minerals", f.mined_minerals},
      {"minerals", f.minerals},
      {"spent_gas", f.spent_gas},
      {"spent_minerals", f.spent_minerals},
      {"supply_cap", f.supply_cap},
      {"supply_used", f.supply_used},
  };
  for (const auto& [k, v] : scalars) {
    w.key(k);
    w.integer(v);
    w.raw(",");
  }
  w.key("units");
  w.raw("[");
  for (std::size_t i = 0; i < f.units.size(); ++i) {
    if (i) w.raw(",");
    write_unit(w, f.units[i]);
  }
  w.raw("]}");
}

}  // namespace

std::string to_canonical_json(const GameState& s) {
  std::string out;
  out.reserve(4096 + 160 * (s.factions[0].units.size() + s.factions[1].units.size()));
  Writer w(out);
  w.raw("{");
  w.key("base_sites");
  w.raw("[");
  for (std::size_t i = 0; i < s.base_sites.size(); ++i) {
    if (i) w.raw(",");
    w.cell(s.base_sites[i]);
  }
  w.raw("],");
  w.key("factions");
  w.raw("[");
  write_faction(w, s.factions[0]);
  w.raw(",");
  write_faction(w, s.factions[1]);
  w.raw("],");
  w.key("height");
  w.integer(s.height);
  w.raw(",");
  w.key("next_id");
  w.integer(s.next_id);
  w.raw(",");
  w.key("resource_nodes");
  w.raw("[");
  for (std::size_t i = 0; i < s.resource_nodes.size(); ++i) {
    const ResourceNode& n = s.resource_nodes[i];
    if (i) w.raw(",");
    w.raw("{");
    w.key("amount");
    w.integer(n.amount);
    w.raw(",");
    w.key("id");
    w.integer(n.id);
    w.raw(",");
    w.key("kind");
    w.str(to_string(n.kind));
    w.raw(",");
    w.key("position");
    w.cell(n.position);
    w.raw("}");
  }
  w.raw("],");
  w.key("terminal");
  w.raw("{");
  w.key("kind");
  w.str(terminal_name(s.terminal.kind));
  w.raw(",");
  w.key("winner");
  w.integer(s.terminal.winner);
  w.raw("},");
  w.key("tick");
  w.integer(s.tick);
  w.raw(",");
  w.key("tick_limit");
  w.integer(s.tick_limit);
  w.raw(",");
  w.key("width");
  w.integer(s.width);
  w.raw("}");
  return out;
}

std::uint64_t state_hash(const GameState& state) { return fnv1a64(to_canonical_json(state)); }

nlohmann::json state_to_json(const GameState& state) { return nlohmann::json::parse(to_canonical_json(state)); }

void to_json(nlohmann::json& j, const Cell& c) { j = nlohmann::json::array({c.x, c.y}); }

void from_json(const nlohmann::json& j, Cell& c) {
  if (j.is_array() && j.size() == 2) {
    c.x = j.at(0).get<int>();
    c.y = j.at(1).get<int>();
  } else if (j.is_object()) {
    c.x = j.at("x").get<int>();
    c.y = j.at("y").get<int>();
  } else {
    throw Error(ErrorCode::validation, "cell must be [x, y] or {\"x\":..,\"y\":..}");
  }
}

void to_json(nlohmann::json& j, const Command& c) {
  j = nlohmann::json::object();
  j["kind"] = std::string(to_string(c.kind));
  switch (c.kind) {
    case CommandKind::BuildUnit:
      j["actor"] = c.actor;
      j["unit"] = std::string(to_string(c.unit_kind));
      break;
    case CommandKind::BuildStructure:
      j["building"] = std::string(to_string(c.building_kind));
      j["cell"] = c.cell;
      break;
    case CommandKind::AssignWorker:
      j["actor"] = c.actor;
      j["node"] = c.target;
      break;
    case CommandKind::Move:
    case CommandKind::Attack:
      j["actor"] = c.actor;
      j["cell"] = c.cell;
      break;
    case CommandKind::Stop:
      j["actor"] = c.actor;
      break;
  }
  if (c.manual) j["manual"] = true;
}

void from_json(const nlohmann::json& j, Command& c) {
  auto kind = parse_command_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::validation, "unknown command kind " + j.at("kind").dump());
  c = Command{};
  c.kind = *kind;
  c.actor = j.value("actor", EntityId{0});
  c.manual = j.value("manual", false);
  if (j.contains("cell")) c.cell = j.at("cell").get<Cell>();
  if (j.contains("node")) c.target = j.at("node").get<EntityId>();
  if (j.contains("unit")) {
    auto u = parse_unit_kind(j.at("unit").get<std::string>());
    if (!u) throw Error(ErrorCode::validation, "unknown unit kind");
    c.unit_kind = *u;
  }
  if (j.contains("building")) {
    auto b = parse_building_kind(j.at("building").get<std::string>());
    if (!b) throw Error(ErrorCode::validation, "unknown building kind");
    c.building_kind = *b;
  }
}

void to_json(nlohmann::json& j, const ActionSet& a) {
  j = nlohmann::json{{"faction", a.faction}, {"commands", a.commands}};
}

void from_json(const nlohmann::json& j, ActionSet& a) {
  a.faction = j.value("faction", 0);
  a.commands = j.value("commands", std::vector<Command>{});
}

void to_json(nlohmann::json& j, const Event& e) {
  j = nlohmann::json{{"kind", std::string(to_string(e.kind))}, {"faction", e.faction}, {"id", e.id}};
}

void to_json(nlohmann::json& j, const DroppedCommand& d) {
  j = nlohmann::json{{"faction", d.faction}, {"command", d.command}, {"reason", d.reason}};
}

void to_json(nlohmann::json& j, const Terminal& t) {
  j = nlohmann::json{{"kind", std::string(terminal_name(t.kind))}, {"winner", t.winner}};
}

void to_json(nlohmann::json& j, const ResourceSpec& r) {
  j = nlohmann::json{{"cell", r.cell}, {"kind", std::string(to_string(r.kind))}, {"amount", r.amount}};
}

void from_json(const nlohmann::json& j, ResourceSpec& r) {
  r.cell = j.at("cell").get<Cell>();
  auto kind = parse_resource_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::invalid_config, "unknown resource kind");
  r.kind = *kind;
  r.amount = j.at("amount").get<int>();
}

void to_json(nlohmann::json& j, const GameConfig& g) {
  j = nlohmann::json{{"map_width", g.map_width},
                     {"map_height", g.map_height},
                     {"starting_workers", g.starting_workers},
                     {"starting_base_hp", g.starting_base_hp},
                     {"starting_minerals", g.starting_minerals},
                     {"starting_gas", g.starting_gas},
                     {"start_locations", g.start_locations},
                     {"expansion_sites", g.expansion_sites},
                     {"resource_layout", g.resource_layout},
                     {"rng_seed", g.rng_seed},
                     {"tick_limit", g.tick_limit},
                     {"income_permille", g.income_permille}};
}

void from_json(const nlohmann::json& j, GameConfig& g) {
  GameConfig d;
  g.map_width = j.value("map_width", d.map_width);
  g.map_height = j.value("map_height", d.map_height);
  g.starting_workers = j.value("starting_workers", d.starting_workers);
  g.starting_base_hp = j.value("starting_base_hp", d.starting_base_hp);
  g.starting_minerals = j.value("starting_minerals", d.starting_minerals);
  g.starting_gas = j.value("starting_gas", d.starting_gas);
  g.start_locations = j.value("start_locations", std::vector<Cell>{});
  g.expansion_sites = j.value("expansion_sites", std::vector<Cell>{});
  g.resource_layout = j.value("resource_layout", std::vector<ResourceSpec>{});
  g.rng_seed = j.value("rng_seed", d.rng_seed);
  g.tick_limit = j.value("tick_limit", d.tick_limit);
  g.income_permille = j.value("income_permille", d.income_permille);
}

}  // namespace adcmd::rts
