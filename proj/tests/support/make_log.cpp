// Writes a short lockstep session log for the CLI tests:
//   make_log OUT.jsonl [tamper]
// With "tamper" the state hash of tick 120 is altered.

#include <cstdio>
#include <fstream>
#include <string>

#include "adcmd/loop/command_loop.hpp"
#include "adcmd/rts/maps.hpp"

int main(int argc, char** argv) {
  using namespace adcmd;
  if (argc < 2) return 2;
  const bool tamper = argc > 2 && std::string(argv[2]) == "tamper";
  loop::SessionConfig config;
  config.game = rts::default_config(3);
  config.game.tick_limit = 400;
  config.opponent_difficulty = 2;
  auto [result, log] = loop::run_episode(config, {{100, "play a sky army style", loop::Decision::Approve}});
  std::ofstream out(argv[1]);
  for (nlohmann::json r : log.records()) {
    if (tamper && r["type"] == "tick" && r["tick"] == 120) r["state_hash"] = "0000000000000000";
    out << r.dump() << "\n";
  }
  return out ? 0 : 1;
}
