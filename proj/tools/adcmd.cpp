// adcmd: serve sessions, run batch evaluations, replay logs, check configs.
//
// Exit codes: 0 success, 1 runtime failure (I/O, bad config, replay
// mismatch), 2 usage error. Every failure prints one line on stderr.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "adcmd/advisor/advisor.hpp"
#include "adcmd/bt/behavior_tree.hpp"
#include "adcmd/error.hpp"
#include "adcmd/eval/evaluation.hpp"
#include "adcmd/loop/command_loop.hpp"
#include "adcmd/loop/episode_log.hpp"
#include "adcmd/opponent/opponent.hpp"
#include "adcmd/rts/maps.hpp"
#include "adcmd/service/service.hpp"

using namespace adcmd;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int fail(const std::string& message, int code = kExitFailure) {
  std::fprintf(stderr, "adcmd: %s\n", one_line(message).c_str());
  return code;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::invalid_config, path + " is not valid JSON: " + e.what());
  }
}

// "3", "1..6" or "1,3,5".
std::vector<int> parse_difficulties(const std::string& text) {
  std::vector<int> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError("bad difficulty \"" + s + "\"");
    if (v < opponent::kMinDifficulty || v > opponent::kMaxDifficulty)
      throw UsageError(fmt::format("difficulty {} outside 1..6", v));
    return v;
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = number(text.substr(0, dots));
    const int hi = number(text.substr(dots + 2));
    if (lo > hi) throw UsageError("empty difficulty range " + text);
    for (int d = lo; d <= hi; ++d) out.push_back(d);
    return out;
  }
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
  if (out.empty()) throw UsageError("no difficulty given");
  return out;
}

// Flags shared by serve and eval. Unset ones leave the config alone.
struct AdvisorFlags {
  std::string backend;
  std::string endpoint;
  std::string model;
  int timeout_ms = 0;

  void add(CLI::App& app) {
    app.add_option("--advisor", backend, "advisor backend")->check(CLI::IsMember({"scripted", "http"}));
    app.add_option("--endpoint", endpoint, "chat completions URL for the http advisor");
    app.add_option("--model", model, "model name for the http advisor");
    app.add_option("--advisor-timeout-ms", timeout_ms, "http advisor timeout")->check(CLI::PositiveNumber);
  }
  void apply(advisor::AdvisorConfig& c) const {
    if (!backend.empty()) c.backend = *advisor::parse_backend(backend);
    if (!endpoint.empty()) c.endpoint = endpoint;
    if (!model.empty()) c.model = model;
    if (timeout_ms > 0) c.timeout_ms = timeout_ms;
  }
};

// ---- serve ----

struct ServeArgs {
  std::string config;
  std::string host;
  int port = -1;
  std::string log_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> difficulty;
  std::string mode;
  std::optional<int> tick_rate;
  std::optional<std::int64_t> tick_limit;
  bool auto_approve = false;
  AdvisorFlags advisor;
};

int run_serve(const ServeArgs& a) {
  service::ServiceConfig config;
  if (!a.config.empty()) config = read_json_file(a.config).get<service::ServiceConfig>();
  if (!a.host.empty()) config.host = a.host;
  if (a.port >= 0) config.port = static_cast<std::uint16_t>(a.port);
  if (!a.log_dir.empty()) config.log_dir = a.log_dir;
  if (a.seed) {
    const std::int64_t limit = config.defaults.game.tick_limit;
    config.defaults.game = rts::default_config(*a.seed);
    config.defaults.game.tick_limit = limit;
  }
  if (a.tick_limit) config.defaults.game.tick_limit = *a.tick_limit;
  if (a.difficulty) config.defaults.opponent_difficulty = *a.difficulty;
  if (!a.mode.empty()) config.defaults.mode = *loop::parse_mode(a.mode);
  if (a.tick_rate) config.defaults.tick_rate = *a.tick_rate;
  if (a.auto_approve) config.defaults.auto_approve = true;
  a.advisor.apply(config.defaults.advisor);

  service::SessionService service(config);  // validates
  service.start();
  std::printf("adcmd: serving on http://%s:%u (logs in %s)\n", config.host.c_str(), service.port(),
              config.log_dir.c_str());
  std::fflush(stdout);
  service.wait_for_stop_signal();
  service.stop();
  std::printf("adcmd: stopped, logs flushed\n");
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string difficulty = "1..6";
  int seeds = 50;
  std::uint64_t seed = 0;
  std::string policy = "balanced_macro";
  int threads = 0;
  std::optional<std::int64_t> tick_limit;
  std::string csv;
  std::string log_dir;
  std::string corpus;
  std::string mode;
  bool skip_following = false;
  AdvisorFlags advisor;
};

int run_eval(const EvalArgs& a) {
  if (a.seeds < 1) throw UsageError(fmt::format("--seeds must be at least 1, got {}", a.seeds));
  if (!a.mode.empty() && a.mode != "lockstep") throw UsageError("eval runs lockstep only");
  eval::BatchSpec spec;
  spec.difficulties = parse_difficulties(a.difficulty);
  spec.seeds = a.seeds;
  spec.first_seed = a.seed;
  spec.policy = a.policy;
  spec.threads = a.threads;
  spec.tick_limit = a.tick_limit;

  advisor::AdvisorConfig advisor_config;
  a.advisor.apply(advisor_config);
  advisor::validate_config(advisor_config);
  const std::vector<eval::InstructionFixture> corpus =
      a.corpus.empty() ? eval::builtin_corpus() : eval::load_corpus(read_json_file(a.corpus));

  eval::EvalReport report = eval::run_batch(spec);
  if (!a.skip_following) {
    auto advisor = advisor::make_advisor(advisor_config);
    report.following = eval::score_instruction_following(corpus, *advisor);
  }

  const std::string csv = eval::to_csv(report);
  std::string csv_path = a.csv;
  if (csv_path.empty() && !a.log_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(a.log_dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + a.log_dir);
    csv_path = (std::filesystem::path(a.log_dir) / "eval.csv").string();
  }
  if (csv_path == "-") {
    std::cout << csv;
    return 0;
  }
  std::cout << eval::to_text(report);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary);
    out << csv;
    out.close();
    if (!out) throw Error(ErrorCode::io, "cannot write " + csv_path);
    std::cout << "csv written to " << csv_path << "\n";
  }
  return 0;
}

// ---- replay ----

int run_replay(const std::string& path) {
  const auto records = loop::read_log(path);
  const loop::ReplayReport r = loop::replay(records);
  if (r.ok()) {
    std::printf("OK: %zu/%zu hashes match\n", r.ticks_matched, r.ticks_checked);
    return 0;
  }
  if (r.first_mismatch)
    return fail(fmt::format("MISMATCH at tick {}: {}", *r.first_mismatch, r.detail));
  return fail(fmt::format("MISMATCH: {}/{} hashes match: {}", r.ticks_matched, r.ticks_checked, r.detail));
}

// ---- validate ----

std::string detect_kind(const nlohmann::json& doc) {
  if (!doc.is_object()) return "";
  if (doc.contains("profiles")) return "presets";
  if (doc.contains("fixtures")) return "corpus";
  if (doc.contains("rules")) return "rules";
  if (doc.contains("policies")) return "library";
  if (doc.contains("nodes")) return "tree";
  if (doc.contains("defaults") || doc.contains("port") || doc.contains("log_dir")) return "service";
  return "session";
}

int run_validate(const std::string& path, std::string kind) {
  const nlohmann::json doc = read_json_file(path);
  if (kind == "auto") kind = detect_kind(doc);
  if (kind.empty()) throw Error(ErrorCode::invalid_config, path + " is not a JSON object");
  std::string detail;
  if (kind == "service") {
    service::validate_config(doc.get<service::ServiceConfig>());
  } else if (kind == "session") {
    loop::validate_config(doc.get<loop::SessionConfig>());
  } else if (kind == "presets") {
    detail = fmt::format("{} profiles", opponent::OpponentPresets::from_json(doc).profiles().size());
  } else if (kind == "library") {
    detail = fmt::format("{} policies", bt::PolicyLibrary::from_json(doc).entries().size());
  } else if (kind == "rules") {
    advisor::KeywordRules::from_json(doc, bt::PolicyLibrary::builtin());
  } else if (kind == "tree") {
    bt::build_tree(bt::TreeTemplate::from_json(doc));
  } else if (kind == "corpus") {
    detail = fmt::format("{} fixtures", eval::load_corpus(doc).size());
  }
  std::printf("OK: %s %s%s\n", kind.c_str(), path.c_str(), detail.empty() ? "" : (" (" + detail + ")").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural-language command of a behavior-tree RTS agent", "adcmd"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  ServeArgs serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "run the session service");
  serve_cmd->add_option("--config", serve.config, "service config JSON file");
  serve_cmd->add_option("--host", serve.host, "listen address");
  serve_cmd->add_option("--port", serve.port, "listen port, 0 for any")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--log-dir", serve.log_dir, "directory for session logs");
  serve_cmd->add_option("--seed", serve.seed, "default game seed");
  serve_cmd->add_option("--difficulty", serve.difficulty, "default opponent difficulty 1..6");
  serve_cmd->add_option("--mode", serve.mode, "tick scheduling")->check(CLI::IsMember({"lockstep", "realtime"}));
  serve_cmd->add_option("--tick-rate", serve.tick_rate, "ticks per second in realtime mode");
  serve_cmd->add_option("--tick-limit", serve.tick_limit, "ticks before a draw");
  serve_cmd->add_flag("--auto-approve", serve.auto_approve, "apply proposals without a decision");
  serve.advisor.add(*serve_cmd);

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "win rates and instruction following, headless");
  eval_cmd->add_option("--difficulty", ev.difficulty, "N, A..B or a comma list")->capture_default_str();
  eval_cmd->add_option("--seeds", ev.seeds, "episodes per difficulty")->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed, "first seed")->capture_default_str();
  eval_cmd->add_option("--policy", ev.policy, "policy id the agent plays")->capture_default_str();
  eval_cmd->add_option("--threads", ev.threads, "worker threads, 0 for all cores");
  eval_cmd->add_option("--tick-limit", ev.tick_limit, "ticks before a draw");
  eval_cmd->add_option("--csv", ev.csv, "write the CSV here; - prints only the CSV");
  eval_cmd->add_option("--log-dir", ev.log_dir, "write eval.csv into this directory");
  eval_cmd->add_option("--corpus", ev.corpus, "instruction fixtures JSON");
  eval_cmd->add_option("--mode", ev.mode, "only lockstep is supported");
  eval_cmd->add_flag("--skip-following", ev.skip_following, "do not score instruction following");
  ev.advisor.add(*eval_cmd);

  std::string replay_path;
  CLI::App* replay_cmd = app.add_subcommand("replay", "re-run a session log and compare every state hash");
  replay_cmd->add_option("log", replay_path, "JSON Lines session log")->required();

  std::string validate_path;
  std::string validate_kind = "auto";
  CLI::App* validate_cmd = app.add_subcommand("validate", "check a config or data file");
  validate_cmd->add_option("file", validate_path, "JSON file")->required();
  validate_cmd
      ->add_option("--kind", validate_kind, "file kind; auto detects from the top-level keys")
      ->check(CLI::IsMember({"auto", "service", "session", "presets", "library", "rules", "tree", "corpus"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(std::string("usage: ") + e.what() + " (see --help)", kExitUsage);
  }

  try {
    if (*serve_cmd) return run_serve(serve);
    if (*eval_cmd) return run_eval(ev);
    if (*replay_cmd) return run_replay(replay_path);
    if (*validate_cmd) return run_validate(validate_path, validate_kind);
  } catch (const UsageError& e) {
    return fail(std::string("usage: ") + e.what(), kExitUsage);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::precondition) return fail(std::string("usage: ") + e.what(), kExitUsage);
    return fail(e.what());
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return kExitFailure;
}
