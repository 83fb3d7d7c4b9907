#include "adcmd/advisor/advisor.hpp"

#include <chrono>
#include <cstdlib>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "adcmd/embedded_data.hpp"
#include "adcmd/error.hpp"

namespace adcmd::advisor {

namespace {

constexpr std::string_view kCurrent = "current";

constexpr std::string_view kSystemPrompt =
    "You are a strategy advisor for a real-time strategy game. Answer with exactly one fenced JSON object.";

// `keyword` words must appear consecutively in `text`, each one a prefix of
// the text word it lines up with.
bool phrase_matches(const std::vector<std::string>& text, const std::vector<std::string>& keyword) {
  if (keyword.empty() || keyword.size() > text.size()) return false;
  for (std::size_t i = 0; i + keyword.size() <= text.size(); ++i) {
    bool all = true;
    for (std::size_t k = 0; k < keyword.size() && all; ++k) all = text[i + k].rfind(keyword[k], 0) == 0;
    if (all) return true;
  }
  return false;
}

// Object spans in `raw` in order of preference: fenced blocks first, then
// every balanced {...} outside them.
std::vector<std::string> candidate_objects(std::string_view raw) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = raw.find("```", pos)) != std::string_view::npos) {
    std::size_t body = raw.find('\n', pos + 3);
    if (body == std::string_view::npos) break;
    const std::size_t end = raw.find("```", body);
    if (end == std::string_view::npos) break;
    out.emplace_back(raw.substr(body + 1, end - body - 1));
    pos = end + 3;
  }
  for (std::size_t start = raw.find('{'); start != std::string_view::npos; start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        out.emplace_back(raw.substr(start, i - start + 1));
        break;
      }
    }
  }
  return out;
}

bool looks_like_proposal(const nlohmann::json& j) {
  return j.is_object() && j.contains("basis") && j["basis"].is_string() && j.contains("rationale") &&
         j["rationale"].is_string();
}

std::string extract_content(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::malformed_response, "completion body is not JSON");
  }
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty())
    throw Error(ErrorCode::malformed_response, "completion has no choices");
  const nlohmann::json& first = choices->front();
  if (first.contains("message") && first["message"].contains("content") && first["message"]["content"].is_string())
    return first["message"]["content"].get<std::string>();
  if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
  throw Error(ErrorCode::malformed_response, "completion choice has no message content");
}

}  // namespace

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const char c = (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur += c;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bt::ModulatorSet resolve(const PolicyProposal& p, const bt::Policy& current, const bt::PolicyLibrary& library) {
  const bt::ModulatorSet& base = p.basis == current.policy_id ? current.modulators : library.at(p.basis).modulators;
  bt::ModulatorSet out = bt::apply_delta(base, p.deltas);
  bt::validate_modulators(out);
  return out;
}

KeywordRules::KeywordRules(std::vector<KeywordRule> rules, const bt::PolicyLibrary& library)
    : rules_(std::move(rules)) {
  if (rules_.empty()) throw Error(ErrorCode::invalid_config, "advisor rules are empty");
  for (const KeywordRule& r : rules_) {
    if (r.keywords.empty()) throw Error(ErrorCode::invalid_config, "rule '" + r.name + "' has no keywords");
    for (const std::string& k : r.keywords)
      if (words(k).empty()) throw Error(ErrorCode::invalid_config, "rule '" + r.name + "' has an empty keyword");
    if (r.basis != kCurrent && !library.contains(r.basis))
      throw Error(ErrorCode::invalid_config, fmt::format("rule '{}': unknown basis '{}'", r.name, r.basis));
    if (!r.initial_basis.empty() && !library.contains(r.initial_basis))
      throw Error(ErrorCode::invalid_config,
                  fmt::format("rule '{}': unknown initial_basis '{}'", r.name, r.initial_basis));
    if (r.rationale.empty()) throw Error(ErrorCode::invalid_config, "rule '" + r.name + "' has no rationale");
  }
}

KeywordRules KeywordRules::from_json(const nlohmann::json& doc, const bt::PolicyLibrary& library) {
  std::vector<KeywordRule> rules;
  try {
    for (const nlohmann::json& j : doc.at("rules")) {
      KeywordRule r;
      r.name = j.at("name").get<std::string>();
      r.keywords = j.at("keywords").get<std::vector<std::string>>();
      r.basis = j.at("basis").get<std::string>();
      r.initial_basis = j.value("initial_basis", "");
      if (j.contains("deltas")) r.deltas = j["deltas"].get<bt::ModulatorDelta>();
      r.rationale = j.at("rationale").get<std::string>();
      rules.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_config, std::string("advisor rules: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_config, std::string("advisor rules: ") + e.what());
  }
  return KeywordRules(std::move(rules), library);
}

const KeywordRules& KeywordRules::builtin() {
  static const KeywordRules rules = from_json(nlohmann::json::parse(embedded::kAdvisorRules), bt::PolicyLibrary::builtin());
  return rules;
}

const KeywordRule* KeywordRules::match(std::string_view text) const {
  const std::vector<std::string> w = words(text);
  for (const KeywordRule& r : rules_)
    for (const std::string& k : r.keywords)
      if (phrase_matches(w, words(k))) return &r;
  return nullptr;
}

ScriptedAdvisor::ScriptedAdvisor(const bt::PolicyLibrary& library, const KeywordRules& rules)
    : library_(library), rules_(rules) {
  if (library_.entries().empty()) throw Error(ErrorCode::invalid_config, "policy library is empty");
}

PolicyProposal ScriptedAdvisor::select_initial_policy(const cos::FrameSummary&, const Instruction& c0) {
  PolicyProposal p;
  p.source_backend = Backend::Scripted;
  p.in_reply_to = c0.id;
  const KeywordRule* r = rules_.match(c0.text);
  if (r == nullptr) {
    p.basis = library_.default_id();
    p.rationale = fmt::format("No clear preference in the instruction; starting with the default policy {}.",
                              library_.default_id());
  } else if (r->basis != kCurrent) {
    p.basis = r->basis;
    p.deltas = r->deltas;
    p.rationale = r->rationale;
  } else if (!r->initial_basis.empty()) {
    p.basis = r->initial_basis;
    p.rationale = r->rationale;
  } else {
    p.basis = library_.default_id();
    p.deltas = r->deltas;
    p.rationale = r->rationale;
  }
  resolve(p, library_.instantiate(library_.default_id()), library_);
  return p;
}

PolicyProposal ScriptedAdvisor::adjust_policy(const cos::AdvisorRequest& request) {
  PolicyProposal p;
  p.source_backend = Backend::Scripted;
  p.in_reply_to = request.instruction.id;
  const KeywordRule* r = rules_.match(request.instruction.text);
  if (r == nullptr) {
    p.basis = request.current_policy.policy_id;
    p.rationale = "no change";
  } else {
    p.basis = r->basis == kCurrent ? request.current_policy.policy_id : r->basis;
    p.deltas = r->deltas;
    p.rationale = r->rationale;
  }
  if (!library_.contains(p.basis))
    throw Error(ErrorCode::invariant_violation, fmt::format("basis '{}' is not in the library", p.basis));
  resolve(p, request.current_policy, library_);
  return p;
}

Endpoint parse_endpoint(std::string_view url) {
  static const std::regex re(R"(^(http://[A-Za-z0-9._\-]+(:[0-9]{1,5})?)(/[^\s]*)?$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(url.begin(), url.end(), m, re))
    throw Error(ErrorCode::invalid_config, fmt::format("advisor endpoint '{}' is not an http:// URL", url));
  Endpoint e{m[1].str(), m[3].matched ? m[3].str() : "/v1/chat/completions"};
  if (m[2].matched) {
    const int port = std::stoi(m[2].str().substr(1));
    if (port < 1 || port > 65535)
      throw Error(ErrorCode::invalid_config, fmt::format("advisor endpoint port {} out of range", port));
  }
  return e;
}

HttpAdvisor::HttpAdvisor(AdvisorConfig config, const bt::PolicyLibrary& library)
    : config_(std::move(config)), library_(library) {
  config_.backend = Backend::Http;
  validate_config(config_);
  const Endpoint e = parse_endpoint(config_.endpoint);
  origin_ = e.origin;
  path_ = e.path;
}

std::string HttpAdvisor::complete(const std::string& prompt) const {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0')
    headers.emplace("Authorization", std::string("Bearer ") + key);

  const nlohmann::json body{{"model", config_.model},
                            {"temperature", config_.temperature},
                            {"messages",
                             {{{"role", "system"}, {"content", kSystemPrompt}}, {{"role", "user"}, {"content", prompt}}}}};
  const auto started = std::chrono::steady_clock::now();
  const httplib::Result res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const httplib::Error err = res.error();
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= timeout))
      throw Error(ErrorCode::timeout, fmt::format("no reply from {} within {} ms", origin_, config_.timeout_ms));
    throw Error(ErrorCode::backend_unavailable, fmt::format("{}: {}", origin_, httplib::to_string(err)));
  }
  if (res->status != 200)
    throw Error(ErrorCode::backend_unavailable, fmt::format("{} answered HTTP {}", origin_, res->status));
  return extract_content(res->body);
}

PolicyProposal HttpAdvisor::select_initial_policy(const cos::FrameSummary& s0, const Instruction& c0) {
  const cos::AdvisorRequest request = initial_request(s0, c0, library_);
  PolicyProposal p = parse_llm_reply(complete(request.rendered), library_, &request.current_policy);
  p.source_backend = Backend::Http;
  p.in_reply_to = c0.id;
  return p;
}

PolicyProposal HttpAdvisor::adjust_policy(const cos::AdvisorRequest& request) {
  PolicyProposal p = parse_llm_reply(complete(request.rendered), library_, &request.current_policy);
  p.source_backend = Backend::Http;
  p.in_reply_to = request.instruction.id;
  return p;
}

PolicyProposal parse_llm_reply(std::string_view raw, const bt::PolicyLibrary& library, const bt::Policy* current) {
  for (const std::string& text : candidate_objects(raw)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      continue;
    }
    if (!looks_like_proposal(j)) continue;
    PolicyProposal p;
    p.source_backend = Backend::Http;
    p.basis = j["basis"].get<std::string>();
    p.rationale = j["rationale"].get<std::string>();
    if (p.rationale.empty()) throw Error(ErrorCode::malformed_response, "rationale is empty");
    try {
      if (j.contains("deltas") && !j["deltas"].is_null()) p.deltas = j["deltas"].get<bt::ModulatorDelta>();
    } catch (const Error& e) {
      throw Error(ErrorCode::malformed_response, std::string("deltas: ") + e.what());
    }
    if (!library.contains(p.basis))
      throw Error(ErrorCode::invariant_violation, fmt::format("basis '{}' is not in the library", p.basis));
    const bt::Policy fallback = library.instantiate(p.basis);
    resolve(p, current != nullptr ? *current : fallback, library);
    return p;
  }
  throw Error(ErrorCode::malformed_response, "reply has no JSON object with basis, deltas and rationale");
}

std::unique_ptr<Advisor> make_advisor(const AdvisorConfig& config, const bt::PolicyLibrary& library) {
  validate_config(config);
  if (config.backend == Backend::Http) return std::make_unique<HttpAdvisor>(config, library);
  return std::make_unique<ScriptedAdvisor>(library);
}

cos::AdvisorRequest initial_request(const cos::FrameSummary& s0, const Instruction& c0,
                                    const bt::PolicyLibrary& library) {
  cos::ActionDigest digest;
  digest.since_tick = s0.tick;
  return cos::integrate_context(cos::summarize_window({s0}), library.instantiate(library.default_id()), digest, c0,
                                library);
}

}  // namespace adcmd::advisor
