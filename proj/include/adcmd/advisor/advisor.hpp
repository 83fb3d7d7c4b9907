#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adcmd/advisor/types.hpp"
#include "adcmd/bt/modulators.hpp"
#include "adcmd/cos/summarizer.hpp"

namespace adcmd::advisor {

// Maps summarized context plus an instruction to a PolicyProposal. Proposal
// ids are left at 0; the command loop numbers them.
//
// Both calls throw Error(backend_unavailable), Error(malformed_response),
// Error(timeout) or Error(invariant_violation); none of these may change the
// active policy.
class Advisor {
 public:
  virtual ~Advisor() = default;
  virtual Backend backend() const = 0;
  virtual PolicyProposal select_initial_policy(const cos::FrameSummary& s0, const Instruction& c0) = 0;
  virtual PolicyProposal adjust_policy(const cos::AdvisorRequest& request) = 0;
};

// The modulators a proposal leads to: deltas on the current policy when the
// basis names it, otherwise deltas on the library preset. Validates.
bt::ModulatorSet resolve(const PolicyProposal& proposal, const bt::Policy& current, const bt::PolicyLibrary& library);

struct KeywordRule {
  std::string name;
  std::vector<std::string> keywords;  // phrases; each word matches as a word prefix
  std::string basis;                  // library id, or "current"
  std::string initial_basis;          // used by select_initial_policy when basis is "current"
  bt::ModulatorDelta deltas;
  std::string rationale;
};

class KeywordRules {
 public:
  KeywordRules() = default;
  // Throws Error(invalid_config) for unknown policy ids or empty rules.
  KeywordRules(std::vector<KeywordRule> rules, const bt::PolicyLibrary& library);

  static KeywordRules from_json(const nlohmann::json& doc, const bt::PolicyLibrary& library);
  static const KeywordRules& builtin();

  // First rule with a matching keyword, or nullptr.
  const KeywordRule* match(std::string_view text) const;
  const std::vector<KeywordRule>& rules() const { return rules_; }

 private:
  std::vector<KeywordRule> rules_;
};

// Lowercase words of `text`; anything outside [a-z0-9] separates.
std::vector<std::string> words(std::string_view text);

// Deterministic test oracle: an ordered keyword table, first match wins. A
// pure function of the request.
class ScriptedAdvisor final : public Advisor {
 public:
  explicit ScriptedAdvisor(const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin(),
                           const KeywordRules& rules = KeywordRules::builtin());
  Backend backend() const override { return Backend::Scripted; }
  PolicyProposal select_initial_policy(const cos::FrameSummary& s0, const Instruction& c0) override;
  PolicyProposal adjust_policy(const cos::AdvisorRequest& request) override;

 private:
  bt::PolicyLibrary library_;
  KeywordRules rules_;
};

// Chat-completion client: POST {model, messages, temperature} to the
// endpoint, read choices[0].message.content, parse it with parse_llm_reply.
// The bearer token comes from the environment variable named in the config.
class HttpAdvisor final : public Advisor {
 public:
  // Throws Error(invalid_config) for a bad config or URL.
  explicit HttpAdvisor(AdvisorConfig config, const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin());
  Backend backend() const override { return Backend::Http; }
  PolicyProposal select_initial_policy(const cos::FrameSummary& s0, const Instruction& c0) override;
  PolicyProposal adjust_policy(const cos::AdvisorRequest& request) override;

 private:
  std::string complete(const std::string& prompt) const;
  AdvisorConfig config_;
  bt::PolicyLibrary library_;
  std::string origin_;  // scheme://host:port
  std::string path_;
};

struct Endpoint {
  std::string origin;
  std::string path;
};

// Splits an http:// URL; throws Error(invalid_config).
Endpoint parse_endpoint(std::string_view url);

// Finds the first JSON object with basis/deltas/rationale, preferring fenced
// blocks, and validates it against the library. With `current` given, a
// basis equal to its policy id is checked against the current modulators.
// Throws Error(malformed_response) or Error(invariant_violation).
PolicyProposal parse_llm_reply(std::string_view raw, const bt::PolicyLibrary& library,
                               const bt::Policy* current = nullptr);

std::unique_ptr<Advisor> make_advisor(const AdvisorConfig& config,
                                      const bt::PolicyLibrary& library = bt::PolicyLibrary::builtin());

// The prompt used for the pre-game choice: a one-frame window, the library
// default as the current policy.
cos::AdvisorRequest initial_request(const cos::FrameSummary& s0, const Instruction& c0,
                                    const bt::PolicyLibrary& library);

}  // namespace adcmd::advisor
