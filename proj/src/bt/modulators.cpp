#include "adcmd/bt/modulators.hpp"

#include <cmath>

#include <fmt/format.h>

#include "adcmd/embedded_data.hpp"
#include "adcmd/error.hpp"

namespace adcmd::bt {

namespace {

constexpr std::array<const char*, 3> kWeightKeys{"Melee", "Ranged", "Air"};

[[noreturn]] void violation(const std::string& why) { throw Error(ErrorCode::invariant_violation, why); }

template <typename T>
T read_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, fmt::format("field '{}': {}", key, e.what()));
  }
}

int read_int(const nlohmann::json& j, const char* key) {
  const nlohmann::json& v = j.at(key);
  if (!v.is_number()) throw Error(ErrorCode::validation, fmt::format("field '{}' must be a number", key));
  const double d = v.get<double>();
  if (d != std::floor(d)) throw Error(ErrorCode::validation, fmt::format("field '{}' must be an integer", key));
  return static_cast<int>(d);
}

}  // namespace

bool ModulatorDelta::empty() const {
  for (const auto& w : composition_weights)
    if (w) return false;
  return !attack_supply_threshold && !worker_target_per_base && !max_bases && !build_turrets;
}

void validate_modulators(const ModulatorSet& m) {
  double sum = 0;
  for (int i = 0; i < 3; ++i) {
    const double w = m.composition_weights[i];
    if (!std::isfinite(w) || w < 0 || w > kMaxWeight)
      violation(fmt::format("composition weight {} = {} outside [0, {}]", kWeightKeys[i], w, kMaxWeight));
    sum += w;
  }
  if (sum <= 0) violation("composition weights must have a positive sum");
  if (m.attack_supply_threshold < 0 || m.attack_supply_threshold > kMaxAttackThreshold)
    violation(fmt::format("attack_supply_threshold {} outside [0, {}]", m.attack_supply_threshold, kMaxAttackThreshold));
  if (m.worker_target_per_base < 1 || m.worker_target_per_base > kMaxWorkerTarget)
    violation(fmt::format("worker_target_per_base {} outside [1, {}]", m.worker_target_per_base, kMaxWorkerTarget));
  if (m.max_bases < 1 || m.max_bases > kMaxBases)
    violation(fmt::format("max_bases {} outside [1, {}]", m.max_bases, kMaxBases));
}

ModulatorSet apply_delta(const ModulatorSet& m, const ModulatorDelta& d) {
  ModulatorSet out = m;
  for (int i = 0; i < 3; ++i)
    if (d.composition_weights[i]) out.composition_weights[i] = *d.composition_weights[i];
  if (d.attack_supply_threshold) out.attack_supply_threshold = *d.attack_supply_threshold;
  if (d.worker_target_per_base) out.worker_target_per_base = *d.worker_target_per_base;
  if (d.max_bases) out.max_bases = *d.max_bases;
  if (d.build_turrets) out.build_turrets = *d.build_turrets;
  return out;
}

Policy apply_modulators(const Policy& policy, const ModulatorDelta& delta) {
  Policy next = policy;
  next.modulators = apply_delta(policy.modulators, delta);
  validate_modulators(next.modulators);
  ++next.revision;
  return next;
}

PolicyLibrary::PolicyLibrary(std::vector<PolicyEntry> entries, std::string default_id)
    : entries_(std::move(entries)), default_id_(std::move(default_id)) {
  if (entries_.empty()) throw Error(ErrorCode::invalid_config, "policy library is empty");
  for (const PolicyEntry& e : entries_) {
    if (e.id.empty()) throw Error(ErrorCode::invalid_config, "policy with empty id");
    validate_modulators(e.modulators);
  }
  if (!contains(default_id_)) throw Error(ErrorCode::invalid_config, "default policy '" + default_id_ + "' not in library");
}

PolicyLibrary PolicyLibrary::from_json(const nlohmann::json& doc) {
  std::vector<PolicyEntry> entries;
  for (const auto& p : doc.at("policies"))
    entries.push_back({p.at("id").get<std::string>(), p.value("description", ""),
                       p.at("modulators").get<ModulatorSet>()});
  return PolicyLibrary(std::move(entries), doc.at("default").get<std::string>());
}

const PolicyLibrary& PolicyLibrary::builtin() {
  static const PolicyLibrary lib = from_json(nlohmann::json::parse(embedded::kPolicyLibrary));
  return lib;
}

const PolicyEntry* PolicyLibrary::find(std::string_view id) const {
  for (const PolicyEntry& e : entries_)
    if (e.id == id) return &e;
  return nullptr;
}

const PolicyEntry& PolicyLibrary::at(std::string_view id) const {
  if (const PolicyEntry* e = find(id)) return *e;
  violation(fmt::format("policy '{}' is not in the library", id));
}

Policy PolicyLibrary::instantiate(std::string_view id) const { return Policy{std::string(id), at(id).modulators, 0}; }

void to_json(nlohmann::json& j, const ModulatorSet& m) {
  nlohmann::json weights = nlohmann::json::object();
  for (int i = 0; i < 3; ++i) weights[kWeightKeys[i]] = m.composition_weights[i];
  j = nlohmann::json{{"composition_weights", weights},
                     {"attack_supply_threshold", m.attack_supply_threshold},
                     {"worker_target_per_base", m.worker_target_per_base},
                     {"max_bases", m.max_bases},
                     {"build_turrets", m.build_turrets}};
}

void from_json(const nlohmann::json& j, ModulatorSet& m) {
  ModulatorDelta d = j.get<ModulatorDelta>();
  for (int i = 0; i < 3; ++i)
    if (!d.composition_weights[i])
      throw Error(ErrorCode::validation, fmt::format("composition weight '{}' missing", kWeightKeys[i]));
  if (!d.attack_supply_threshold || !d.worker_target_per_base || !d.max_bases || !d.build_turrets)
    throw Error(ErrorCode::validation, "modulator set is missing fields");
  m = apply_delta(ModulatorSet{}, d);
}

void to_json(nlohmann::json& j, const ModulatorDelta& d) {
  j = nlohmann::json::object();
  nlohmann::json weights = nlohmann::json::object();
  for (int i = 0; i < 3; ++i)
    if (d.composition_weights[i]) weights[kWeightKeys[i]] = *d.composition_weights[i];
  if (!weights.empty()) j["composition_weights"] = weights;
  if (d.attack_supply_threshold) j["attack_supply_threshold"] = *d.attack_supply_threshold;
  if (d.worker_target_per_base) j["worker_target_per_base"] = *d.worker_target_per_base;
  if (d.max_bases) j["max_bases"] = *d.max_bases;
  if (d.build_turrets) j["build_turrets"] = *d.build_turrets;
}

void from_json(const nlohmann::json& j, ModulatorDelta& d) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "modulator deltas must be an object");
  d = ModulatorDelta{};
  for (const auto& [key, value] : j.items()) {
    if (key == "composition_weights") {
      if (!value.is_object()) throw Error(ErrorCode::validation, "composition_weights must be an object");
      for (const auto& [kind, w] : value.items()) {
        int index = -1;
        for (int i = 0; i < 3; ++i)
          if (kind == kWeightKeys[i]) index = i;
        if (index < 0) throw Error(ErrorCode::validation, "unknown unit kind in composition_weights: " + kind);
        if (!w.is_number()) throw Error(ErrorCode::validation, "weight for " + kind + " must be a number");
        d.composition_weights[index] = w.get<double>();
      }
    } else if (key == "attack_supply_threshold") {
      d.attack_supply_threshold = read_int(j, "attack_supply_threshold");
    } else if (key == "worker_target_per_base") {
      d.worker_target_per_base = read_int(j, "worker_target_per_base");
    } else if (key == "max_bases") {
      d.max_bases = read_int(j, "max_bases");
    } else if (key == "build_turrets") {
      if (!value.is_boolean()) throw Error(ErrorCode::validation, "build_turrets must be a boolean");
      d.build_turrets = value.get<bool>();
    } else {
      throw Error(ErrorCode::validation, "unknown modulator '" + key + "'");
    }
  }
}

void to_json(nlohmann::json& j, const Policy& p) {
  j = nlohmann::json{{"policy_id", p.policy_id}, {"modulators", p.modulators}, {"revision", p.revision}};
}

void from_json(const nlohmann::json& j, Policy& p) {
  p.policy_id = read_field<std::string>(j, "policy_id");
  p.modulators = j.at("modulators").get<ModulatorSet>();
  p.revision = read_field<int>(j, "revision");
}

}  // namespace adcmd::bt
