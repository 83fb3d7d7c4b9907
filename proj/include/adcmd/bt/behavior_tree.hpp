#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adcmd/bt/modulators.hpp"
#include "adcmd/rts/types.hpp"

namespace adcmd::bt {

enum class NodeKind { Selector, Sequence, Condition, Action };

std::string_view to_string(NodeKind kind);

struct TreeNode {
  NodeKind kind = NodeKind::Selector;
  std::string name;
  std::string leaf;  // predicate (Condition) or emitter (Action) identifier
  std::vector<TreeNode> children;
};

// The on-disk form: a flat table of named nodes referring to children by
// name. Unlike a nested TreeNode it can express cycles and shared children,
// which validate_tree() rejects.
struct TreeTemplate {
  std::string root;
  struct Entry {
    NodeKind kind = NodeKind::Selector;
    std::vector<std::string> children;
    std::string leaf;
  };
  std::map<std::string, Entry> nodes;

  static TreeTemplate from_json(const nlohmann::json& doc);
  static const TreeTemplate& builtin();
  nlohmann::json to_json() const;
};

enum class TreeIssueKind { Cycle, Arity, UnknownIdentifier, UnknownNode, SharedNode, Unreachable };

struct TreeIssue {
  TreeIssueKind kind;
  std::string node;
  std::string detail;
};

std::string_view to_string(TreeIssueKind kind);

std::vector<TreeIssue> validate_tree(const TreeTemplate& tree);
std::vector<TreeIssue> validate_tree(const TreeNode& root);

// Builds the nested tree; throws Error(invalid_config) listing every issue.
TreeNode build_tree(const TreeTemplate& tree);

const std::vector<std::string>& known_predicates();
const std::vector<std::string>& known_emitters();

// g_BT: ticking the tree against a state yields this tick's commands for
// `faction`. Leaves read the policy's modulators; nothing here mutates state.
//
// Semantics: Condition succeeds iff its predicate holds; Action succeeds iff
// it emitted at least one command; Selector/Sequence are the usual
// first-success / first-failure composites. The root Selector therefore acts
// on the highest-priority branch that has something to do this tick.
class BehaviorTree {
 public:
  explicit BehaviorTree(const TreeTemplate& tree);
  static const BehaviorTree& builtin();

  // Throws Error(invalid_policy) if the policy's modulators are out of range.
  rts::ActionSet tick(const Policy& policy, const rts::GameState& state, int faction = rts::kPlayer) const;

  const TreeNode& root() const { return root_; }

 private:
  struct Compiled;
  TreeNode root_;
  std::shared_ptr<const Compiled> compiled_;
};

inline rts::ActionSet tick(const Policy& policy, const rts::GameState& state, int faction = rts::kPlayer) {
  return BehaviorTree::builtin().tick(policy, state, faction);
}

// Largest-deficit-first choice of the next army unit given current counts
// (existing plus queued). Ties go to the alphabetically first kind name.
rts::UnitKind next_army_kind(const std::array<double, 3>& weights, const std::array<int, 3>& counts);

inline constexpr int kDefenseRadius = 8;

}  // namespace adcmd::bt
