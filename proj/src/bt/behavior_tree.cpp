#include "adcmd/bt/behavior_tree.hpp"

#include <functional>
#include <set>

#include <fmt/format.h>

#include "adcmd/embedded_data.hpp"
#include "adcmd/error.hpp"
#include "leaves.hpp"

namespace adcmd::bt {

namespace {

constexpr std::array<std::pair<NodeKind, std::string_view>, 4> kNodeKinds{{
    {NodeKind::Selector, "Selector"},
    {NodeKind::Sequence, "Sequence"},
    {NodeKind::Condition, "Condition"},
    {NodeKind::Action, "Action"},
}};

NodeKind parse_node_kind(const std::string& name) {
  for (const auto& [kind, text] : kNodeKinds)
    if (text == name) return kind;
  throw Error(ErrorCode::invalid_config, "unknown node kind '" + name + "'");
}

bool is_leaf(NodeKind k) { return k == NodeKind::Condition || k == NodeKind::Action; }

// Arity and identifier checks shared by both tree forms.
void check_node(NodeKind kind, const std::string& name, std::size_t n_children, const std::string& leaf,
                std::vector<TreeIssue>& issues) {
  if (is_leaf(kind)) {
    if (n_children != 0) issues.push_back({TreeIssueKind::Arity, name, "leaf has children"});
    const bool known = kind == NodeKind::Condition ? detail::find_predicate(leaf) != nullptr
                                                   : detail::find_emitter(leaf) != nullptr;
    if (!known)
      issues.push_back({TreeIssueKind::UnknownIdentifier, name,
                        fmt::format("unknown {} '{}'", kind == NodeKind::Condition ? "predicate" : "emitter", leaf)});
  } else {
    if (n_children == 0) issues.push_back({TreeIssueKind::Arity, name, "composite has no children"});
    if (!leaf.empty()) issues.push_back({TreeIssueKind::Arity, name, "composite names a leaf identifier"});
  }
}

void validate_nested(const TreeNode& node, std::vector<TreeIssue>& issues) {
  check_node(node.kind, node.name, node.children.size(), node.leaf, issues);
  for (const TreeNode& child : node.children) validate_nested(child, issues);
}

std::string describe(const std::vector<TreeIssue>& issues) {
  std::string out;
  for (const TreeIssue& i : issues) {
    if (!out.empty()) out += "; ";
    out += fmt::format("{} at '{}': {}", to_string(i.kind), i.node, i.detail);
  }
  return out;
}

enum class Status { Success, Failure };

struct Node {
  NodeKind kind;
  detail::Predicate predicate = nullptr;
  detail::Emitter emitter = nullptr;
  std::vector<Node> children;
};

Node compile(const TreeNode& n) {
  Node c{n.kind, nullptr, nullptr, {}};
  if (n.kind == NodeKind::Condition) c.predicate = detail::find_predicate(n.leaf);
  if (n.kind == NodeKind::Action) c.emitter = detail::find_emitter(n.leaf);
  for (const TreeNode& child : n.children) c.children.push_back(compile(child));
  return c;
}

Status run(const Node& n, detail::Context& ctx) {
  switch (n.kind) {
    case NodeKind::Condition:
      return n.predicate(ctx) ? Status::Success : Status::Failure;
    case NodeKind::Action: {
      const std::size_t before = ctx.out.commands.size();
      n.emitter(ctx);
      return ctx.out.commands.size() > before ? Status::Success : Status::Failure;
    }
    case NodeKind::Selector:
      for (const Node& child : n.children)
        if (run(child, ctx) == Status::Success) return Status::Success;
      return Status::Failure;
    case NodeKind::Sequence:
      for (const Node& child : n.children)
        if (run(child, ctx) == Status::Failure) return Status::Failure;
      return Status::Success;
  }
  return Status::Failure;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  for (const auto& [k, text] : kNodeKinds)
    if (k == kind) return text;
  return "?";
}

std::string_view to_string(TreeIssueKind kind) {
  switch (kind) {
    case TreeIssueKind::Cycle: return "cycle";
    case TreeIssueKind::Arity: return "arity";
    case TreeIssueKind::UnknownIdentifier: return "unknown-identifier";
    case TreeIssueKind::UnknownNode: return "unknown-node";
    case TreeIssueKind::SharedNode: return "shared-node";
    case TreeIssueKind::Unreachable: return "unreachable";
  }
  return "?";
}

TreeTemplate TreeTemplate::from_json(const nlohmann::json& doc) {
  try {
    TreeTemplate t;
    t.root = doc.at("root").get<std::string>();
    for (const auto& [name, j] : doc.at("nodes").items()) {
      Entry e;
      e.kind = parse_node_kind(j.at("kind").get<std::string>());
      e.children = j.value("children", std::vector<std::string>{});
      e.leaf = j.value("leaf", "");
      t.nodes.emplace(name, std::move(e));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_config, std::string("tree template: ") + e.what());
  }
}

const TreeTemplate& TreeTemplate::builtin() {
  static const TreeTemplate t = from_json(nlohmann::json::parse(embedded::kTreeTemplate));
  return t;
}

nlohmann::json TreeTemplate::to_json() const {
  nlohmann::json nodes_json = nlohmann::json::object();
  for (const auto& [name, e] : nodes) {
    nlohmann::json j{{"kind", std::string(bt::to_string(e.kind))}};
    if (!e.children.empty()) j["children"] = e.children;
    if (!e.leaf.empty()) j["leaf"] = e.leaf;
    nodes_json[name] = j;
  }
  return {{"root", root}, {"nodes", nodes_json}};
}

std::vector<TreeIssue> validate_tree(const TreeTemplate& tree) {
  std::vector<TreeIssue> issues;
  if (!tree.nodes.contains(tree.root)) {
    issues.push_back({TreeIssueKind::UnknownNode, tree.root, "root node is not defined"});
    return issues;
  }
  std::map<std::string, int> parents;
  for (const auto& [name, e] : tree.nodes) {
    check_node(e.kind, name, e.children.size(), e.leaf, issues);
    for (const std::string& child : e.children) {
      if (!tree.nodes.contains(child))
        issues.push_back({TreeIssueKind::UnknownNode, name, "child '" + child + "' is not defined"});
      else
        ++parents[child];
    }
  }
  for (const auto& [name, count] : parents)
    if (count > 1) issues.push_back({TreeIssueKind::SharedNode, name, fmt::format("{} parents", count)});
  if (parents.contains(tree.root)) issues.push_back({TreeIssueKind::Cycle, tree.root, "root has a parent"});

  // Depth-first walk from the root: grey nodes on the stack mark a cycle.
  std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    color[name] = 1;
    for (const std::string& child : tree.nodes.at(name).children) {
      if (!tree.nodes.contains(child)) continue;
      if (color[child] == 1)
        issues.push_back({TreeIssueKind::Cycle, name, "edge to '" + child + "' closes a cycle"});
      else if (color[child] == 0)
        visit(child);
    }
    color[name] = 2;
  };
  visit(tree.root);
  for (const auto& [name, e] : tree.nodes)
    if (color[name] == 0) issues.push_back({TreeIssueKind::Unreachable, name, "not reachable from the root"});
  return issues;
}

std::vector<TreeIssue> validate_tree(const TreeNode& root) {
  std::vector<TreeIssue> issues;
  validate_nested(root, issues);
  return issues;
}

TreeNode build_tree(const TreeTemplate& tree) {
  if (auto issues = validate_tree(tree); !issues.empty())
    throw Error(ErrorCode::invalid_config, "invalid tree template: " + describe(issues));
  std::function<TreeNode(const std::string&)> build = [&](const std::string& name) {
    const TreeTemplate::Entry& e = tree.nodes.at(name);
    TreeNode n{e.kind, name, e.leaf, {}};
    for (const std::string& child : e.children) n.children.push_back(build(child));
    return n;
  };
  return build(tree.root);
}

const std::vector<std::string>& known_predicates() {
  static const std::vector<std::string> names(detail::predicate_names().begin(), detail::predicate_names().end());
  return names;
}

const std::vector<std::string>& known_emitters() {
  static const std::vector<std::string> names(detail::emitter_names().begin(), detail::emitter_names().end());
  return names;
}

struct BehaviorTree::Compiled {
  Node root;
};

BehaviorTree::BehaviorTree(const TreeTemplate& tree)
    : root_(build_tree(tree)), compiled_(std::make_shared<const Compiled>(Compiled{compile(root_)})) {}

const BehaviorTree& BehaviorTree::builtin() {
  static const BehaviorTree tree(TreeTemplate::builtin());
  return tree;
}

rts::ActionSet BehaviorTree::tick(const Policy& policy, const rts::GameState& state, int faction) const {
  try {
    validate_modulators(policy.modulators);
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_policy, e.what());
  }
  if (faction != rts::kPlayer && faction != rts::kOpponent)
    throw Error(ErrorCode::invalid_policy, fmt::format("faction {} out of range", faction));
  detail::Context ctx(state, faction, policy.modulators);
  run(compiled_->root, ctx);
  return std::move(ctx.out);
}

rts::UnitKind next_army_kind(const std::array<double, 3>& weights, const std::array<int, 3>& counts) {
  const std::vector<rts::UnitKind> ranked = detail::ranked_kinds(weights, counts);
  if (ranked.empty()) throw Error(ErrorCode::invalid_policy, "all composition weights are zero");
  return ranked.front();
}

}  // namespace adcmd::bt
