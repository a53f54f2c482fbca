#pragma once

// Labeled n-ary proof trees: dependency order, linearization, complexity,
// canonical text form and ordered tree edit distance.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vproof/kernel.hpp"

namespace vproof {

using NodeId = int;

inline constexpr int kDefaultMaxTreeDepth = 64;

struct ProofNode {
  NodeId id = 0;
  Statement statement;
  Justification just;
  std::vector<NodeId> children;

  friend bool operator==(const ProofNode&, const ProofNode&) = default;
};

/// Nodes are stored densely: nodes[i].id == i.
struct ProofTree {
  Statement goal;
  NodeId root = 0;
  std::vector<ProofNode> nodes;
  /// Lemma names used by CiteLemma/SubstLemma nodes, first use in id order.
  std::vector<std::string> cites;

  std::size_t size() const { return nodes.size(); }
  bool contains(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes.size(); }
  const ProofNode& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  ProofNode& node(NodeId id) { return nodes.at(static_cast<std::size_t>(id)); }

  friend bool operator==(const ProofTree&, const ProofTree&) = default;
};

/// Recursive value form used to build and splice trees.
struct Fragment {
  Statement statement;
  Justification just;
  std::vector<Fragment> children;
};

/// Numbers the fragment in post-order; the root statement becomes the goal.
ProofTree from_fragment(const Fragment& root);
ProofTree from_fragment(const Statement& goal, const Fragment& root);
/// Subtree rooted at `id`; back-edges and dangling children are dropped.
Fragment to_fragment(const ProofTree& t, NodeId id);

void refresh_cites(ProofTree& t);

/// Drops nodes unreachable from the root and renumbers the rest in
/// post-order. Back-edges are kept and remapped. `remap` receives the new id
/// of every old node (-1 when dropped).
ProofTree canonicalize(const ProofTree& t, std::vector<NodeId>* remap = nullptr);

/// Replaces the subtree at `at` by `replacement`, then canonicalizes.
/// `new_at` receives the id of the replaced node in the result.
ProofTree splice(const ProofTree& t, NodeId at, const Fragment& replacement, NodeId* new_at = nullptr);

struct CycleError {
  enum class Kind { Cycle, Dangling, Shared };
  Kind kind = Kind::Cycle;
  NodeId from = -1;
  NodeId to = -1;

  std::string describe() const;
  friend bool operator==(const CycleError&, const CycleError&) = default;
};

struct TopoResult {
  std::vector<NodeId> order;
  std::optional<CycleError> error;
  bool ok() const { return !error; }
};

/// Post-order from the root (children before parents); unreachable nodes
/// follow in id order.
TopoResult topo_order(const ProofTree& t);

/// Parent of each node along the DFS from the root (-1 for root/unreached).
std::vector<NodeId> parents(const ProofTree& t);

/// Longest root-to-leaf path counted in nodes; back-edges ignored.
int tree_depth(const ProofTree& t);

struct Complexity {
  int syntactic = 0;
  int depth = 0;
  friend auto operator<=>(const Complexity&, const Complexity&) = default;
};
Complexity complexity(const ProofTree& t);

struct StateAction {
  Statement goal;
  Statement frontier;
  int depth = 0;
  int budget = 0;
  Justification action;
  int arity = 0;

  friend bool operator==(const StateAction&, const StateAction&) = default;
};

class CycleException : public std::runtime_error {
 public:
  explicit CycleException(const CycleError& e) : std::runtime_error(e.describe()), error(e) {}
  CycleError error;
};

/// Post-order state-action sequence. Throws CycleException.
std::vector<StateAction> linearize(const ProofTree& t);
/// Inverse of linearize on canonical trees. Throws std::invalid_argument.
ProofTree delinearize(const std::vector<StateAction>& steps);

class TreeParseError : public std::runtime_error {
 public:
  TreeParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// goal<TAB>stmt / root<TAB>id / one `id<TAB>stmt<TAB>just<TAB>children` line
/// per node in id order; children comma-separated, `-` when none.
std::string serialize(const ProofTree& t);
ProofTree parse_tree(std::string_view text);

/// Plain ordered labeled tree in preorder: parent[0] == -1.
struct OrderedTree {
  std::vector<int> labels;
  std::vector<std::vector<int>> children;
  int add(int label, int parent);
  std::size_t size() const { return labels.size(); }
};

/// Unit-cost ordered tree edit distance (Zhang-Shasha).
int tree_edit_distance(const OrderedTree& a, const OrderedTree& b);

std::string node_label(const ProofNode& n);
/// Tree reachable from the root with back-edges turned into marker leaves.
/// Labels are interned into `dictionary` so two unfoldings share ids.
OrderedTree unfold(const ProofTree& t, std::vector<std::string>& dictionary);

int tree_edit_distance(const ProofTree& a, const ProofTree& b);

}  // namespace vproof
