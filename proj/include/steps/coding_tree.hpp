#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "steps/cooc_graph.hpp"

namespace steps {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

// One node of a coding tree: a nested community of skills. Leaves carry a
// skill id; internal nodes carry none. volume = sum of member degrees,
// boundary = total weight of edges with exactly one endpoint inside,
// entropy_term = -(boundary / vol(G)) * log2(volume / parent volume), bits.
struct TreeNode {
  NodeId id = kNoNode;
  NodeId parent = kNoNode;  // kNoNode for the root
  std::vector<NodeId> children;
  std::optional<SkillId> skill;  // present iff leaf
  double volume = 0.0;
  double boundary = 0.0;
  double entropy_term = 0.0;

  bool is_leaf() const { return skill.has_value(); }
};

// h(alpha) with the degenerate-ratio convention: a zero boundary or zero
// volume contributes 0 bits.
double entropy_term(double boundary, double volume, double parent_volume,
                    double graph_volume);

// The hierarchical skill taxonomy. Node ids index `nodes`; slots freed by
// flatten_tree stay as tombstones (id == kNoNode) so ids remain stable.
class CodingTree {
 public:
  std::vector<TreeNode> nodes;
  NodeId root = kNoNode;
  std::vector<NodeId> leaf_of;            // SkillId -> leaf node id
  std::vector<std::string> skill_names;   // SkillId -> name
  double graph_volume = 0.0;

  const TreeNode& node(NodeId id) const;
  TreeNode& node(NodeId id);
  bool alive(NodeId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < nodes.size() &&
           nodes[static_cast<std::size_t>(id)].id == id;
  }
  std::size_t alive_count() const;

  NodeId leaf(SkillId skill) const;
  std::optional<SkillId> skill_by_name(const std::string& name) const;

  // Leaf-to-root path, leaf first, root included.
  std::vector<NodeId> path_to_root(NodeId id) const;
  // Skills under a node, ascending.
  std::vector<SkillId> leaves_under(NodeId id) const;
  std::size_t leaf_count_under(NodeId id) const;
  bool is_ancestor_or_equal(NodeId ancestor, NodeId id) const;

  // Structural checks: single root, parent/child agreement, leaf <-> skill,
  // acyclicity, child volumes summing to parents. Throws on violation.
  void validate() const;
};

// Root with every skill as a direct leaf child.
CodingTree trivial_tree(const CoocGraph& g);

// Sum of entropy_term over all non-root nodes, in bits.
double structural_entropy(const CodingTree& t);

// S_e(v): cumulative entropy terms along the path from v's leaf (inclusive)
// to the root (exclusive).
double skill_entropy(const CodingTree& t, SkillId v);

// Total weight of graph edges between the leaf sets of two subtrees.
double community_cut(const CodingTree& t, const CoocGraph& g, NodeId a, NodeId b);

// Entropy change from merging root children a and b under a new internal
// node. Merging touches only the three affected terms and the sum
// telescopes to (2 cut / vol(G)) * log2((vol(a)+vol(b)) / vol(G)), which is
// exactly 0 when the cut is zero.
double merge_delta(const CodingTree& t, NodeId a, NodeId b, double cut_ab);
double merge_delta(const CodingTree& t, const CoocGraph& g, NodeId a, NodeId b);

// Applies the merge and refreshes the affected cached terms. Returns the
// new internal node's id.
NodeId apply_merge(CodingTree& t, NodeId a, NodeId b, double cut_ab);
NodeId apply_merge(CodingTree& t, const CoocGraph& g, NodeId a, NodeId b);

struct FlattenResult {
  CodingTree tree;
  int spliced = 0;
  double entropy_before = 0.0;
  double entropy_after = 0.0;
};

// Splices out internal non-root nodes whose entropy_term (measured on the
// input tree) is <= epsilon; their children re-attach to the nearest kept
// ancestor and all terms are recomputed.
FlattenResult flatten_tree(const CodingTree& t, double epsilon);

void save_taxonomy(const CodingTree& t, const std::filesystem::path& path);
CodingTree load_taxonomy(const std::filesystem::path& path);

}  // namespace steps
