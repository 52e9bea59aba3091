#pragma once

#include <vector>

#include "steps/coding_tree.hpp"
#include "steps/cooc_graph.hpp"

namespace steps {

struct InduceConfig {
  bool force_binary = false;
  // Score all root-children pairs instead of only positive-cut pairs.
  bool exhaustive_pairs = false;
  bool parallel = true;
};

struct MergeStep {
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  NodeId merged = kNoNode;
  double delta = 0.0;
};

struct InduceResult {
  CodingTree tree;
  std::vector<MergeStep> merges;
  double entropy_before = 0.0;
  double entropy_after = 0.0;
};

// Bottom-up agglomeration: start from the trivial tree, repeatedly merge the
// root-children pair with the most negative delta while one exists. Ties go
// to the lexicographically smallest (min id, then max id) pair. Isolated
// communities are never merged. force_binary then continues with
// least-increase merges until two connected communities remain.
InduceResult induce_taxonomy(const CoocGraph& g, const InduceConfig& cfg = {});

}  // namespace steps
