#pragma once

// Slow recompute-everything implementations used to cross-check the cached
// kernels in tests and benchmarks. Every quantity here is derived from the
// edge list and tree topology alone; cached volumes, boundaries, and terms
// on the inputs are ignored.

#include <vector>

#include "steps/coding_tree.hpp"
#include "steps/cooc_graph.hpp"

namespace steps::ref {

struct NodeStats {
  double volume = 0.0;
  double boundary = 0.0;
  double term = 0.0;
};

// Indexed by node id; dead slots stay zeroed.
std::vector<NodeStats> recompute_stats(const CodingTree& t, const CoocGraph& g);

double structural_entropy(const CodingTree& t, const CoocGraph& g);

// 1-D entropy of the graph itself: -sum_v (d_v/vol) log2(d_v/vol).
double entropy_1d(const CoocGraph& g);

double skill_entropy(const CodingTree& t, const CoocGraph& g, SkillId v);

// Before/after full recomputation of a root-children merge.
double merge_delta(const CodingTree& t, const CoocGraph& g, NodeId a, NodeId b);

struct BestMerge {
  bool found = false;
  double delta = 0.0;
  NodeId a = kNoNode;
  NodeId b = kNoNode;
};

// Exhaustive argmin over root-children pairs, same total order as the fast
// path: delta, then (a, b). positive_cut_only restricts to pairs with
// cross weight > 0.
BestMerge best_merge(const CodingTree& t, const CoocGraph& g,
                     bool positive_cut_only);

NodeId lca(const CodingTree& t, const std::vector<SkillId>& leaves);

double conditional_entropy(const CodingTree& t, const CoocGraph& g, SkillId x,
                           const std::vector<SkillId>& context);

}  // namespace steps::ref
