#include "reference.hpp"

#include <algorithm>
#include <cmath>

#include "steps/error.hpp"

namespace steps::ref {

namespace {

std::vector<double> degrees_from_edges(const CoocGraph& g) {
  std::vector<double> deg(static_cast<std::size_t>(g.vertex_count()), 0.0);
  for (const auto& [u, v, w] : g.edges()) {
    deg[static_cast<std::size_t>(u)] += w;
    deg[static_cast<std::size_t>(v)] += w;
  }
  return deg;
}

std::vector<std::vector<char>> leaf_masks(const CodingTree& t, int n) {
  std::vector<std::vector<char>> mask(t.nodes.size());
  // Children before parents: walk each leaf's ancestor chain instead.
  for (auto& m : mask) m.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t v = 0; v < t.leaf_of.size(); ++v) {
    NodeId cur = t.leaf_of[v];
    while (cur != kNoNode) {
      mask[static_cast<std::size_t>(cur)][v] = 1;
      cur = t.node(cur).parent;
    }
  }
  return mask;
}

int depth_of(const CodingTree& t, NodeId id) {
  int d = 0;
  for (NodeId cur = id; t.node(cur).parent != kNoNode;
       cur = t.node(cur).parent)
    ++d;
  return d;
}

}  // namespace

std::vector<NodeStats> recompute_stats(const CodingTree& t,
                                       const CoocGraph& g) {
  const int n = g.vertex_count();
  auto deg = degrees_from_edges(g);
  auto mask = leaf_masks(t, n);
  double vol_g = 0.0;
  for (double d : deg) vol_g += d;

  std::vector<NodeStats> stats(t.nodes.size());
  for (const auto& nd : t.nodes) {
    if (nd.id == kNoNode) continue;
    auto i = static_cast<std::size_t>(nd.id);
    for (int v = 0; v < n; ++v)
      if (mask[i][static_cast<std::size_t>(v)])
        stats[i].volume += deg[static_cast<std::size_t>(v)];
    for (const auto& [u, v, w] : g.edges()) {
      bool iu = mask[i][static_cast<std::size_t>(u)];
      bool iv = mask[i][static_cast<std::size_t>(v)];
      if (iu != iv) stats[i].boundary += w;
    }
  }
  for (const auto& nd : t.nodes) {
    if (nd.id == kNoNode || nd.parent == kNoNode) continue;
    auto i = static_cast<std::size_t>(nd.id);
    double vol = stats[i].volume;
    double vol_p = stats[static_cast<std::size_t>(nd.parent)].volume;
    if (stats[i].boundary <= 0.0 || vol <= 0.0 || vol_p <= 0.0 || vol_g <= 0.0)
      stats[i].term = 0.0;
    else
      stats[i].term = -(stats[i].boundary / vol_g) * std::log2(vol / vol_p);
  }
  return stats;
}

double structural_entropy(const CodingTree& t, const CoocGraph& g) {
  auto stats = recompute_stats(t, g);
  double h = 0.0;
  for (const auto& nd : t.nodes) {
    if (nd.id == kNoNode || nd.id == t.root) continue;
    h += stats[static_cast<std::size_t>(nd.id)].term;
  }
  return h;
}

double entropy_1d(const CoocGraph& g) {
  auto deg = degrees_from_edges(g);
  double vol = 0.0;
  for (double d : deg) vol += d;
  if (vol <= 0.0) return 0.0;
  double h = 0.0;
  for (double d : deg)
    if (d > 0.0) h += -(d / vol) * std::log2(d / vol);
  return h;
}

double skill_entropy(const CodingTree& t, const CoocGraph& g, SkillId v) {
  auto stats = recompute_stats(t, g);
  double h = 0.0;
  for (NodeId cur = t.leaf(v); cur != t.root; cur = t.node(cur).parent)
    h += stats[static_cast<std::size_t>(cur)].term;
  return h;
}

double merge_delta(const CodingTree& t, const CoocGraph& g, NodeId a,
                   NodeId b) {
  if (t.node(a).parent != t.root || t.node(b).parent != t.root)
    fail_internal("reference merge_delta expects root children");
  double before = structural_entropy(t, g);

  CodingTree merged = t;
  NodeId p = static_cast<NodeId>(merged.nodes.size());
  TreeNode pn;
  pn.id = p;
  pn.parent = merged.root;
  pn.children = {std::min(a, b), std::max(a, b)};
  merged.nodes.push_back(pn);
  auto& kids = merged.node(merged.root).children;
  kids.erase(std::remove_if(kids.begin(), kids.end(),
                            [&](NodeId c) { return c == a || c == b; }),
             kids.end());
  kids.push_back(p);
  merged.node(a).parent = p;
  merged.node(b).parent = p;

  return structural_entropy(merged, g) - before;
}

BestMerge best_merge(const CodingTree& t, const CoocGraph& g,
                     bool positive_cut_only) {
  std::vector<NodeId> kids = t.node(t.root).children;
  std::sort(kids.begin(), kids.end());
  BestMerge best;
  for (std::size_t i = 0; i < kids.size(); ++i) {
    for (std::size_t j = i + 1; j < kids.size(); ++j) {
      NodeId a = kids[i], b = kids[j];
      double cut = community_cut(t, g, a, b);
      if (positive_cut_only && cut <= 0.0) continue;
      // Skip isolated communities, mirroring the induction candidate rule.
      auto stats = recompute_stats(t, g);
      if (stats[static_cast<std::size_t>(a)].volume <= 0.0 ||
          stats[static_cast<std::size_t>(b)].volume <= 0.0)
        continue;
      double d = ref::merge_delta(t, g, a, b);
      bool take = !best.found || d < best.delta ||
                  (d == best.delta &&
                   (a < best.a || (a == best.a && b < best.b)));
      if (take) best = {true, d, a, b};
    }
  }
  return best;
}

NodeId lca(const CodingTree& t, const std::vector<SkillId>& leaves) {
  if (leaves.empty()) fail_internal("reference lca of empty set");
  NodeId acc = t.leaf(leaves[0]);
  int acc_depth = depth_of(t, acc);
  for (std::size_t i = 1; i < leaves.size(); ++i) {
    NodeId other = t.leaf(leaves[i]);
    int other_depth = depth_of(t, other);
    while (acc_depth > other_depth) {
      acc = t.node(acc).parent;
      --acc_depth;
    }
    while (other_depth > acc_depth) {
      other = t.node(other).parent;
      --other_depth;
    }
    while (acc != other) {
      acc = t.node(acc).parent;
      other = t.node(other).parent;
      --acc_depth;
    }
  }
  return acc;
}

double conditional_entropy(const CodingTree& t, const CoocGraph& g, SkillId x,
                           const std::vector<SkillId>& context) {
  auto stats = recompute_stats(t, g);
  NodeId delta = t.root;
  if (!context.empty()) {
    std::vector<SkillId> all = context;
    all.push_back(x);
    delta = ref::lca(t, all);
  }
  double h = 0.0;
  for (NodeId cur = t.leaf(x); cur != delta; cur = t.node(cur).parent)
    h += stats[static_cast<std::size_t>(cur)].term;
  return h;
}

}  // namespace steps::ref
