#include "steps/induction.hpp"

#include <algorithm>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "steps/error.hpp"

namespace steps {

namespace {

struct Cand {
  double delta = 0.0;
  NodeId a = kNoNode;
  NodeId b = kNoNode;
};

// Total order on (delta, a, b): most negative delta first, then the
// lexicographically smallest pair. Thread-count independent.
bool better(const Cand& x, const Cand& y) {
  if (x.delta != y.delta) return x.delta < y.delta;
  if (x.a != y.a) return x.a < y.a;
  return x.b < y.b;
}

using Adjacency = std::map<NodeId, std::map<NodeId, double>>;

Adjacency initial_adjacency(const CoocGraph& g) {
  Adjacency adj;
  for (const auto& [u, v, w] : g.edges()) {
    if (w <= 0.0) continue;
    adj[u][v] += w;
    adj[v][u] += w;
  }
  return adj;
}

void merge_adjacency(Adjacency& adj, NodeId a, NodeId b, NodeId p) {
  std::map<NodeId, double> merged;
  for (NodeId old : {a, b}) {
    auto it = adj.find(old);
    if (it == adj.end()) continue;
    for (const auto& [x, w] : it->second) {
      if (x != a && x != b) merged[x] += w;
    }
    adj.erase(it);
  }
  for (const auto& [x, w] : merged) {
    adj[x].erase(a);
    adj[x].erase(b);
    adj[x][p] = w;
  }
  adj[p] = std::move(merged);
}

double cut_of(const Adjacency& adj, NodeId a, NodeId b) {
  auto it = adj.find(a);
  if (it == adj.end()) return 0.0;
  auto jt = it->second.find(b);
  return jt == it->second.end() ? 0.0 : jt->second;
}

std::vector<std::pair<NodeId, NodeId>> candidate_pairs(
    const CodingTree& t, const Adjacency& adj, bool exhaustive) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  if (exhaustive) {
    std::vector<NodeId> kids;
    for (NodeId c : t.node(t.root).children)
      if (t.node(c).volume > 0.0) kids.push_back(c);
    std::sort(kids.begin(), kids.end());
    for (std::size_t i = 0; i < kids.size(); ++i)
      for (std::size_t j = i + 1; j < kids.size(); ++j)
        pairs.emplace_back(kids[i], kids[j]);
  } else {
    for (const auto& [a, nbrs] : adj)
      for (const auto& [b, w] : nbrs)
        if (b > a && w > 0.0) pairs.emplace_back(a, b);
  }
  return pairs;
}

Cand best_candidate(const CodingTree& t, const Adjacency& adj,
                    const std::vector<std::pair<NodeId, NodeId>>& pairs,
                    bool parallel) {
  Cand best;
  bool have = false;
#ifdef _OPENMP
  if (parallel && pairs.size() > 1) {
    const int nthreads = omp_get_max_threads();
    std::vector<Cand> local(static_cast<std::size_t>(nthreads));
    std::vector<char> found(static_cast<std::size_t>(nthreads), 0);
#pragma omp parallel num_threads(nthreads)
    {
      const int tid = omp_get_thread_num();
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0;
           i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
        const auto& [a, b] = pairs[static_cast<std::size_t>(i)];
        Cand c{merge_delta(t, a, b, cut_of(adj, a, b)), a, b};
        auto ti = static_cast<std::size_t>(tid);
        if (!found[ti] || better(c, local[ti])) {
          local[ti] = c;
          found[ti] = 1;
        }
      }
    }
    for (int tid = 0; tid < nthreads; ++tid) {
      auto ti = static_cast<std::size_t>(tid);
      if (found[ti] && (!have || better(local[ti], best))) {
        best = local[ti];
        have = true;
      }
    }
    return best;
  }
#else
  (void)parallel;
#endif
  for (const auto& [a, b] : pairs) {
    Cand c{merge_delta(t, a, b, cut_of(adj, a, b)), a, b};
    if (!have || better(c, best)) {
      best = c;
      have = true;
    }
  }
  return best;
}

}  // namespace

InduceResult induce_taxonomy(const CoocGraph& g, const InduceConfig& cfg) {
  if (g.vertex_count() == 0) fail_user("cannot induce a taxonomy: empty graph");

  InduceResult res;
  res.tree = trivial_tree(g);
  res.entropy_before = structural_entropy(res.tree);
  CodingTree& t = res.tree;
  Adjacency adj = initial_adjacency(g);

  // The floating-point reading of "strictly decreasing".
  constexpr double kDecrease = -1e-12;

  while (true) {
    auto pairs = candidate_pairs(t, adj, cfg.exhaustive_pairs);
    if (pairs.empty()) break;
    Cand best = best_candidate(t, adj, pairs, cfg.parallel);
    if (!(best.delta < kDecrease)) break;
    double cut = cut_of(adj, best.a, best.b);
    NodeId p = apply_merge(t, best.a, best.b, cut);
    merge_adjacency(adj, best.a, best.b, p);
    res.merges.push_back({best.a, best.b, p, best.delta});
  }

  if (cfg.force_binary) {
    while (true) {
      std::vector<NodeId> kids;
      for (NodeId c : t.node(t.root).children)
        if (t.node(c).volume > 0.0) kids.push_back(c);
      if (kids.size() <= 2) break;
      std::sort(kids.begin(), kids.end());
      std::vector<std::pair<NodeId, NodeId>> pairs;
      for (std::size_t i = 0; i < kids.size(); ++i)
        for (std::size_t j = i + 1; j < kids.size(); ++j)
          pairs.emplace_back(kids[i], kids[j]);
      Cand best = best_candidate(t, adj, pairs, cfg.parallel);
      double cut = cut_of(adj, best.a, best.b);
      NodeId p = apply_merge(t, best.a, best.b, cut);
      merge_adjacency(adj, best.a, best.b, p);
      res.merges.push_back({best.a, best.b, p, best.delta});
    }
  }

  res.entropy_after = structural_entropy(t);
  return res;
}

}  // namespace steps
