#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steps/coding_tree.hpp"
#include "steps/rng.hpp"

namespace steps {

enum class PolicyMode { greedy, sweet_spot };
enum class SeedRule { max_entropy, entropy_weighted_sample, fixed };
enum class ExpandRule { on_exhaustion, gain_below };

std::string policy_name(PolicyMode m);
PolicyMode policy_from_name(const std::string& s);

struct SelectionPolicy {
  PolicyMode mode = PolicyMode::greedy;
  SeedRule seed_rule = SeedRule::entropy_weighted_sample;
  SkillId fixed_seed = -1;             // used by SeedRule::fixed
  ExpandRule expansion = ExpandRule::on_exhaustion;
  double expand_gain_below = 0.0;      // tau, used by ExpandRule::gain_below
  bool exclude_isolated = true;
  bool parallel = true;
  int max_retries = 64;                // duplicate-tuple redraw budget
};

struct SkillTuple {
  std::vector<SkillId> skills;         // selection order, no duplicates
  std::vector<double> gains;           // gains[0] = S_e(skills[0])
  double joint = 0.0;                  // sum of gains
  PolicyMode policy = PolicyMode::greedy;
  std::optional<std::vector<NodeId>> scope_trace;  // sweet_spot only
  std::uint64_t rng_seed = 0;
};

// Deepest node whose subtree contains every given leaf; lca({x}) = leaf(x).
NodeId lca(const CodingTree& t, const std::vector<SkillId>& leaves);

// Path-term sum from leaf(x) inclusive up to lca({x} + context) exclusive.
// Empty context conditions on the root: H(x | {}) = S_e(x).
double conditional_entropy(const CodingTree& t, SkillId x,
                           const std::vector<SkillId>& context);

struct ChainResult {
  double joint = 0.0;
  std::vector<double> terms;
};

// Chain-rule sum of conditional entropies in the given order.
ChainResult joint_entropy_chain(const CodingTree& t,
                                const std::vector<SkillId>& skills);

SkillTuple greedy_select(const CodingTree& t, SkillId seed, int k,
                         const SelectionPolicy& policy = {});

// Scope-restricted variant: candidates are confined to a scope node that
// starts at the seed leaf's parent and climbs toward the root as the local
// pool runs out (or, under gain_below, once the best local gain drops
// under tau).
SkillTuple sweet_spot_select(const CodingTree& t, SkillId seed, int k,
                             const SelectionPolicy& policy = {});

// Requested tuples per k, duplicates (as skill sets) rejected and redrawn.
// Deterministic for a given rng_seed regardless of thread count.
std::vector<SkillTuple> select_batch(const CodingTree& t,
                                     const std::map<int, int>& spec,
                                     const SelectionPolicy& policy,
                                     std::uint64_t rng_seed);

struct TupleRecord {
  std::vector<std::string> skills;
  std::vector<double> gains;
  double joint = 0.0;
  std::string policy;
  std::optional<std::vector<NodeId>> scope_trace;
  int k = 0;
  std::uint64_t rng_seed = 0;
};

TupleRecord to_record(const CodingTree& t, const SkillTuple& tuple);
void save_tuples(const CodingTree& t, const std::vector<SkillTuple>& tuples,
                 const std::filesystem::path& path);
std::vector<TupleRecord> load_tuples(const std::filesystem::path& path);

}  // namespace steps
