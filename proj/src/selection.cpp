#include "steps/selection.hpp"

#include <algorithm>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"
#include "steps/error.hpp"
#include "steps/io.hpp"

namespace steps {

std::string policy_name(PolicyMode m) {
  return m == PolicyMode::greedy ? "greedy" : "sweet_spot";
}

PolicyMode policy_from_name(const std::string& s) {
  if (s == "greedy") return PolicyMode::greedy;
  if (s == "sweet_spot") return PolicyMode::sweet_spot;
  fail_user("unknown policy: " + s + " (expected greedy or sweet_spot)");
}

namespace {

void check_skill(const CodingTree& t, SkillId x) {
  if (x < 0 || static_cast<std::size_t>(x) >= t.leaf_of.size())
    fail_user("unknown skill id: " + std::to_string(x));
}

NodeId lca_pair(const CodingTree& t, NodeId u, NodeId v) {
  std::vector<char> seen(t.nodes.size(), 0);
  for (NodeId cur = u; cur != kNoNode; cur = t.node(cur).parent)
    seen[static_cast<std::size_t>(cur)] = 1;
  for (NodeId cur = v; cur != kNoNode; cur = t.node(cur).parent)
    if (seen[static_cast<std::size_t>(cur)]) return cur;
  fail_internal("disjoint paths to root");
}

// Ancestor-or-self flags for the context LCA; the gain walk below stops at
// the first flagged node, which is exactly lca({x} + context).
std::vector<char> mark_ancestors(const CodingTree& t, NodeId from) {
  std::vector<char> marked(t.nodes.size(), 0);
  for (NodeId cur = from; cur != kNoNode; cur = t.node(cur).parent)
    marked[static_cast<std::size_t>(cur)] = 1;
  return marked;
}

double path_gain(const CodingTree& t, const std::vector<char>& marked,
                 SkillId x) {
  double h = 0.0;
  NodeId cur = t.leaf(x);
  while (!marked[static_cast<std::size_t>(cur)]) {
    h += t.node(cur).entropy_term;
    cur = t.node(cur).parent;
  }
  return h;
}

struct Scored {
  double gain = 0.0;
  SkillId id = -1;
};

// Max gain, ties to the smaller skill id.
bool better_pick(const Scored& x, const Scored& y) {
  if (x.gain != y.gain) return x.gain > y.gain;
  return x.id < y.id;
}

Scored best_gain(const CodingTree& t, const std::vector<char>& marked,
                 const std::vector<SkillId>& cands, bool parallel) {
  Scored best;
  bool have = false;
#ifdef _OPENMP
  if (parallel && cands.size() > 1) {
    const int nthreads = omp_get_max_threads();
    std::vector<Scored> local(static_cast<std::size_t>(nthreads));
    std::vector<char> found(static_cast<std::size_t>(nthreads), 0);
#pragma omp parallel num_threads(nthreads)
    {
      const int tid = omp_get_thread_num();
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0;
           i < static_cast<std::ptrdiff_t>(cands.size()); ++i) {
        SkillId x = cands[static_cast<std::size_t>(i)];
        Scored s{path_gain(t, marked, x), x};
        auto ti = static_cast<std::size_t>(tid);
        if (!found[ti] || better_pick(s, local[ti])) {
          local[ti] = s;
          found[ti] = 1;
        }
      }
    }
    for (int tid = 0; tid < nthreads; ++tid) {
      auto ti = static_cast<std::size_t>(tid);
      if (found[ti] && (!have || better_pick(local[ti], best))) {
        best = local[ti];
        have = true;
      }
    }
    return best;
  }
#else
  (void)parallel;
#endif
  for (SkillId x : cands) {
    Scored s{path_gain(t, marked, x), x};
    if (!have || better_pick(s, best)) {
      best = s;
      have = true;
    }
  }
  return best;
}

bool selectable(const CodingTree& t, SkillId x, const SelectionPolicy& p) {
  return !p.exclude_isolated || t.node(t.leaf(x)).volume > 0.0;
}

std::vector<SkillId> selectable_skills(const CodingTree& t,
                                       const SelectionPolicy& p) {
  std::vector<SkillId> out;
  for (SkillId x = 0; x < static_cast<SkillId>(t.leaf_of.size()); ++x)
    if (selectable(t, x, p)) out.push_back(x);
  return out;
}

void finish_tuple(const CodingTree& t, SkillTuple& tuple) {
  tuple.joint = 0.0;
  for (double g : tuple.gains) tuple.joint += g;
  (void)t;
}

}  // namespace

NodeId lca(const CodingTree& t, const std::vector<SkillId>& leaves) {
  if (leaves.empty()) fail_user("lca of an empty skill set");
  check_skill(t, leaves[0]);
  NodeId acc = t.leaf(leaves[0]);
  for (std::size_t i = 1; i < leaves.size(); ++i) {
    check_skill(t, leaves[i]);
    acc = lca_pair(t, acc, t.leaf(leaves[i]));
  }
  return acc;
}

double conditional_entropy(const CodingTree& t, SkillId x,
                           const std::vector<SkillId>& context) {
  check_skill(t, x);
  if (std::find(context.begin(), context.end(), x) != context.end())
    fail_user("conditional entropy: skill appears in its own context");
  NodeId delta = context.empty() ? t.root : lca_pair(t, lca(t, context), t.leaf(x));
  auto marked = mark_ancestors(t, delta);
  return path_gain(t, marked, x);
}

ChainResult joint_entropy_chain(const CodingTree& t,
                                const std::vector<SkillId>& skills) {
  std::set<SkillId> seen;
  for (SkillId x : skills)
    if (!seen.insert(x).second)
      fail_user("joint entropy chain: duplicate skill id " + std::to_string(x));
  ChainResult res;
  std::vector<SkillId> context;
  for (SkillId x : skills) {
    double h = conditional_entropy(t, x, context);
    res.terms.push_back(h);
    res.joint += h;
    context.push_back(x);
  }
  return res;
}

SkillTuple greedy_select(const CodingTree& t, SkillId seed, int k,
                         const SelectionPolicy& policy) {
  check_skill(t, seed);
  if (k < 1) fail_user("tuple size must be at least 1");
  std::vector<char> in_pool(t.leaf_of.size(), 0);
  int pool = 0;
  for (SkillId x = 0; x < static_cast<SkillId>(t.leaf_of.size()); ++x) {
    if (x == seed || selectable(t, x, policy)) {
      in_pool[static_cast<std::size_t>(x)] = 1;
      ++pool;
    }
  }
  if (k > pool)
    fail_user("k = " + std::to_string(k) + " exceeds the " +
              std::to_string(pool) + " selectable skills");

  SkillTuple tuple;
  tuple.policy = PolicyMode::greedy;
  tuple.skills = {seed};
  tuple.gains = {skill_entropy(t, seed)};
  std::vector<char> taken(t.leaf_of.size(), 0);
  taken[static_cast<std::size_t>(seed)] = 1;

  while (static_cast<int>(tuple.skills.size()) < k) {
    auto marked = mark_ancestors(t, lca(t, tuple.skills));
    std::vector<SkillId> cands;
    for (SkillId x = 0; x < static_cast<SkillId>(t.leaf_of.size()); ++x)
      if (in_pool[static_cast<std::size_t>(x)] &&
          !taken[static_cast<std::size_t>(x)])
        cands.push_back(x);
    Scored best = best_gain(t, marked, cands, policy.parallel);
    tuple.skills.push_back(best.id);
    tuple.gains.push_back(best.gain);
    taken[static_cast<std::size_t>(best.id)] = 1;
  }
  finish_tuple(t, tuple);
  return tuple;
}

SkillTuple sweet_spot_select(const CodingTree& t, SkillId seed, int k,
                             const SelectionPolicy& policy) {
  check_skill(t, seed);
  if (k < 1) fail_user("tuple size must be at least 1");

  SkillTuple tuple;
  tuple.policy = PolicyMode::sweet_spot;
  tuple.skills = {seed};
  tuple.gains = {skill_entropy(t, seed)};
  std::vector<char> taken(t.leaf_of.size(), 0);
  taken[static_cast<std::size_t>(seed)] = 1;

  NodeId scope = t.node(t.leaf(seed)).parent;
  if (scope == kNoNode) scope = t.root;
  tuple.scope_trace = std::vector<NodeId>{scope};

  while (static_cast<int>(tuple.skills.size()) < k) {
    std::vector<SkillId> cands;
    for (SkillId x : t.leaves_under(scope))
      if (!taken[static_cast<std::size_t>(x)] && selectable(t, x, policy))
        cands.push_back(x);
    if (cands.empty()) {
      if (scope == t.root)
        fail_user("k = " + std::to_string(k) +
                  " exceeds the skills reachable from the seed's scope");
      scope = t.node(scope).parent;
      continue;
    }
    auto marked = mark_ancestors(t, lca(t, tuple.skills));
    Scored best = best_gain(t, marked, cands, policy.parallel);
    if (policy.expansion == ExpandRule::gain_below &&
        best.gain < policy.expand_gain_below && scope != t.root) {
      scope = t.node(scope).parent;
      continue;
    }
    tuple.skills.push_back(best.id);
    tuple.gains.push_back(best.gain);
    tuple.scope_trace->push_back(scope);
    taken[static_cast<std::size_t>(best.id)] = 1;
  }
  finish_tuple(t, tuple);
  return tuple;
}

namespace {

SkillTuple run_policy(const CodingTree& t, SkillId seed, int k,
                      const SelectionPolicy& policy) {
  return policy.mode == PolicyMode::greedy
             ? greedy_select(t, seed, k, policy)
             : sweet_spot_select(t, seed, k, policy);
}

struct BatchJob {
  int k = 0;
  int index = 0;
};

std::uint64_t job_stream_index(const BatchJob& job, int attempt) {
  auto k = static_cast<std::uint64_t>(job.k);
  auto i = static_cast<std::uint64_t>(job.index);
  return (k * 1000003ULL + i) * 131ULL + static_cast<std::uint64_t>(attempt);
}

struct SeedPicker {
  std::vector<SkillId> pool;        // selectable skills
  std::vector<double> weights;      // S_e per pool entry
  std::vector<SkillId> ranking;     // pool sorted by (S_e desc, id asc)
  double total_weight = 0.0;

  SeedPicker(const CodingTree& t, const SelectionPolicy& policy) {
    pool = selectable_skills(t, policy);
    for (SkillId x : pool) {
      double w = skill_entropy(t, x);
      weights.push_back(w);
      total_weight += w;
    }
    ranking = pool;
    std::sort(ranking.begin(), ranking.end(), [&](SkillId a, SkillId b) {
      double sa = skill_entropy(t, a), sb = skill_entropy(t, b);
      if (sa != sb) return sa > sb;
      return a < b;
    });
  }

  SkillId pick(const SelectionPolicy& policy, const BatchJob& job, int attempt,
               Rng& rng) const {
    switch (policy.seed_rule) {
      case SeedRule::fixed:
        return policy.fixed_seed;
      case SeedRule::max_entropy: {
        auto pos = (static_cast<std::uint64_t>(job.index) +
                    static_cast<std::uint64_t>(attempt)) %
                   ranking.size();
        return ranking[static_cast<std::size_t>(pos)];
      }
      case SeedRule::entropy_weighted_sample:
        if (total_weight <= 0.0)
          return pool[static_cast<std::size_t>(rng.next_below(pool.size()))];
        return pool[weights.empty() ? 0 : rng.weighted_index(weights)];
    }
    fail_internal("unhandled seed rule");
  }
};

}  // namespace

std::vector<SkillTuple> select_batch(const CodingTree& t,
                                     const std::map<int, int>& spec,
                                     const SelectionPolicy& policy,
                                     std::uint64_t rng_seed) {
  if (spec.empty()) fail_user("selection spec is empty");
  for (const auto& [k, count] : spec) {
    if (k < 1) fail_user("selection spec: k must be at least 1");
    if (count < 0) fail_user("selection spec: negative count for k=" +
                             std::to_string(k));
  }
  if (policy.seed_rule == SeedRule::fixed) check_skill(t, policy.fixed_seed);

  SeedPicker picker(t, policy);
  if (picker.pool.empty()) fail_user("no selectable skills in the taxonomy");

  std::vector<BatchJob> jobs;
  for (const auto& [k, count] : spec)
    for (int i = 0; i < count; ++i) jobs.push_back({k, i});

  auto attempt_tuple = [&](const BatchJob& job, int attempt) {
    Rng rng = Rng::stream(rng_seed, "select", job_stream_index(job, attempt));
    SkillId seed = picker.pick(policy, job, attempt, rng);
    SkillTuple tuple = run_policy(t, seed, job.k, policy);
    tuple.rng_seed = rng_seed;
    return tuple;
  };

  // Attempt 0 per job is independent of every other job, so it can run in
  // parallel; the ordered dedup pass below reproduces the serial outcome.
  std::vector<SkillTuple> first(jobs.size());
#ifdef _OPENMP
  if (policy.parallel && jobs.size() > 1) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs.size());
         ++j)
      first[static_cast<std::size_t>(j)] =
          attempt_tuple(jobs[static_cast<std::size_t>(j)], 0);
  } else
#endif
  {
    for (std::size_t j = 0; j < jobs.size(); ++j)
      first[j] = attempt_tuple(jobs[j], 0);
  }

  std::vector<SkillTuple> out;
  std::set<std::vector<SkillId>> emitted;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    SkillTuple tuple = first[j];
    int attempt = 0;
    while (true) {
      std::vector<SkillId> key = tuple.skills;
      std::sort(key.begin(), key.end());
      if (emitted.insert(key).second) break;
      if (++attempt > policy.max_retries)
        fail_user("retry budget exhausted: the combination space is too "
                  "small for the requested tuple counts");
      tuple = attempt_tuple(jobs[j], attempt);
    }
    out.push_back(std::move(tuple));
  }
  return out;
}

TupleRecord to_record(const CodingTree& t, const SkillTuple& tuple) {
  TupleRecord rec;
  for (SkillId x : tuple.skills)
    rec.skills.push_back(t.skill_names[static_cast<std::size_t>(x)]);
  rec.gains = tuple.gains;
  rec.joint = tuple.joint;
  rec.policy = policy_name(tuple.policy);
  rec.scope_trace = tuple.scope_trace;
  rec.k = static_cast<int>(tuple.skills.size());
  rec.rng_seed = tuple.rng_seed;
  return rec;
}

void save_tuples(const CodingTree& t, const std::vector<SkillTuple>& tuples,
                 const std::filesystem::path& path) {
  std::string body;
  for (const auto& tuple : tuples) {
    TupleRecord rec = to_record(t, tuple);
    nlohmann::json j;
    j["skills"] = rec.skills;
    j["gains"] = rec.gains;
    j["joint"] = rec.joint;
    j["policy"] = rec.policy;
    j["scope_trace"] = rec.scope_trace.has_value()
                           ? nlohmann::json(*rec.scope_trace)
                           : nlohmann::json(nullptr);
    j["k"] = rec.k;
    j["rng_seed"] = rec.rng_seed;
    body += j.dump();
    body += '\n';
  }
  io::atomic_write(path, body);
}

std::vector<TupleRecord> load_tuples(const std::filesystem::path& path) {
  std::vector<TupleRecord> out;
  io::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_user(where() + ": not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("skills") || !j["skills"].is_array() ||
        j["skills"].empty())
      fail_user(where() + ": tuple needs a non-empty skills array");
    TupleRecord rec;
    for (const auto& s : j["skills"]) {
      if (!s.is_string() || s.get<std::string>().empty())
        fail_user(where() + ": skills must be non-empty strings");
      rec.skills.push_back(s.get<std::string>());
    }
    if (j.contains("gains")) {
      if (!j["gains"].is_array())
        fail_user(where() + ": gains must be an array");
      for (const auto& g : j["gains"]) {
        if (!g.is_number()) fail_user(where() + ": gains must be numbers");
        rec.gains.push_back(g.get<double>());
      }
      if (rec.gains.size() != rec.skills.size())
        fail_user(where() + ": gains and skills lengths differ");
    }
    if (j.contains("joint") && j["joint"].is_number())
      rec.joint = j["joint"].get<double>();
    if (j.contains("policy") && j["policy"].is_string())
      rec.policy = j["policy"].get<std::string>();
    if (j.contains("scope_trace") && j["scope_trace"].is_array()) {
      std::vector<NodeId> trace;
      for (const auto& n : j["scope_trace"]) {
        if (!n.is_number_integer())
          fail_user(where() + ": scope_trace must hold node ids");
        trace.push_back(n.get<NodeId>());
      }
      rec.scope_trace = std::move(trace);
    }
    rec.k = j.contains("k") && j["k"].is_number_integer()
                ? j["k"].get<int>()
                : static_cast<int>(rec.skills.size());
    if (rec.k != static_cast<int>(rec.skills.size()))
      fail_user(where() + ": k disagrees with the skills array");
    if (j.contains("rng_seed") && j["rng_seed"].is_number())
      rec.rng_seed = j["rng_seed"].get<std::uint64_t>();
    out.push_back(std::move(rec));
  });
  if (out.empty()) fail_user(path.string() + ": no tuples found");
  return out;
}

}  // namespace steps
