#include "steps/cooc_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "steps/error.hpp"
#include "steps/io.hpp"

namespace steps {

using nlohmann::json;

const char* weighting_name(Weighting w) {
  return w == Weighting::count ? "count" : "joint_probability";
}

Weighting weighting_from_name(const std::string& name) {
  if (name == "count") return Weighting::count;
  if (name == "joint_probability") return Weighting::joint_probability;
  fail_user("unknown weighting mode '" + name + "'");
}

double CoocGraph::weight(SkillId u, SkillId v) const {
  const auto& nbrs = neighbors(u);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), v,
                             [](const auto& p, SkillId id) { return p.first < id; });
  if (it != nbrs.end() && it->first == v) return it->second;
  return 0.0;
}

std::vector<std::tuple<SkillId, SkillId, double>> CoocGraph::edges() const {
  std::vector<std::tuple<SkillId, SkillId, double>> out;
  out.reserve(edge_count_);
  for (SkillId u = 0; u < vertex_count(); ++u) {
    for (const auto& [v, w] : neighbors_[static_cast<std::size_t>(u)]) {
      if (u < v) out.emplace_back(u, v, w);
    }
  }
  return out;
}

CoocGraph CoocGraph::from_edges(
    std::vector<std::string> skills,
    const std::vector<std::tuple<SkillId, SkillId, double>>& edges,
    Weighting weighting) {
  CoocGraph g;
  g.skills_ = std::move(skills);
  g.weighting_ = weighting;
  const int n = g.vertex_count();
  g.neighbors_.assign(static_cast<std::size_t>(n), {});
  for (const auto& [u, v, w] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) fail_user("edge endpoint out of range");
    if (u == v) fail_user("self-loops are not allowed");
    if (w < 0.0) fail_user("negative edge weight");
    g.neighbors_[static_cast<std::size_t>(u)].emplace_back(v, w);
    g.neighbors_[static_cast<std::size_t>(v)].emplace_back(u, w);
  }
  g.degree_.assign(static_cast<std::size_t>(n), 0.0);
  g.total_volume_ = 0.0;
  g.edge_count_ = edges.size();
  for (int v = 0; v < n; ++v) {
    auto& nbrs = g.neighbors_[static_cast<std::size_t>(v)];
    std::sort(nbrs.begin(), nbrs.end());
    for (std::size_t i = 1; i < nbrs.size(); ++i) {
      if (nbrs[i].first == nbrs[i - 1].first) fail_user("duplicate edge in edge list");
    }
    double d = 0.0;
    for (const auto& [_, w] : nbrs) d += w;
    g.degree_[static_cast<std::size_t>(v)] = d;
    g.total_volume_ += d;
  }
  return g;
}

namespace {

// Packed (u, v) with u < v.
inline std::uint64_t pack_pair(SkillId u, SkillId v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

using PairCounts = std::unordered_map<std::uint64_t, std::int64_t>;

void count_record(const std::vector<SkillId>& skills,
                  const std::vector<SkillId>& remap, PairCounts& counts) {
  // skills are sorted and unique; remap[v] < 0 means the skill was filtered.
  for (std::size_t i = 0; i < skills.size(); ++i) {
    SkillId u = remap[static_cast<std::size_t>(skills[i])];
    if (u < 0) continue;
    for (std::size_t j = i + 1; j < skills.size(); ++j) {
      SkillId v = remap[static_cast<std::size_t>(skills[j])];
      if (v < 0) continue;
      ++counts[pack_pair(std::min(u, v), std::max(u, v))];
    }
  }
}

}  // namespace

CoocGraph build_cooc_graph(const Corpus& corpus, const BuildGraphConfig& cfg) {
  if (corpus.records.empty()) fail_user("empty corpus");

  // Vertex set after optional rare-skill filtering; ids stay dense.
  std::vector<SkillId> remap(corpus.vocab.size(), -1);
  std::vector<std::string> kept_names;
  for (std::size_t s = 0; s < corpus.vocab.size(); ++s) {
    if (corpus.vocab.frequency(static_cast<SkillId>(s)) >= std::max(1, cfg.min_skill_frequency)) {
      remap[s] = static_cast<SkillId>(kept_names.size());
      kept_names.push_back(corpus.vocab.name(static_cast<SkillId>(s)));
    }
  }

  // Counts are integers, so shard merges are exact and the result does not
  // depend on the number of threads.
  PairCounts counts;
  const std::size_t nrec = corpus.records.size();
#ifdef _OPENMP
  if (cfg.parallel) {
    int max_threads = omp_get_max_threads();
    std::vector<PairCounts> partial(static_cast<std::size_t>(max_threads));
#pragma omp parallel
    {
      PairCounts& local = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
      for (std::int64_t r = 0; r < static_cast<std::int64_t>(nrec); ++r) {
        count_record(corpus.records[static_cast<std::size_t>(r)].skills, remap, local);
      }
    }
    for (const auto& local : partial) {
      for (const auto& [key, c] : local) counts[key] += c;
    }
  } else
#endif
  {
    for (std::size_t r = 0; r < nrec; ++r) {
      count_record(corpus.records[r].skills, remap, counts);
    }
  }

  std::vector<std::tuple<SkillId, SkillId, double>> edges;
  edges.reserve(counts.size());
  const double scale = cfg.weighting == Weighting::joint_probability
                           ? 1.0 / static_cast<double>(nrec)
                           : 1.0;
  for (const auto& [key, c] : counts) {
    SkillId u = static_cast<SkillId>(key >> 32);
    SkillId v = static_cast<SkillId>(key & 0xffffffffULL);
    double w = cfg.weighting == Weighting::joint_probability
                   ? static_cast<double>(c) * scale
                   : static_cast<double>(c);
    edges.emplace_back(u, v, w);
  }
  std::sort(edges.begin(), edges.end());
  return CoocGraph::from_edges(std::move(kept_names), edges, cfg.weighting);
}

CoocGraph prune_graph(const CoocGraph& g, double min_weight) {
  if (min_weight < 0.0) fail_user("min_weight must be >= 0");
  std::vector<std::tuple<SkillId, SkillId, double>> kept;
  for (const auto& [u, v, w] : g.edges()) {
    if (w >= min_weight) kept.emplace_back(u, v, w);
  }
  return CoocGraph::from_edges(g.skills(), kept, g.weighting());
}

GraphStats graph_stats(const CoocGraph& g) {
  GraphStats stats;
  stats.n = g.vertex_count();
  stats.edges = g.edge_count();
  stats.volume = g.total_volume();
  for (SkillId v = 0; v < g.vertex_count(); ++v) {
    double d = g.degree(v);
    if (g.neighbors(v).empty()) ++stats.isolated;
    ++stats.degree_histogram[static_cast<long long>(std::floor(d))];
  }
  return stats;
}

void save_graph(const CoocGraph& g, const std::filesystem::path& path) {
  json doc;
  doc["n"] = g.vertex_count();
  doc["skills"] = g.skills();
  json edges = json::array();
  for (const auto& [u, v, w] : g.edges()) {
    edges.push_back(json::array({u, v, w}));
  }
  doc["edges"] = std::move(edges);
  doc["weighting"] = weighting_name(g.weighting());
  io::atomic_write(path, doc.dump() + "\n");
}

CoocGraph load_graph(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    fail_user("malformed graph file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("n") || !doc.contains("skills") ||
      !doc.contains("edges") || !doc.contains("weighting")) {
    fail_user("graph file missing required keys: " + path.string());
  }
  auto skills = doc["skills"].get<std::vector<std::string>>();
  if (static_cast<int>(skills.size()) != doc["n"].get<int>()) {
    fail_user("graph file: 'n' disagrees with skills array");
  }
  std::vector<std::tuple<SkillId, SkillId, double>> edges;
  for (const auto& e : doc["edges"]) {
    if (!e.is_array() || e.size() != 3) fail_user("graph file: bad edge entry");
    SkillId u = e[0].get<SkillId>();
    SkillId v = e[1].get<SkillId>();
    if (u >= v) fail_user("graph file: edges must be stored once with u < v");
    edges.emplace_back(u, v, e[2].get<double>());
  }
  return CoocGraph::from_edges(std::move(skills), edges,
                               weighting_from_name(doc["weighting"].get<std::string>()));
}

}  // namespace steps
