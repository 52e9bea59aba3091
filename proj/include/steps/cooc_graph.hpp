#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "steps/corpus.hpp"

namespace steps {

enum class Weighting { count, joint_probability };

const char* weighting_name(Weighting w);
Weighting weighting_from_name(const std::string& name);

// Sparse weighted undirected graph over atomic skills. Symmetric, no
// self-loops, all weights >= 0. degree(v) = sum of incident weights,
// total_volume = sum of degrees = 2 * total edge weight.
class CoocGraph {
 public:
  int vertex_count() const { return static_cast<int>(skills_.size()); }
  const std::vector<std::string>& skills() const { return skills_; }
  const std::string& skill_name(SkillId v) const { return skills_.at(static_cast<std::size_t>(v)); }

  const std::vector<std::pair<SkillId, double>>& neighbors(SkillId v) const {
    return neighbors_.at(static_cast<std::size_t>(v));
  }
  double weight(SkillId u, SkillId v) const;
  double degree(SkillId v) const { return degree_.at(static_cast<std::size_t>(v)); }
  double total_volume() const { return total_volume_; }
  std::size_t edge_count() const { return edge_count_; }
  Weighting weighting() const { return weighting_; }

  // Edges as (u, v, w) with u < v, ascending.
  std::vector<std::tuple<SkillId, SkillId, double>> edges() const;

  // Builds from an explicit edge list; validates symmetry-by-construction
  // inputs (u != v, weights >= 0, ids in range).
  static CoocGraph from_edges(
      std::vector<std::string> skills,
      const std::vector<std::tuple<SkillId, SkillId, double>>& edges,
      Weighting weighting);

 private:
  std::vector<std::string> skills_;
  std::vector<std::vector<std::pair<SkillId, double>>> neighbors_;
  std::vector<double> degree_;
  double total_volume_ = 0.0;
  std::size_t edge_count_ = 0;
  Weighting weighting_ = Weighting::count;
};

struct BuildGraphConfig {
  Weighting weighting = Weighting::count;
  // Skills appearing in fewer than this many records are dropped from the
  // vertex set before construction. 0 or 1 keeps everything.
  int min_skill_frequency = 0;
  bool parallel = true;
};

// Every unordered skill pair inside a record contributes one co-occurrence.
// Count mode stores raw counts; joint_probability divides by |records| once
// at the end, so the two modes differ by an exact global scale factor.
CoocGraph build_cooc_graph(const Corpus& corpus, const BuildGraphConfig& cfg = {});

// Removes edges with weight < min_weight; vertices stay even if isolated.
CoocGraph prune_graph(const CoocGraph& g, double min_weight);

struct GraphStats {
  int n = 0;
  std::size_t edges = 0;
  double volume = 0.0;
  int isolated = 0;
  std::map<long long, std::size_t> degree_histogram;  // floor(degree) -> count
};

GraphStats graph_stats(const CoocGraph& g);

void save_graph(const CoocGraph& g, const std::filesystem::path& path);
CoocGraph load_graph(const std::filesystem::path& path);

}  // namespace steps
