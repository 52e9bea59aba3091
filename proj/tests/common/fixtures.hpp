#pragma once

// Shared hand-computed fixtures. F1 is a 4-skill path graph; T2 is its
// two-community taxonomy. The constants below are frozen closed-form values
// so the library under test never produces its own expected answers.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "steps/coding_tree.hpp"
#include "steps/cooc_graph.hpp"

namespace fixtures {

// Edges a-b: 2, b-c: 1, c-d: 2. Degrees (2, 3, 3, 2), vol(G) = 10.
inline steps::CoocGraph f1_graph(
    steps::Weighting w = steps::Weighting::count) {
  return steps::CoocGraph::from_edges({"a", "b", "c", "d"},
                                      {{0, 1, 2.0}, {1, 2, 1.0}, {2, 3, 2.0}},
                                      w);
}

// F1 under ((a,b),(c,d)): leaves 0..3, root 4, P = node 5, Q = node 6.
inline steps::CodingTree t2_tree(const steps::CoocGraph& g) {
  steps::CodingTree t = steps::trivial_tree(g);
  steps::apply_merge(t, g, 0, 1);
  steps::apply_merge(t, g, 2, 3);
  return t;
}

inline constexpr double kF1TrivialEntropy = 1.9709505944546686;
inline constexpr double kT2Entropy = 1.1709505944546688;
inline constexpr double kT2TermCommunity = 0.1;  // both P and Q, exact
inline constexpr double kT2TermA = 0.26438561897747243;   // also d
inline constexpr double kT2TermB = 0.22108967824986187;   // also c
inline constexpr double kT2SkillEntropyA = 0.36438561897747246;
inline constexpr double kT2CondAGivenB = 0.26438561897747243;
inline constexpr double kT2CondAGivenC = 0.36438561897747246;
inline constexpr double kT2CondBGivenA = 0.22108967824986187;
inline constexpr double kT2CondCGivenA = 0.3210896782498619;
inline constexpr double kT2CondDGivenA = 0.36438561897747246;
inline constexpr double kT2JointAB = 0.58547529722733427;
inline constexpr double kF1MergeAB = -0.4;  // 0.4 * log2(1/2), exact
inline constexpr double kF1MergeBC = -0.14739311883324124;

// Records {a,b}, {a,b}, {b,c}: w(a,b)=2, w(b,c)=1, vol(G)=6.
inline void write_three_record_corpus(const std::filesystem::path& path) {
  std::ofstream out(path);
  out << R"({"id": "r1", "instruction": "draft a plan", "skills": ["a", "b"]})"
      << "\n"
      << R"({"id": "r2", "instruction": "refine the plan", "response": "done", "skills": ["a", "b"]})"
      << "\n"
      << R"({"id": "r3", "instruction": "summarize it", "skills": ["b", "c"]})"
      << "\n";
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int tries = 0; tries < 64; ++tries) {
      auto candidate =
          base / ("steps_test_" + std::to_string(rd() % 100000000));
      if (std::filesystem::create_directory(candidate)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
