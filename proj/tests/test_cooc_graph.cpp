#include <cmath>

#include "common/fixtures.hpp"
#include "common/generators.hpp"
#include "doctest.h"
#include "steps/cooc_graph.hpp"
#include "steps/corpus.hpp"
#include "steps/error.hpp"
#include "steps/rng.hpp"

using namespace steps;

namespace {

Corpus three_record_corpus(const fixtures::TempDir& dir) {
  auto path = dir.file("corpus.jsonl");
  fixtures::write_three_record_corpus(path);
  return load_corpus(path);
}

}  // namespace

TEST_CASE("count weighting accumulates pair counts") {
  fixtures::TempDir dir;
  Corpus c = three_record_corpus(dir);
  CoocGraph g = build_cooc_graph(c);

  REQUIRE(g.vertex_count() == 3);
  SkillId a = *c.vocab.find("a"), b = *c.vocab.find("b"),
          cc = *c.vocab.find("c");
  CHECK(g.weight(a, b) == 2.0);
  CHECK(g.weight(b, cc) == 1.0);
  CHECK(g.weight(a, cc) == 0.0);
  CHECK(g.degree(a) == 2.0);
  CHECK(g.degree(b) == 3.0);
  CHECK(g.degree(cc) == 1.0);
  CHECK(g.total_volume() == 6.0);
  CHECK(g.edge_count() == 2);
}

TEST_CASE("joint probability weights are exact count ratios") {
  fixtures::TempDir dir;
  Corpus c = three_record_corpus(dir);
  BuildGraphConfig cfg;
  cfg.weighting = Weighting::joint_probability;
  CoocGraph g = build_cooc_graph(c, cfg);

  SkillId a = *c.vocab.find("a"), b = *c.vocab.find("b");
  // One shared division keeps ratios exact, not approximately equal.
  CHECK(g.weight(a, b) == 2.0 / 3.0);
  CHECK(g.total_volume() == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("single-skill records leave isolated vertices") {
  fixtures::TempDir dir;
  auto path = dir.file("corpus.jsonl");
  fixtures::write_file(
      path, R"({"id": "r1", "instruction": "x", "skills": ["solo"]})"
                "\n"
                R"({"id": "r2", "instruction": "y", "skills": ["a", "b"]})"
                "\n");
  CoocGraph g = build_cooc_graph(load_corpus(path));
  GraphStats st = graph_stats(g);
  CHECK(st.n == 3);
  CHECK(st.edges == 1);
  CHECK(st.isolated == 1);
  CHECK(st.degree_histogram.at(0) == 1);
  CHECK(st.degree_histogram.at(1) == 2);
}

TEST_CASE("min_skill_frequency drops rare skills before pairing") {
  fixtures::TempDir dir;
  Corpus c = three_record_corpus(dir);
  BuildGraphConfig cfg;
  cfg.min_skill_frequency = 2;  // keeps a (2) and b (3), drops c (1)
  CoocGraph g = build_cooc_graph(c, cfg);
  CHECK(g.vertex_count() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(g.total_volume() == 4.0);
}

TEST_CASE("pruning removes light edges but keeps vertices") {
  CoocGraph f1 = fixtures::f1_graph();
  CoocGraph pruned = prune_graph(f1, 1.5);
  CHECK(pruned.vertex_count() == 4);
  CHECK(pruned.edge_count() == 2);
  CHECK(pruned.total_volume() == 8.0);
  CHECK(pruned.weight(1, 2) == 0.0);

  CoocGraph same = prune_graph(f1, 0.0);
  CHECK(same.edges() == f1.edges());
}

TEST_CASE("graph save and load round-trips edges and weighting") {
  fixtures::TempDir dir;
  CoocGraph f1 = fixtures::f1_graph();
  auto path = dir.file("graph.json");
  save_graph(f1, path);
  CoocGraph back = load_graph(path);
  CHECK(back.edges() == f1.edges());
  CHECK(back.skills() == f1.skills());
  CHECK(back.weighting() == f1.weighting());
  CHECK(back.total_volume() == f1.total_volume());
}

TEST_CASE("parallel and serial construction agree") {
  fixtures::TempDir dir;
  Rng rng(2024);
  auto path = dir.file("corpus.jsonl");
  generators::write_random_corpus(path, 400, 30, rng);
  Corpus c = load_corpus(path);

  BuildGraphConfig par, ser;
  ser.parallel = false;
  CoocGraph gp = build_cooc_graph(c, par);
  CoocGraph gs = build_cooc_graph(c, ser);
  CHECK(gp.edges() == gs.edges());
  CHECK(gp.total_volume() == gs.total_volume());
}

TEST_CASE("neighbors are symmetric and degrees sum edge weights") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    CoocGraph g = generators::random_graph(20, rng);
    double vol = 0.0;
    for (SkillId v = 0; v < static_cast<SkillId>(g.vertex_count()); ++v) {
      double d = 0.0;
      for (const auto& [u, w] : g.neighbors(v)) {
        d += w;
        CHECK(g.weight(u, v) == w);
      }
      CHECK(g.degree(v) == doctest::Approx(d).epsilon(1e-12));
      vol += d;
    }
    CHECK(g.total_volume() == doctest::Approx(vol).epsilon(1e-12));
  }
}

TEST_CASE("empty corpus cannot build a graph") {
  Corpus empty;
  CHECK_THROWS_AS(build_cooc_graph(empty), StepsError);
}
