#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "common/fixtures.hpp"
#include "doctest.h"
#include "json.hpp"
#include "steps/coding_tree.hpp"
#include "steps/commands.hpp"
#include "steps/cooc_graph.hpp"
#include "steps/error.hpp"
#include "steps/io.hpp"
#include "steps/selection.hpp"

using namespace steps;
using nlohmann::json;

namespace {

// Redirects stdout to a file so a command's summary line can be inspected.
class CaptureStdout {
 public:
  explicit CaptureStdout(std::filesystem::path sink) : path_(std::move(sink)) {
    std::fflush(stdout);
    saved_ = dup(fileno(stdout));
    REQUIRE(std::freopen(path_.c_str(), "w", stdout) != nullptr);
  }
  std::string finish() {
    std::fflush(stdout);
    dup2(saved_, fileno(stdout));
    close(saved_);
    saved_ = -1;
    return fixtures::slurp(path_);
  }
  ~CaptureStdout() {
    if (saved_ >= 0) finish();
  }

 private:
  std::filesystem::path path_;
  int saved_ = -1;
};

json run_json(std::filesystem::path sink, auto&& fn) {
  CaptureStdout cap(std::move(sink));
  int rc = fn();
  std::string out = cap.finish();
  REQUIRE(rc == 0);
  return json::parse(out);
}

// Five records whose pair counts reproduce the a-b-c-d path graph with
// edge weights 2, 1, 2.
void write_path_corpus(const std::filesystem::path& path) {
  fixtures::write_file(
      path,
      R"({"id":"r1","instruction":"use a and b","skills":["a","b"]})"
      "\n"
      R"({"id":"r2","instruction":"a with b again","skills":["a","b"]})"
      "\n"
      R"({"id":"r3","instruction":"bridge b to c","skills":["b","c"]})"
      "\n"
      R"({"id":"r4","instruction":"pair c with d","skills":["c","d"]})"
      "\n"
      R"({"id":"r5","instruction":"c and d once more","skills":["c","d"]})"
      "\n");
}

}  // namespace

TEST_CASE("the full command pipeline runs off one corpus") {
  fixtures::TempDir dir;
  auto corpus_path = dir.file("corpus.jsonl");
  write_path_corpus(corpus_path);

  auto graph_path = dir.file("graph.json");
  BuildGraphArgs bg;
  bg.corpus_path = corpus_path.string();
  bg.out_path = graph_path.string();
  json bg_sum = run_json(dir.file("bg.out"), [&] { return cmd_build_graph(bg); });
  CHECK(bg_sum["command"] == "build-graph");
  CHECK(bg_sum["n"] == 4);
  CHECK(bg_sum["edges"] == 3);
  CHECK(bg_sum["volume"] == doctest::Approx(10.0));
  CHECK(bg_sum["isolated"] == 0);

  auto tax_path = dir.file("taxonomy.json");
  InduceArgs in;
  in.graph_path = graph_path.string();
  in.out_path = tax_path.string();
  json in_sum = run_json(dir.file("in.out"), [&] { return cmd_induce(in); });
  CHECK(in_sum["merges"] == 2);
  CHECK(in_sum["entropy_before"] ==
        doctest::Approx(fixtures::kF1TrivialEntropy).epsilon(1e-12));
  CHECK(in_sum["entropy_after"] ==
        doctest::Approx(fixtures::kT2Entropy).epsilon(1e-12));
  CHECK(in_sum["spliced"] == 0);

  ScoreArgs sc;
  sc.taxonomy_path = tax_path.string();
  sc.skill = "a";
  {
    CaptureStdout cap(dir.file("sc.out"));
    REQUIRE(cmd_score(sc) == 0);
    CHECK(cap.finish() == "0.3644\n");
  }
  sc.context = {"b"};
  {
    CaptureStdout cap(dir.file("sc2.out"));
    REQUIRE(cmd_score(sc) == 0);
    CHECK(cap.finish() == "0.2644\n");
  }
  ScoreArgs sc_all;
  sc_all.taxonomy_path = tax_path.string();
  sc_all.all = true;
  json scores = run_json(dir.file("sc3.out"), [&] { return cmd_score(sc_all); });
  CHECK(scores["scores"].size() == 4);
  CHECK(scores["scores"]["a"] ==
        doctest::Approx(fixtures::kT2SkillEntropyA).epsilon(1e-12));

  auto tuples_path = dir.file("tuples.jsonl");
  SelectArgs sel;
  sel.taxonomy_path = tax_path.string();
  sel.out_path = tuples_path.string();
  sel.k = 2;
  sel.seed_skill = "a";
  json sel_sum = run_json(dir.file("sel.out"), [&] { return cmd_select(sel); });
  CHECK(sel_sum["tuples"] == 1);
  CHECK(sel_sum["policy"] == "greedy");
  auto tuples = load_tuples(tuples_path);
  REQUIRE(tuples.size() == 1);
  CHECK(tuples[0].skills == std::vector<std::string>{"a", "d"});

  auto requests_path = dir.file("requests.jsonl");
  SynthesizeArgs sy;
  sy.tuples_path = tuples_path.string();
  sy.corpus_path = corpus_path.string();
  sy.out_path = requests_path.string();
  sy.dry_run = true;
  sy.rng_seed = 7;
  json sy_sum = run_json(dir.file("sy.out"), [&] { return cmd_synthesize(sy); });
  CHECK(sy_sum["dry"] == 1);
  CHECK(sy_sum["written"] == 0);
  auto request_lines = io::read_lines(requests_path);
  REQUIRE(request_lines.size() == 1);
  json req = json::parse(request_lines[0]);
  CHECK(req["skills"] == json::array({"a", "d"}));
  CHECK(req["k"] == 2);

  CurriculumArgs cu;
  cu.dataset_path = requests_path.string();
  cu.out_dir = dir.file("manifests").string();
  cu.epochs = 2;
  cu.budget = 4;
  cu.k_min = 2;
  cu.rng_seed = 11;
  json cu_sum = run_json(dir.file("cu.out"), [&] { return cmd_curriculum(cu); });
  CHECK(cu_sum["k_max"] == 2);
  REQUIRE(cu_sum["files"].size() == 2);
  for (const auto& f : cu_sum["files"])
    CHECK(std::filesystem::exists(f.get<std::string>()));
}

TEST_CASE("score rejects unknown skills and missing flags") {
  fixtures::TempDir dir;
  auto corpus_path = dir.file("corpus.jsonl");
  write_path_corpus(corpus_path);
  CoocGraph g = build_cooc_graph(load_corpus(corpus_path), {});
  auto tax_path = dir.file("tax.json");
  CodingTree t = trivial_tree(g);
  apply_merge(t, g, 0, 1);
  apply_merge(t, g, 2, 3);
  save_taxonomy(t, tax_path);

  ScoreArgs sc;
  sc.taxonomy_path = tax_path.string();
  sc.skill = "zzz";
  CHECK_THROWS_WITH_AS(cmd_score(sc), doctest::Contains("unknown skill"),
                       StepsError);
  ScoreArgs none;
  none.taxonomy_path = tax_path.string();
  CHECK_THROWS_WITH_AS(cmd_score(none), doctest::Contains("--skill"),
                       StepsError);
  ScoreArgs no_tax;
  no_tax.skill = "a";
  CHECK_THROWS_WITH_AS(cmd_score(no_tax), doctest::Contains("taxonomy path"),
                       StepsError);
}

TEST_CASE("select validates its spec and seed requirements") {
  fixtures::TempDir dir;
  auto corpus_path = dir.file("corpus.jsonl");
  write_path_corpus(corpus_path);
  CoocGraph g = build_cooc_graph(load_corpus(corpus_path), {});
  auto tax_path = dir.file("tax.json");
  CodingTree t = trivial_tree(g);
  apply_merge(t, g, 0, 1);
  apply_merge(t, g, 2, 3);
  save_taxonomy(t, tax_path);

  SelectArgs base;
  base.taxonomy_path = tax_path.string();
  base.out_path = dir.file("tuples.jsonl").string();

  SelectArgs bad_spec = base;
  bad_spec.spec = "2:";
  CHECK_THROWS_AS(cmd_select(bad_spec), StepsError);
  SelectArgs neg = base;
  neg.spec = "0:3";
  CHECK_THROWS_AS(cmd_select(neg), StepsError);

  SelectArgs sampled = base;
  sampled.k = 2;
  CHECK_THROWS_WITH_AS(cmd_select(sampled), doctest::Contains("--rng-seed"),
                       StepsError);

  SelectArgs fixed_no_skill = base;
  fixed_no_skill.k = 2;
  fixed_no_skill.seed_rule = "fixed";
  CHECK_THROWS_AS(cmd_select(fixed_no_skill), StepsError);

  SelectArgs spec_run = base;
  spec_run.spec = "2:2,3:1";
  spec_run.rng_seed = 5;
  CaptureStdout cap(dir.file("sel.out"));
  REQUIRE(cmd_select(spec_run) == 0);
  cap.finish();
  auto tuples = load_tuples(base.out_path);
  CHECK(tuples.size() == 3);
}

TEST_CASE("synthesize refuses judge mode and demands inputs") {
  fixtures::TempDir dir;
  auto corpus_path = dir.file("corpus.jsonl");
  write_path_corpus(corpus_path);
  auto tuples_path = dir.file("tuples.jsonl");
  fixtures::write_file(tuples_path, R"({"skills":["a","b"],"k":2})"
                                    "\n");

  SynthesizeArgs judge;
  judge.tuples_path = tuples_path.string();
  judge.corpus_path = corpus_path.string();
  judge.out_path = dir.file("out.jsonl").string();
  judge.mode = "skillbench_judge";
  judge.rng_seed = 1;
  CHECK_THROWS_WITH_AS(cmd_synthesize(judge), doctest::Contains("judge"),
                       StepsError);

  SynthesizeArgs no_seed = judge;
  no_seed.mode = "steps_synthesis";
  no_seed.rng_seed.reset();
  CHECK_THROWS_WITH_AS(cmd_synthesize(no_seed), doctest::Contains("--rng-seed"),
                       StepsError);
}

TEST_CASE("curriculum insists on a budget and a seed") {
  fixtures::TempDir dir;
  auto data = dir.file("data.jsonl");
  fixtures::write_file(data, R"({"id":"x","k":2})"
                             "\n");
  CurriculumArgs cu;
  cu.dataset_path = data.string();
  cu.out_dir = dir.file("m").string();
  cu.rng_seed = 3;
  CHECK_THROWS_WITH_AS(cmd_curriculum(cu), doctest::Contains("--budget"),
                       StepsError);
  cu.budget = 4;
  cu.rng_seed.reset();
  CHECK_THROWS_WITH_AS(cmd_curriculum(cu), doctest::Contains("--rng-seed"),
                       StepsError);
}

TEST_CASE("stats takes exactly one input and reports both kinds") {
  fixtures::TempDir dir;
  auto corpus_path = dir.file("corpus.jsonl");
  write_path_corpus(corpus_path);
  auto graph_path = dir.file("graph.json");
  save_graph(build_cooc_graph(load_corpus(corpus_path), {}), graph_path);

  StatsArgs neither;
  CHECK_THROWS_WITH_AS(cmd_stats(neither), doctest::Contains("exactly one"),
                       StepsError);
  StatsArgs both;
  both.graph_path = graph_path.string();
  both.corpus_path = corpus_path.string();
  CHECK_THROWS_AS(cmd_stats(both), StepsError);

  StatsArgs graph_only;
  graph_only.graph_path = graph_path.string();
  json gsum = run_json(dir.file("g.out"), [&] { return cmd_stats(graph_only); });
  CHECK(gsum["n"] == 4);
  CHECK(gsum["degree_histogram"]["2"] == 2);
  CHECK(gsum["degree_histogram"]["3"] == 2);

  StatsArgs corpus_only;
  corpus_only.corpus_path = corpus_path.string();
  json csum = run_json(dir.file("c.out"), [&] { return cmd_stats(corpus_only); });
  CHECK(csum["records"] == 5);
  CHECK(csum["skills"] == 4);
}

TEST_CASE("config files fill defaults that flags can then override") {
  fixtures::TempDir dir;
  auto cfg_path = dir.file("steps.json");
  fixtures::write_file(cfg_path, R"({
    "paths": {"corpus": "/tmp/corpus.jsonl", "graph": "/tmp/graph.json"},
    "graph": {"weighting": "joint_probability", "min_skill_frequency": 2},
    "selection": {"policy": "sweet_spot", "k": 3},
    "rng_seed": 99
  })");

  BuildGraphArgs bg;
  apply_config_file(cfg_path.string(), bg);
  CHECK(bg.corpus_path == "/tmp/corpus.jsonl");
  CHECK(bg.out_path == "/tmp/graph.json");
  CHECK(bg.weighting == "joint_probability");
  CHECK(bg.min_skill_frequency == 2);
  CHECK(bg.serial == false);  // untouched

  SelectArgs sel;
  apply_config_file(cfg_path.string(), sel);
  CHECK(sel.policy == "sweet_spot");
  CHECK(sel.k == 3);
  REQUIRE(sel.rng_seed.has_value());
  CHECK(*sel.rng_seed == 99);
  sel.k = 5;  // a CLI flag lands after the config and wins
  CHECK(sel.k == 5);

  auto bad_json = dir.file("bad.json");
  fixtures::write_file(bad_json, "{nope");
  CHECK_THROWS_WITH_AS(apply_config_file(bad_json.string(), bg),
                       doctest::Contains("not valid JSON"), StepsError);

  auto bad_type = dir.file("type.json");
  fixtures::write_file(bad_type, R"({"graph": {"min_skill_frequency": "two"}})");
  CHECK_THROWS_WITH_AS(
      apply_config_file(bad_type.string(), bg),
      doctest::Contains("graph.min_skill_frequency"), StepsError);

  auto not_object = dir.file("arr.json");
  fixtures::write_file(not_object, "[1,2]");
  CHECK_THROWS_WITH_AS(apply_config_file(not_object.string(), bg),
                       doctest::Contains("JSON object"), StepsError);
}
