#include <string>
#include <vector>

#include "common/fixtures.hpp"
#include "doctest.h"
#include "steps/corpus.hpp"
#include "steps/error.hpp"
#include "steps/synthesis.hpp"

using namespace steps;

namespace {

TupleRecord make_tuple(std::vector<std::string> skills) {
  TupleRecord rec;
  rec.k = static_cast<int>(skills.size());
  rec.skills = std::move(skills);
  rec.gains.assign(static_cast<std::size_t>(rec.k), 0.1);
  rec.joint = 0.1 * rec.k;
  rec.policy = "greedy";
  return rec;
}

struct CorpusFixture {
  fixtures::TempDir dir;
  Corpus corpus;
  InvertedIndex index;

  CorpusFixture()
      : corpus((fixtures::write_three_record_corpus(dir.file("c.jsonl")),
                load_corpus(dir.file("c.jsonl")))),
        index(InvertedIndex::build(corpus)) {}
};

}  // namespace

TEST_CASE("default templates exist per mode and carry distinct ids") {
  PromptTemplate synth = default_template(RequestMode::steps_synthesis);
  PromptTemplate task = default_template(RequestMode::skillbench_task);
  PromptTemplate judge = default_template(RequestMode::skillbench_judge);
  CHECK(!synth.text.empty());
  CHECK(synth.id != task.id);
  CHECK(task.id != judge.id);
  // The judge rubric must spell out its machine-readable trailer.
  CHECK(judge.text.find("SCORE:") != std::string::npos);
}

TEST_CASE("template files take their id from the filename") {
  fixtures::TempDir dir;
  auto path = dir.file("custom_tmpl.txt");
  fixtures::write_file(path, "You write things.\n\n");
  PromptTemplate t = load_template_file(path);
  CHECK(t.id == "custom_tmpl.txt");
  CHECK(t.text == "You write things.");
  fixtures::write_file(path, "\n");
  CHECK_THROWS_AS(load_template_file(path), StepsError);
}

TEST_CASE("assembled prompts embed references and stable ids") {
  CorpusFixture fx;
  PromptTemplate tmpl = default_template(RequestMode::steps_synthesis);
  GenerationParams params;

  Rng rng1(101), rng2(101);
  InvertedIndex fresh1 = InvertedIndex::build(fx.corpus);
  InvertedIndex fresh2 = InvertedIndex::build(fx.corpus);
  SynthesisRequest r1 = assemble_prompt(make_tuple({"a", "b"}), fx.corpus,
                                        fresh1, 1, tmpl, params, rng1);
  SynthesisRequest r2 = assemble_prompt(make_tuple({"a", "b"}), fx.corpus,
                                        fresh2, 1, tmpl, params, rng2);

  CHECK(r1.request_id.size() == 16);
  CHECK(r1.request_id == r2.request_id);
  CHECK(r1.user_payload == r2.user_payload);
  CHECK(r1.user_payload.find("[skill: a]") != std::string::npos);
  CHECK(r1.user_payload.find("[skill: b]") != std::string::npos);
  CHECK(r1.skills == std::vector<std::string>{"a", "b"});
  CHECK(r1.reference_ids.size() == 2);
  CHECK(r1.k == 2);
  CHECK(r1.mode == RequestMode::steps_synthesis);

  // Any input change moves the id.
  GenerationParams hot;
  hot.temperature = 1.2;
  Rng rng3(101);
  InvertedIndex fresh3 = InvertedIndex::build(fx.corpus);
  SynthesisRequest r3 = assemble_prompt(make_tuple({"a", "b"}), fx.corpus,
                                        fresh3, 1, tmpl, hot, rng3);
  CHECK(r3.request_id != r1.request_id);
}

TEST_CASE("prompt assembly guards its preconditions") {
  CorpusFixture fx;
  PromptTemplate tmpl = default_template(RequestMode::steps_synthesis);
  GenerationParams params;
  Rng rng(7);

  CHECK_THROWS_AS(assemble_prompt(make_tuple({"a"}), fx.corpus, fx.index, 0,
                                  tmpl, params, rng),
                  StepsError);
  CHECK_THROWS_WITH_AS(
      assemble_prompt(make_tuple({"ghost"}), fx.corpus, fx.index, 1, tmpl,
                      params, rng),
      doctest::Contains("ghost"), StepsError);
}

TEST_CASE("requests round-trip through their JSON line form") {
  CorpusFixture fx;
  PromptTemplate tmpl = default_template(RequestMode::steps_synthesis);
  GenerationParams params;
  Rng rng(5);
  SynthesisRequest r = assemble_prompt(make_tuple({"a", "c"}), fx.corpus,
                                       fx.index, 1, tmpl, params, rng);
  SynthesisRequest back = request_from_json(request_to_json(r), "mem");
  CHECK(back.request_id == r.request_id);
  CHECK(back.system_prompt == r.system_prompt);
  CHECK(back.user_payload == r.user_payload);
  CHECK(back.skills == r.skills);
  CHECK(back.reference_ids == r.reference_ids);
  CHECK(back.params.temperature == r.params.temperature);
  CHECK(back.k == r.k);
}

TEST_CASE("skillbench task prompts enforce the depth range") {
  PromptTemplate tmpl = default_template(RequestMode::skillbench_task);
  GenerationParams params;
  CHECK(assemble_skillbench_prompt(make_tuple({"a", "b"}), tmpl, params).k ==
        2);
  SynthesisRequest seven = assemble_skillbench_prompt(
      make_tuple({"s1", "s2", "s3", "s4", "s5", "s6", "s7"}), tmpl, params);
  CHECK(seven.k == 7);
  // Tuple order survives into the payload.
  CHECK(seven.user_payload.find("s1") < seven.user_payload.find("s7"));
  CHECK(seven.mode == RequestMode::skillbench_task);

  CHECK_THROWS_AS(assemble_skillbench_prompt(make_tuple({"a"}), tmpl, params),
                  StepsError);
  CHECK_THROWS_AS(
      assemble_skillbench_prompt(
          make_tuple({"a", "b", "c", "d", "e", "f", "g", "h"}), tmpl, params),
      StepsError);
}

TEST_CASE("judge prompts need both texts and carry them") {
  PromptTemplate tmpl = default_template(RequestMode::skillbench_judge);
  GenerationParams params;
  SynthesisRequest r =
      assemble_judge_prompt("fix the build", "patched it", tmpl, params);
  CHECK(r.mode == RequestMode::skillbench_judge);
  CHECK(r.user_payload.find("fix the build") != std::string::npos);
  CHECK(r.user_payload.find("patched it") != std::string::npos);
  CHECK_THROWS_AS(assemble_judge_prompt("", "x", tmpl, params), StepsError);
  CHECK_THROWS_AS(assemble_judge_prompt("x", "", tmpl, params), StepsError);
}

TEST_CASE("strict conversations parse directly") {
  auto p = parse_conversation(
      R"([{"role":"user","content":"q"},{"role":"assistant","content":"a"}])");
  REQUIRE(p.ok);
  REQUIRE(p.conversation.turns.size() == 2);
  CHECK(p.conversation.turns[0].role == "user");
  CHECK(p.conversation.turns[1].content == "a");
}

TEST_CASE("relaxed parsing strips fences and requotes") {
  std::string fenced =
      "```json\n[{'role': 'user', 'content': 'what now'}, "
      "{'role': 'assistant', 'content': \"it's fine\"}]\n```";
  auto p = parse_conversation(fenced);
  REQUIRE(p.ok);
  REQUIRE(p.conversation.turns.size() == 2);
  CHECK(p.conversation.turns[0].content == "what now");
  CHECK(p.conversation.turns[1].content == "it's fine");

  std::string chatter =
      "Here is the conversation you asked for:\n"
      "[{\"role\": \"user\", \"content\": \"hi\"}, "
      "{\"role\": \"assistant\", \"content\": \"hello\"}]\nHope it helps!";
  auto q = parse_conversation(chatter);
  REQUIRE(q.ok);
  CHECK(q.conversation.turns.size() == 2);

  auto strict = parse_conversation(
      R"([{"role":"user","content":"hi"},{"role":"assistant","content":"hello"}])");
  REQUIRE(strict.ok);
  CHECK(strict.conversation.turns[0].content ==
        q.conversation.turns[0].content);
  CHECK(strict.conversation.turns[1].content ==
        q.conversation.turns[1].content);
}

TEST_CASE("conversation failures carry bucketable codes") {
  CHECK(parse_conversation("total nonsense").error_code == kErrUnparseable);
  CHECK(parse_conversation("{\"role\":\"user\"}").error_code ==
        kErrUnparseable);
  CHECK(parse_conversation("[]").error_code == kErrEmptyConversation);
  CHECK(parse_conversation(R"([{"role":"assistant","content":"a"}])")
            .error_code == kErrRoleViolation);
  CHECK(parse_conversation(
            R"([{"role":"user","content":"a"},{"role":"user","content":"b"}])")
            .error_code == kErrRoleViolation);
  CHECK(parse_conversation(R"([{"role":"narrator","content":"a"}])")
            .error_code == kErrRoleViolation);
  CHECK(parse_conversation(R"([{"role":"user","content":""}])").error_code ==
        kErrEmptyContent);
  CHECK(parse_conversation(R"([{"content":"a"}])").error_code ==
        kErrUnparseable);
}

TEST_CASE("judgments parse the trailer and axis lines") {
  std::string raw =
      "reasoning_depth: 7\ncoordination: 6.5\ntool_accuracy: 8\n"
      "Some prose in between.\nSCORE: 7.5\n";
  Judgment j = parse_judgment("t1", 3, raw);
  CHECK(j.score == 7.5);
  CHECK(j.axis_scores.at("reasoning_depth") == 7.0);
  CHECK(j.axis_scores.at("coordination") == 6.5);
  CHECK(j.k == 3);

  Judgment last = parse_judgment("t2", 2, "SCORE: 3\nSCORE: 9\n");
  CHECK(last.score == 9.0);

  CHECK_THROWS_AS(parse_judgment("t3", 2, "no trailer here"), StepsError);
  CHECK_THROWS_AS(parse_judgment("t4", 2, "SCORE: 11"), StepsError);
  CHECK_THROWS_AS(parse_judgment("t5", 2, "SCORE: -1"), StepsError);
  CHECK_THROWS_AS(parse_judgment("t6", 1, "SCORE: 5"), StepsError);
  CHECK_THROWS_AS(parse_judgment("t7", 8, "SCORE: 5"), StepsError);
}

TEST_CASE("score aggregation averages per depth then overall") {
  std::vector<Judgment> js = {
      parse_judgment("a", 2, "SCORE: 6"),
      parse_judgment("b", 2, "SCORE: 8"),
      parse_judgment("c", 4, "SCORE: 5"),
  };
  DepthTable table = aggregate_scores(js);
  CHECK(table.mean_by_k.at(2) == 7.0);
  CHECK(table.mean_by_k.at(4) == 5.0);
  CHECK(table.mean_by_k.count(3) == 0);
  CHECK(table.overall == 6.0);  // mean of the per-depth means

  std::string rendered = render_depth_table(table);
  CHECK(rendered.find("Skill depth (k)") != std::string::npos);
  CHECK(rendered.find("7.00") != std::string::npos);
  CHECK(rendered.find("5.00") != std::string::npos);
  CHECK(rendered.find("6.00") != std::string::npos);
  CHECK(rendered.find("-") != std::string::npos);  // depths with no data

  CHECK_THROWS_AS(aggregate_scores({}), StepsError);

  DepthTable single = aggregate_scores({parse_judgment("d", 5, "SCORE: 4")});
  CHECK(single.overall == 4.0);
}
