#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "steps/commands.hpp"
#include "steps/error.hpp"

namespace {

// Config values are applied before parsing so explicit flags overwrite them.
std::string prescan_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

template <typename Args>
void maybe_apply_config(const std::string& config, Args& args) {
  if (!config.empty()) steps::apply_config_file(config, args);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skill taxonomy induction, tuple selection, and synthesis"};
  app.require_subcommand(1);
  std::string config = prescan_config(argc, argv);
  int rc = 0;

  steps::BuildGraphArgs bg;
  steps::InduceArgs in;
  steps::ScoreArgs sc;
  steps::SelectArgs se;
  steps::SynthesizeArgs sy;
  steps::CurriculumArgs cu;
  steps::StatsArgs st;

  try {
    maybe_apply_config(config, bg);
    maybe_apply_config(config, in);
    maybe_apply_config(config, sc);
    maybe_apply_config(config, se);
    maybe_apply_config(config, sy);
    maybe_apply_config(config, cu);
    maybe_apply_config(config, st);

    std::string config_dummy;

    auto* build = app.add_subcommand(
        "build-graph", "build a skill co-occurrence graph from a corpus");
    build->add_option("--corpus", bg.corpus_path, "corpus JSONL path");
    build->add_option("--out", bg.out_path, "graph output path");
    build->add_option("--weighting", bg.weighting,
                      "count or joint_probability");
    build->add_option("--min-skill-frequency", bg.min_skill_frequency,
                      "drop skills seen fewer times");
    build->add_option("--min-weight", bg.min_weight,
                      "prune edges lighter than this");
    build->add_flag("--serial", bg.serial, "disable parallel construction");
    build->add_option("--config", config_dummy, "JSON config file");
    build->callback([&] { rc = steps::cmd_build_graph(bg); });

    auto* induce = app.add_subcommand(
        "induce", "induce an entropy-minimizing taxonomy from a graph");
    induce->add_option("--graph", in.graph_path, "graph input path");
    induce->add_option("--out", in.out_path, "taxonomy output path");
    induce->add_flag("--force-binary", in.force_binary,
                     "keep merging until at most two communities remain");
    induce->add_flag("--exhaustive-pairs", in.exhaustive_pairs,
                     "score all community pairs, not just connected ones");
    induce->add_flag("--serial", in.serial, "disable parallel scoring");
    induce->add_option("--flatten-epsilon", in.flatten_epsilon,
                       "splice internal nodes with entropy terms <= epsilon");
    induce->add_option("--config", config_dummy, "JSON config file");
    induce->callback([&] { rc = steps::cmd_induce(in); });

    auto* score = app.add_subcommand(
        "score", "print skill entropy, optionally conditioned on a context");
    score->add_option("--taxonomy", sc.taxonomy_path, "taxonomy input path");
    score->add_option("--skill", sc.skill, "skill to score");
    score->add_option("--context", sc.context,
                      "already-selected skills to condition on");
    score->add_flag("--all", sc.all, "print every skill's entropy as JSON");
    score->add_option("--config", config_dummy, "JSON config file");
    score->callback([&] { rc = steps::cmd_score(sc); });

    auto* select =
        app.add_subcommand("select", "select skill tuples from a taxonomy");
    select->add_option("--taxonomy", se.taxonomy_path, "taxonomy input path");
    select->add_option("--out", se.out_path, "tuple output path (JSONL)");
    select->add_option("--spec", se.spec,
                       "per-size counts, e.g. 2:10,3:5 (overrides --k)");
    select->add_option("--k", se.k, "tuple size");
    select->add_option("--count", se.count, "tuples to draw at --k");
    select->add_option("--policy", se.policy, "greedy or sweet_spot");
    select->add_option("--seed-rule", se.seed_rule,
                       "max_entropy, entropy_weighted_sample, or fixed");
    select->add_option("--seed-skill", se.seed_skill,
                       "fixed seed skill (implies the fixed rule)");
    select->add_option("--expand-gain-below", se.expand_gain_below,
                       "widen the scope when the best gain drops below this");
    select->add_flag("--include-isolated", se.include_isolated,
                     "allow zero-volume skills as candidates");
    select->add_flag("--serial", se.serial, "disable parallel selection");
    select->add_option("--rng-seed", se.rng_seed, "seed for sampled steps");
    select->add_option("--config", config_dummy, "JSON config file");
    select->callback([&] { rc = steps::cmd_select(se); });

    auto* synth = app.add_subcommand(
        "synthesize", "assemble prompts for tuples and run them");
    synth->add_option("--tuples", sy.tuples_path, "tuple input path");
    synth->add_option("--corpus", sy.corpus_path,
                      "corpus JSONL path (reference sampling)");
    synth->add_option("--out", sy.out_path, "dataset output path (JSONL)");
    synth->add_option("--rejects", sy.reject_path,
                      "reject log path (default: <out>.rejects)");
    synth->add_option("--mode", sy.mode,
                      "steps_synthesis or skillbench_task");
    synth->add_option("--template", sy.template_path,
                      "prompt template file (default: built-in)");
    synth->add_option("--refs-per-skill", sy.refs_per_skill,
                      "reference examples sampled per skill");
    synth->add_option("--temperature", sy.temperature, "sampling temperature");
    synth->add_option("--max-tokens", sy.max_tokens, "response token cap");
    synth->add_option("--backend-url", sy.backend_url,
                      "chat completion endpoint");
    synth->add_option("--model", sy.model, "backend model name");
    synth->add_option("--max-inflight", sy.max_inflight,
                      "concurrent requests");
    synth->add_flag("--dry-run", sy.dry_run,
                    "write request JSONL to --out instead of calling out");
    synth->add_option("--max-attempts", sy.max_attempts,
                      "attempts per request before rejecting");
    synth->add_option("--backoff-ms", sy.backoff_ms,
                      "base retry backoff, doubled per attempt");
    synth->add_option("--timeout-sec", sy.timeout_sec, "per-request timeout");
    synth->add_option("--rng-seed", sy.rng_seed,
                      "seed for reference sampling");
    synth->add_option("--config", config_dummy, "JSON config file");
    synth->callback([&] { rc = steps::cmd_synthesize(sy); });

    auto* curr = app.add_subcommand(
        "curriculum", "schedule a dataset into per-epoch manifests");
    curr->add_option("--dataset", cu.dataset_path, "dataset JSONL path");
    curr->add_option("--out-dir", cu.out_dir, "manifest output directory");
    curr->add_option("--epochs", cu.epochs, "number of epochs");
    curr->add_option("--budget", cu.budget, "samples per epoch");
    curr->add_option("--k-min", cu.k_min, "smallest tuple size");
    curr->add_option("--k-max", cu.k_max,
                     "largest tuple size (default: largest in the dataset)");
    curr->add_option("--rng-seed", cu.rng_seed, "seed for manifest sampling");
    curr->add_option("--config", config_dummy, "JSON config file");
    curr->callback([&] { rc = steps::cmd_curriculum(cu); });

    auto* stats = app.add_subcommand(
        "stats", "print statistics for a graph or a corpus");
    stats->add_option("--graph", st.graph_path, "graph input path");
    stats->add_option("--corpus", st.corpus_path, "corpus JSONL path");
    stats->add_option("--config", config_dummy, "JSON config file");
    stats->callback([&] { rc = steps::cmd_stats(st); });

    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const steps::StepsError& e) {
    if (e.kind() == steps::ErrorKind::user) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}
