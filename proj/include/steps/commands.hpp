#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace steps {

// Each command reads its inputs, writes outputs atomically, prints a
// one-line machine-readable summary to stdout, and returns the process exit
// code (0, or 2 for partial synthesis). Bad input throws StepsError.
// apply_config_file fills an args struct from a JSON config; CLI flags are
// applied afterwards, so explicit flags win.

struct BuildGraphArgs {
  std::string corpus_path;
  std::string out_path;
  std::string weighting = "count";
  int min_skill_frequency = 0;
  double min_weight = -1.0;  // >= 0 prunes lighter edges
  bool serial = false;
};
void apply_config_file(const std::string& path, BuildGraphArgs& args);
int cmd_build_graph(const BuildGraphArgs& args);

struct InduceArgs {
  std::string graph_path;
  std::string out_path;
  bool force_binary = false;
  bool exhaustive_pairs = false;
  bool serial = false;
  std::optional<double> flatten_epsilon;
};
void apply_config_file(const std::string& path, InduceArgs& args);
int cmd_induce(const InduceArgs& args);

struct ScoreArgs {
  std::string taxonomy_path;
  std::string skill;
  std::vector<std::string> context;
  bool all = false;
};
void apply_config_file(const std::string& path, ScoreArgs& args);
int cmd_score(const ScoreArgs& args);

struct SelectArgs {
  std::string taxonomy_path;
  std::string out_path;
  std::string spec;  // "k:count,k:count"
  int k = 0;
  int count = 1;
  std::string policy = "greedy";
  std::string seed_rule = "entropy_weighted_sample";
  std::string seed_skill;  // non-empty forces the fixed seed rule
  double expand_gain_below = -1.0;  // >= 0 switches to the gain_below rule
  bool include_isolated = false;
  bool serial = false;
  std::optional<std::uint64_t> rng_seed;
};
void apply_config_file(const std::string& path, SelectArgs& args);
int cmd_select(const SelectArgs& args);

struct SynthesizeArgs {
  std::string tuples_path;
  std::string corpus_path;
  std::string out_path;
  std::string reject_path;  // default: <out>.rejects
  std::string mode = "steps_synthesis";
  std::string template_path;
  int refs_per_skill = 1;
  double temperature = 0.8;
  int max_tokens = 2048;
  std::string backend_url;
  std::string model = "default";
  int max_inflight = 4;
  bool dry_run = false;
  int max_attempts = 3;
  int backoff_ms = 250;
  int timeout_sec = 30;
  std::optional<std::uint64_t> rng_seed;
};
void apply_config_file(const std::string& path, SynthesizeArgs& args);
int cmd_synthesize(const SynthesizeArgs& args);

struct CurriculumArgs {
  std::string dataset_path;
  std::string out_dir;
  int epochs = 3;
  int budget = 0;
  int k_min = 1;
  int k_max = 0;  // 0: use the largest k in the dataset
  std::optional<std::uint64_t> rng_seed;
};
void apply_config_file(const std::string& path, CurriculumArgs& args);
int cmd_curriculum(const CurriculumArgs& args);

struct StatsArgs {
  std::string graph_path;
  std::string corpus_path;
};
void apply_config_file(const std::string& path, StatsArgs& args);
int cmd_stats(const StatsArgs& args);

}  // namespace steps
