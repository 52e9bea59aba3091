#include "steps/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>

#include "json.hpp"
#include "steps/backend.hpp"
#include "steps/coding_tree.hpp"
#include "steps/cooc_graph.hpp"
#include "steps/corpus.hpp"
#include "steps/curriculum.hpp"
#include "steps/error.hpp"
#include "steps/induction.hpp"
#include "steps/io.hpp"
#include "steps/selection.hpp"
#include "steps/synthesis.hpp"

namespace steps {

namespace {

nlohmann::json load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail_user(path + ": config is not valid JSON: " + e.what());
  }
  if (!j.is_object()) fail_user(path + ": config must be a JSON object");
  return j;
}

const nlohmann::json* dig(const nlohmann::json& j, const std::string& dotted) {
  const nlohmann::json* cur = &j;
  std::size_t start = 0;
  while (true) {
    auto dot = dotted.find('.', start);
    std::string key = dotted.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string::npos) return cur;
    start = dot + 1;
  }
}

template <typename T>
void cfg(const nlohmann::json& j, const std::string& dotted, T& out,
         const std::string& cfg_path) {
  const nlohmann::json* v = dig(j, dotted);
  if (!v) return;
  try {
    out = v->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail_user(cfg_path + ": config key '" + dotted + "' has the wrong type");
  }
}

template <typename T>
void cfg(const nlohmann::json& j, const std::string& dotted,
         std::optional<T>& out, const std::string& cfg_path) {
  T value{};
  bool present = dig(j, dotted) != nullptr;
  cfg(j, dotted, value, cfg_path);
  if (present) out = value;
}

void print_summary(const nlohmann::json& j) { std::cout << j.dump() << "\n"; }

void require(const std::string& value, const char* what) {
  if (value.empty()) fail_user(std::string("missing required ") + what);
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
  if (!seed)
    fail_user("this command draws random samples; pass --rng-seed (or set "
              "rng_seed in the config)");
  return *seed;
}

SkillId resolve_skill(const CodingTree& t, const std::string& name) {
  auto sid = t.skill_by_name(normalize_skill(name));
  if (!sid) fail_user("unknown skill: " + name);
  return *sid;
}

}  // namespace

void apply_config_file(const std::string& path, BuildGraphArgs& a) {
  auto j = load_config(path);
  cfg(j, "paths.corpus", a.corpus_path, path);
  cfg(j, "paths.graph", a.out_path, path);
  cfg(j, "graph.weighting", a.weighting, path);
  cfg(j, "graph.min_skill_frequency", a.min_skill_frequency, path);
  cfg(j, "graph.min_weight", a.min_weight, path);
  cfg(j, "serial", a.serial, path);
}

int cmd_build_graph(const BuildGraphArgs& a) {
  require(a.corpus_path, "corpus path");
  require(a.out_path, "output path");
  Corpus corpus = load_corpus(a.corpus_path);
  BuildGraphConfig config;
  config.weighting = weighting_from_name(a.weighting);
  config.min_skill_frequency = a.min_skill_frequency;
  config.parallel = !a.serial;
  CoocGraph g = build_cooc_graph(corpus, config);
  if (a.min_weight >= 0.0) g = prune_graph(g, a.min_weight);
  save_graph(g, a.out_path);
  GraphStats st = graph_stats(g);
  print_summary({{"command", "build-graph"},
                 {"n", st.n},
                 {"edges", st.edges},
                 {"volume", st.volume},
                 {"isolated", st.isolated},
                 {"out", a.out_path}});
  return 0;
}

void apply_config_file(const std::string& path, InduceArgs& a) {
  auto j = load_config(path);
  cfg(j, "paths.graph", a.graph_path, path);
  cfg(j, "paths.taxonomy", a.out_path, path);
  cfg(j, "induction.force_binary", a.force_binary, path);
  cfg(j, "induction.exhaustive_pairs", a.exhaustive_pairs, path);
  cfg(j, "induction.flatten_epsilon", a.flatten_epsilon, path);
  cfg(j, "serial", a.serial, path);
}

int cmd_induce(const InduceArgs& a) {
  require(a.graph_path, "graph path");
  require(a.out_path, "output path");
  CoocGraph g = load_graph(a.graph_path);
  InduceConfig config;
  config.force_binary = a.force_binary;
  config.exhaustive_pairs = a.exhaustive_pairs;
  config.parallel = !a.serial;
  InduceResult result = induce_taxonomy(g, config);
  int spliced = 0;
  double entropy_after = result.entropy_after;
  if (a.flatten_epsilon) {
    if (*a.flatten_epsilon < 0.0) fail_user("flatten epsilon must be >= 0");
    FlattenResult flat = flatten_tree(result.tree, *a.flatten_epsilon);
    result.tree = std::move(flat.tree);
    spliced = flat.spliced;
    entropy_after = flat.entropy_after;
  }
  save_taxonomy(result.tree, a.out_path);
  print_summary({{"command", "induce"},
                 {"merges", result.merges.size()},
                 {"entropy_before", result.entropy_before},
                 {"entropy_after", entropy_after},
                 {"spliced", spliced},
                 {"out", a.out_path}});
  return 0;
}

void apply_config_file(const std::string& path, ScoreArgs& a) {
  auto j = load_config(path);
  cfg(j, "paths.taxonomy", a.taxonomy_path, path);
}

int cmd_score(const ScoreArgs& a) {
  require(a.taxonomy_path, "taxonomy path");
  CodingTree t = load_taxonomy(a.taxonomy_path);
  if (a.all) {
    nlohmann::json scores = nlohmann::json::object();
    for (SkillId v = 0; v < static_cast<SkillId>(t.skill_names.size()); ++v)
      scores[t.skill_names[static_cast<std::size_t>(v)]] = skill_entropy(t, v);
    print_summary({{"command", "score"}, {"scores", scores}});
    return 0;
  }
  require(a.skill, "--skill (or --all)");
  SkillId x = resolve_skill(t, a.skill);
  double value;
  if (a.context.empty()) {
    value = skill_entropy(t, x);
  } else {
    std::vector<SkillId> context;
    for (const auto& name : a.context)
      context.push_back(resolve_skill(t, name));
    value = conditional_entropy(t, x, context);
  }
  std::printf("%.4f\n", value);
  return 0;
}

void apply_config_file(const std::string& path, SelectArgs& a) {
  auto j = load_config(path);
  cfg(j, "paths.taxonomy", a.taxonomy_path, path);
  cfg(j, "paths.tuples", a.out_path, path);
  cfg(j, "selection.spec", a.spec, path);
  cfg(j, "selection.k", a.k, path);
  cfg(j, "selection.count", a.count, path);
  cfg(j, "selection.policy", a.policy, path);
  cfg(j, "selection.seed_rule", a.seed_rule, path);
  cfg(j, "selection.seed_skill", a.seed_skill, path);
  cfg(j, "selection.expand_gain_below", a.expand_gain_below, path);
  cfg(j, "selection.include_isolated", a.include_isolated, path);
  cfg(j, "serial", a.serial, path);
  cfg(j, "rng_seed", a.rng_seed, path);
}

namespace {

std::map<int, int> parse_spec(const std::string& text) {
  std::map<int, int> spec;
  std::size_t start = 0;
  while (start < text.size()) {
    auto comma = text.find(',', start);
    std::string part = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    auto colon = part.find(':');
    if (colon == std::string::npos)
      fail_user("bad selection spec entry '" + part + "' (want k:count)");
    try {
      int k = std::stoi(part.substr(0, colon));
      int count = std::stoi(part.substr(colon + 1));
      spec[k] += count;
    } catch (const std::exception&) {
      fail_user("bad selection spec entry '" + part + "' (want k:count)");
    }
    start = comma == std::string::npos ? text.size() : comma + 1;
  }
  if (spec.empty()) fail_user("selection spec is empty");
  return spec;
}

SeedRule seed_rule_from_name(const std::string& s) {
  if (s == "max_entropy") return SeedRule::max_entropy;
  if (s == "entropy_weighted_sample") return SeedRule::entropy_weighted_sample;
  if (s == "fixed") return SeedRule::fixed;
  fail_user("unknown seed rule: " + s);
}

}  // namespace

int cmd_select(const SelectArgs& a) {
  require(a.taxonomy_path, "taxonomy path");
  require(a.out_path, "output path");
  CodingTree t = load_taxonomy(a.taxonomy_path);

  std::map<int, int> spec;
  if (!a.spec.empty()) {
    spec = parse_spec(a.spec);
  } else {
    if (a.k < 1) fail_user("pass --spec or --k");
    spec[a.k] = a.count;
  }

  SelectionPolicy policy;
  policy.mode = policy_from_name(a.policy);
  policy.seed_rule = seed_rule_from_name(a.seed_rule);
  policy.exclude_isolated = !a.include_isolated;
  policy.parallel = !a.serial;
  if (a.expand_gain_below >= 0.0) {
    policy.expansion = ExpandRule::gain_below;
    policy.expand_gain_below = a.expand_gain_below;
  }
  if (!a.seed_skill.empty()) {
    policy.seed_rule = SeedRule::fixed;
    policy.fixed_seed = resolve_skill(t, a.seed_skill);
  } else if (policy.seed_rule == SeedRule::fixed) {
    fail_user("the fixed seed rule needs --seed-skill");
  }

  std::uint64_t seed = 0;
  if (policy.seed_rule == SeedRule::entropy_weighted_sample)
    seed = require_seed(a.rng_seed);
  else if (a.rng_seed)
    seed = *a.rng_seed;

  auto tuples = select_batch(t, spec, policy, seed);
  save_tuples(t, tuples, a.out_path);
  print_summary({{"command", "select"},
                 {"tuples", tuples.size()},
                 {"policy", policy_name(policy.mode)},
                 {"out", a.out_path}});
  return 0;
}

void apply_config_file(const std::string& path, SynthesizeArgs& a) {
  auto j = load_config(path);
  cfg(j, "paths.tuples", a.tuples_path, path);
  cfg(j, "paths.corpus", a.corpus_path, path);
  cfg(j, "paths.dataset", a.out_path, path);
  cfg(j, "paths.rejects", a.reject_path, path);
  cfg(j, "paths.template", a.template_path, path);
  cfg(j, "synthesis.mode", a.mode, path);
  cfg(j, "synthesis.refs_per_skill", a.refs_per_skill, path);
  cfg(j, "synthesis.temperature", a.temperature, path);
  cfg(j, "synthesis.max_tokens", a.max_tokens, path);
  cfg(j, "backend.url", a.backend_url, path);
  cfg(j, "backend.model", a.model, path);
  cfg(j, "backend.max_inflight", a.max_inflight, path);
  cfg(j, "backend.dry_run", a.dry_run, path);
  cfg(j, "backend.max_attempts", a.max_attempts, path);
  cfg(j, "backend.backoff_ms", a.backoff_ms, path);
  cfg(j, "backend.timeout_sec", a.timeout_sec, path);
  cfg(j, "rng_seed", a.rng_seed, path);
}

int cmd_synthesize(const SynthesizeArgs& a) {
  require(a.tuples_path, "tuples path");
  require(a.out_path, "output path");
  RequestMode mode = mode_from_name(a.mode);
  if (mode == RequestMode::skillbench_judge)
    fail_user("judge prompts are built from task/response pairs, not tuples");

  auto tuples = load_tuples(a.tuples_path);
  PromptTemplate tmpl = a.template_path.empty()
                            ? default_template(mode)
                            : load_template_file(a.template_path);
  GenerationParams params;
  params.temperature = a.temperature;
  params.max_tokens = a.max_tokens;

  std::vector<SynthesisRequest> requests;
  if (mode == RequestMode::steps_synthesis) {
    require(a.corpus_path, "corpus path");
    std::uint64_t seed = require_seed(a.rng_seed);
    Corpus corpus = load_corpus(a.corpus_path);
    InvertedIndex index = InvertedIndex::build(corpus);
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      Rng rng = Rng::stream(seed, "synthesis", i);
      requests.push_back(assemble_prompt(tuples[i], corpus, index,
                                         a.refs_per_skill, tmpl, params, rng));
    }
  } else {
    for (const auto& tuple : tuples)
      requests.push_back(assemble_skillbench_prompt(tuple, tmpl, params));
  }

  BackendConfig backend;
  backend.url = a.backend_url;
  backend.model = a.model;
  backend.max_inflight = a.max_inflight;
  backend.dry_run = a.dry_run;
  backend.max_attempts = a.max_attempts;
  backend.backoff_ms = a.backoff_ms;
  backend.timeout_sec = a.timeout_sec;

  RunPaths paths;
  paths.dataset = a.out_path;
  paths.requests = a.out_path;  // dry runs dump requests at --out
  paths.rejects =
      a.reject_path.empty() ? a.out_path + ".rejects" : a.reject_path;

  RunReport report = run_synthesis(requests, backend, paths);
  print_summary({{"command", "synthesize"},
                 {"mode", mode_name(mode)},
                 {"total", report.total},
                 {"sent", report.sent},
                 {"written", report.written},
                 {"rejected", report.rejected},
                 {"skipped", report.skipped},
                 {"dry", report.dry},
                 {"out", a.out_path}});
  return report.rejected > 0 ? 2 : 0;
}

void apply_config_file(const std::string& path, CurriculumArgs& a) {
  auto j = load_config(path);
  cfg(j, "paths.dataset", a.dataset_path, path);
  cfg(j, "paths.manifest_dir", a.out_dir, path);
  cfg(j, "curriculum.epochs", a.epochs, path);
  cfg(j, "curriculum.budget", a.budget, path);
  cfg(j, "curriculum.k_min", a.k_min, path);
  cfg(j, "curriculum.k_max", a.k_max, path);
  cfg(j, "rng_seed", a.rng_seed, path);
}

int cmd_curriculum(const CurriculumArgs& a) {
  require(a.dataset_path, "dataset path");
  require(a.out_dir, "output directory");
  if (a.budget < 1) fail_user("pass --budget (samples per epoch)");
  std::uint64_t seed = require_seed(a.rng_seed);

  auto dataset = load_dataset_entries(a.dataset_path);
  int k_max = a.k_max;
  if (k_max == 0)
    for (const auto& entry : dataset) k_max = std::max(k_max, entry.k);
  CurriculumSchedule sched = make_schedule(a.epochs, a.budget, a.k_min, k_max);
  auto files = emit_manifests(dataset, sched, seed, a.out_dir);

  nlohmann::json names = nlohmann::json::array();
  for (const auto& f : files) names.push_back(f.string());
  print_summary({{"command", "curriculum"},
                 {"epochs", sched.epochs},
                 {"budget", sched.budget},
                 {"k_min", sched.k_min},
                 {"k_max", sched.k_max},
                 {"files", names}});
  return 0;
}

void apply_config_file(const std::string& path, StatsArgs& a) {
  auto j = load_config(path);
  cfg(j, "paths.graph", a.graph_path, path);
  cfg(j, "paths.corpus", a.corpus_path, path);
}

int cmd_stats(const StatsArgs& a) {
  if (a.graph_path.empty() == a.corpus_path.empty())
    fail_user("pass exactly one of --graph or --corpus");
  if (!a.graph_path.empty()) {
    GraphStats st = graph_stats(load_graph(a.graph_path));
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [deg, count] : st.degree_histogram)
      hist[std::to_string(deg)] = count;
    print_summary({{"command", "stats"},
                   {"n", st.n},
                   {"edges", st.edges},
                   {"volume", st.volume},
                   {"isolated", st.isolated},
                   {"degree_histogram", hist}});
    return 0;
  }
  Corpus corpus = load_corpus(a.corpus_path);
  print_summary({{"command", "stats"},
                 {"records", corpus.records.size()},
                 {"skills", corpus.vocab.size()}});
  return 0;
}

}  // namespace steps
