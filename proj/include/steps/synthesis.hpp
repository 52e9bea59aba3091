#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steps/corpus.hpp"
#include "steps/rng.hpp"
#include "steps/selection.hpp"

namespace steps {

enum class RequestMode { steps_synthesis, skillbench_task, skillbench_judge };

std::string mode_name(RequestMode m);
RequestMode mode_from_name(const std::string& s);

struct GenerationParams {
  double temperature = 0.8;
  int max_tokens = 2048;
};

struct SynthesisRequest {
  std::string request_id;  // 16 hex chars, stable hash of the inputs
  std::string system_prompt;
  std::string user_payload;
  GenerationParams params;
  RequestMode mode = RequestMode::steps_synthesis;
  std::vector<std::string> skills;
  std::vector<std::string> reference_ids;
  int k = 0;
};

std::string request_to_json(const SynthesisRequest& req);
SynthesisRequest request_from_json(const std::string& line,
                                   const std::string& where);

struct PromptTemplate {
  std::string id;
  std::string text;  // system prompt body
};

PromptTemplate default_template(RequestMode mode);
PromptTemplate load_template_file(const std::filesystem::path& path);

// Samples refs_per_skill reference records per tuple skill (frequency-aware,
// mutating the index usage counters) and renders the synthesis request.
SynthesisRequest assemble_prompt(const TupleRecord& tuple, const Corpus& corpus,
                                 InvertedIndex& index, int refs_per_skill,
                                 const PromptTemplate& tmpl,
                                 const GenerationParams& params, Rng& rng);

SynthesisRequest assemble_skillbench_prompt(const TupleRecord& tuple,
                                            const PromptTemplate& tmpl,
                                            const GenerationParams& params);

SynthesisRequest assemble_judge_prompt(const std::string& task,
                                       const std::string& response,
                                       const PromptTemplate& tmpl,
                                       const GenerationParams& params);

struct Turn {
  std::string role;  // "user" or "assistant"
  std::string content;
};

struct Conversation {
  std::vector<Turn> turns;
};

// Error codes for bucketing rejects.
inline constexpr const char* kErrUnparseable = "unparseable";
inline constexpr const char* kErrEmptyConversation = "empty_conversation";
inline constexpr const char* kErrRoleViolation = "role_violation";
inline constexpr const char* kErrEmptyContent = "empty_content";

struct ConversationParse {
  bool ok = false;
  Conversation conversation;
  std::string error_code;
};

// Strict JSON array of {"role","content"} first; falls back to a relaxed
// reading that tolerates code fences and single-quoted strings.
ConversationParse parse_conversation(const std::string& raw);

struct Judgment {
  std::string task_id;
  int k = 0;
  double score = 0.0;  // 0..10
  std::map<std::string, double> axis_scores;
  std::string raw;
};

// Expects a final "SCORE: <value>" trailer; optional "<axis>: <value>" lines.
Judgment parse_judgment(const std::string& task_id, int k,
                        const std::string& raw);

struct DepthTable {
  std::map<int, double> mean_by_k;  // only depths with judgments
  double overall = 0.0;             // mean of the per-depth means
};

DepthTable aggregate_scores(const std::vector<Judgment>& judgments);
std::string render_depth_table(const DepthTable& table);

}  // namespace steps
