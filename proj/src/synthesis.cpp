#include "steps/synthesis.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>

#include "json.hpp"
#include "steps/error.hpp"
#include "steps/io.hpp"

namespace steps {

std::string mode_name(RequestMode m) {
  switch (m) {
    case RequestMode::steps_synthesis: return "steps_synthesis";
    case RequestMode::skillbench_task: return "skillbench_task";
    case RequestMode::skillbench_judge: return "skillbench_judge";
  }
  fail_internal("unhandled request mode");
}

RequestMode mode_from_name(const std::string& s) {
  if (s == "steps_synthesis") return RequestMode::steps_synthesis;
  if (s == "skillbench_task") return RequestMode::skillbench_task;
  if (s == "skillbench_judge") return RequestMode::skillbench_judge;
  fail_user("unknown request mode: " + s);
}

std::string request_to_json(const SynthesisRequest& req) {
  nlohmann::json j;
  j["request_id"] = req.request_id;
  j["mode"] = mode_name(req.mode);
  j["k"] = req.k;
  j["skills"] = req.skills;
  j["reference_ids"] = req.reference_ids;
  j["system_prompt"] = req.system_prompt;
  j["user_payload"] = req.user_payload;
  j["params"] = {{"temperature", req.params.temperature},
                 {"max_tokens", req.params.max_tokens}};
  return j.dump();
}

SynthesisRequest request_from_json(const std::string& line,
                                   const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail_user(where + ": not valid JSON: " + e.what());
  }
  SynthesisRequest req;
  for (const char* key : {"request_id", "mode", "system_prompt", "user_payload"})
    if (!j.contains(key) || !j[key].is_string())
      fail_user(where + ": request missing " + std::string(key));
  req.request_id = j["request_id"].get<std::string>();
  req.mode = mode_from_name(j["mode"].get<std::string>());
  req.system_prompt = j["system_prompt"].get<std::string>();
  req.user_payload = j["user_payload"].get<std::string>();
  if (j.contains("k") && j["k"].is_number_integer()) req.k = j["k"].get<int>();
  if (j.contains("skills") && j["skills"].is_array())
    for (const auto& s : j["skills"])
      if (s.is_string()) req.skills.push_back(s.get<std::string>());
  if (j.contains("reference_ids") && j["reference_ids"].is_array())
    for (const auto& s : j["reference_ids"])
      if (s.is_string()) req.reference_ids.push_back(s.get<std::string>());
  if (j.contains("params") && j["params"].is_object()) {
    const auto& p = j["params"];
    if (p.contains("temperature") && p["temperature"].is_number())
      req.params.temperature = p["temperature"].get<double>();
    if (p.contains("max_tokens") && p["max_tokens"].is_number_integer())
      req.params.max_tokens = p["max_tokens"].get<int>();
  }
  return req;
}

PromptTemplate default_template(RequestMode mode) {
  switch (mode) {
    case RequestMode::steps_synthesis:
      return {"steps-default",
              "You are a training-data architect. Given a set of target "
              "skills and reference examples for each, invent one shared "
              "scenario in which every listed skill is genuinely exercised, "
              "then write a multi-turn conversation between a user and an "
              "assistant set in that scenario. The conversation must need "
              "all the skills together, not one after another in isolation; "
              "keep facts consistent across turns; no filler turns. Output "
              "a strict JSON array of objects, each with \"role\" and "
              "\"content\" keys, roles alternating and starting with "
              "\"user\". Output the JSON array only, with no commentary."};
    case RequestMode::skillbench_task:
      return {"skillbench-task-default",
              "You design evaluation tasks for tool-using agents. Build one "
              "closed-loop scenario that can only be completed by combining "
              "every skill listed by the user. Describe the environment, "
              "the user goal, the tools available, and a verifiable success "
              "condition. The task must force the listed skills to "
              "interact; a solution exercising them independently should "
              "fail the success condition. Output the task description as "
              "plain text."};
    case RequestMode::skillbench_judge:
      return {"skillbench-judge-default",
              "You grade an agent's response to a multi-skill task. Score "
              "three axes from 0 to 10: reasoning_depth (quality of "
              "multi-step inference), coordination (how well distinct "
              "skills are combined toward the goal), and tool_accuracy "
              "(correctness of tool use). Write one line per axis as "
              "'axis_name: value'. Finish with a final line "
              "'SCORE: <overall 0-10>'."};
  }
  fail_internal("unhandled template mode");
}

PromptTemplate load_template_file(const std::filesystem::path& path) {
  PromptTemplate t;
  t.id = path.filename().string();
  t.text = io::read_file(path);
  while (!t.text.empty() && (t.text.back() == '\n' || t.text.back() == '\r'))
    t.text.pop_back();
  if (t.text.empty()) fail_user(path.string() + ": empty template");
  return t;
}

namespace {

std::string hash_id(const nlohmann::json& canonical) {
  std::uint64_t h = fnv1a64(canonical.dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json params_json(const GenerationParams& p) {
  return {{"temperature", p.temperature}, {"max_tokens", p.max_tokens}};
}

}  // namespace

SynthesisRequest assemble_prompt(const TupleRecord& tuple, const Corpus& corpus,
                                 InvertedIndex& index, int refs_per_skill,
                                 const PromptTemplate& tmpl,
                                 const GenerationParams& params, Rng& rng) {
  if (refs_per_skill < 1) fail_user("refs_per_skill must be at least 1");
  if (tuple.skills.empty()) fail_user("tuple has no skills");

  SynthesisRequest req;
  req.mode = RequestMode::steps_synthesis;
  req.skills = tuple.skills;
  req.k = static_cast<int>(tuple.skills.size());
  req.params = params;
  req.system_prompt = tmpl.text;

  std::string payload = "Skills to fuse (" + std::to_string(req.k) + "):\n";
  for (std::size_t i = 0; i < tuple.skills.size(); ++i)
    payload += std::to_string(i + 1) + ". " + tuple.skills[i] + "\n";
  payload += "\nReference examples:\n";
  for (const auto& name : tuple.skills) {
    auto sid = corpus.vocab.find(name);
    if (!sid) fail_user("skill not present in the corpus: " + name);
    auto picks = index.sample(*sid, refs_per_skill, rng);
    if (picks.empty()) fail_user("no reference records for skill: " + name);
    payload += "\n[skill: " + name + "]\n";
    for (std::size_t ri : picks) {
      const InstructionRecord& rec = corpus.records[ri];
      req.reference_ids.push_back(rec.id);
      payload += "- id: " + rec.id + "\n";
      payload += "  instruction: " + rec.instruction + "\n";
      if (rec.response) payload += "  response: " + *rec.response + "\n";
    }
  }
  req.user_payload = payload;

  nlohmann::json canonical;
  canonical["mode"] = mode_name(req.mode);
  canonical["skills"] = req.skills;
  canonical["refs"] = req.reference_ids;
  canonical["template"] = tmpl.id;
  canonical["params"] = params_json(params);
  req.request_id = hash_id(canonical);
  return req;
}

SynthesisRequest assemble_skillbench_prompt(const TupleRecord& tuple,
                                            const PromptTemplate& tmpl,
                                            const GenerationParams& params) {
  int k = static_cast<int>(tuple.skills.size());
  if (k < 2 || k > 7)
    fail_user("skillbench tasks need k in [2, 7], got " + std::to_string(k));
  SynthesisRequest req;
  req.mode = RequestMode::skillbench_task;
  req.skills = tuple.skills;
  req.k = k;
  req.params = params;
  req.system_prompt = tmpl.text;
  std::string payload =
      "Skill depth: " + std::to_string(k) + "\nRequired skills:\n";
  for (const auto& name : tuple.skills) payload += "- " + name + "\n";
  req.user_payload = payload;

  nlohmann::json canonical;
  canonical["mode"] = mode_name(req.mode);
  canonical["skills"] = req.skills;
  canonical["template"] = tmpl.id;
  canonical["params"] = params_json(params);
  req.request_id = hash_id(canonical);
  return req;
}

SynthesisRequest assemble_judge_prompt(const std::string& task,
                                       const std::string& response,
                                       const PromptTemplate& tmpl,
                                       const GenerationParams& params) {
  if (task.empty()) fail_user("judge prompt needs a non-empty task");
  if (response.empty()) fail_user("judge prompt needs a non-empty response");
  SynthesisRequest req;
  req.mode = RequestMode::skillbench_judge;
  req.params = params;
  req.system_prompt = tmpl.text;
  req.user_payload =
      "Task:\n" + task + "\n\nCandidate response:\n" + response + "\n";

  nlohmann::json canonical;
  canonical["mode"] = mode_name(req.mode);
  canonical["task"] = task;
  canonical["response"] = response;
  canonical["template"] = tmpl.id;
  canonical["params"] = params_json(params);
  req.request_id = hash_id(canonical);
  return req;
}

namespace {

std::optional<nlohmann::json> try_parse(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

std::string strip_fences(const std::string& s) {
  auto open = s.find("```");
  if (open == std::string::npos) return s;
  auto nl = s.find('\n', open);
  if (nl == std::string::npos) return s;
  auto close = s.find("```", nl);
  if (close == std::string::npos) return s.substr(nl + 1);
  return s.substr(nl + 1, close - nl - 1);
}

std::string bracket_slice(const std::string& s) {
  auto open = s.find('[');
  auto close = s.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open)
    return s;
  return s.substr(open, close - open + 1);
}

// Rewrites single-quoted string literals as JSON double-quoted ones.
std::string requote(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_double = false, in_single = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_double) {
      out += c;
      if (c == '\\' && i + 1 < s.size()) {
        out += s[++i];
      } else if (c == '"') {
        in_double = false;
      }
    } else if (in_single) {
      if (c == '\\' && i + 1 < s.size()) {
        char n = s[++i];
        if (n == '\'') {
          out += '\'';
        } else {
          out += '\\';
          out += n;
        }
      } else if (c == '\'') {
        out += '"';
        in_single = false;
      } else if (c == '"') {
        out += "\\\"";
      } else {
        out += c;
      }
    } else if (c == '"') {
      in_double = true;
      out += c;
    } else if (c == '\'') {
      in_single = true;
      out += '"';
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

ConversationParse parse_conversation(const std::string& raw) {
  auto parsed = try_parse(raw);
  if (!parsed) {
    std::string relaxed = bracket_slice(strip_fences(raw));
    parsed = try_parse(relaxed);
    if (!parsed) parsed = try_parse(requote(relaxed));
  }
  if (!parsed || !parsed->is_array()) return {false, {}, kErrUnparseable};
  if (parsed->empty()) return {false, {}, kErrEmptyConversation};

  Conversation conv;
  for (const auto& item : *parsed) {
    if (!item.is_object() || !item.contains("role") ||
        !item["role"].is_string() || !item.contains("content") ||
        !item["content"].is_string())
      return {false, {}, kErrUnparseable};
    conv.turns.push_back(
        {item["role"].get<std::string>(), item["content"].get<std::string>()});
  }
  for (std::size_t i = 0; i < conv.turns.size(); ++i) {
    const std::string expect = i % 2 == 0 ? "user" : "assistant";
    if (conv.turns[i].role != expect) return {false, {}, kErrRoleViolation};
  }
  for (const auto& turn : conv.turns)
    if (turn.content.empty()) return {false, {}, kErrEmptyContent};
  return {true, std::move(conv), ""};
}

namespace {

bool axis_name_ok(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
      return false;
  return true;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

Judgment parse_judgment(const std::string& task_id, int k,
                        const std::string& raw) {
  if (k < 2 || k > 7)
    fail_user("judgment depth must lie in [2, 7], got " + std::to_string(k));
  Judgment j;
  j.task_id = task_id;
  j.k = k;
  j.raw = raw;

  bool have_score = false;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    std::string line =
        raw.substr(start, end == std::string::npos ? std::string::npos
                                                   : end - start);
    start = end == std::string::npos ? raw.size() + 1 : end + 1;
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string name = trim(line.substr(0, colon));
    std::string value_text = trim(line.substr(colon + 1));
    if (!axis_name_ok(name) || value_text.empty()) continue;
    char* parse_end = nullptr;
    double value = std::strtod(value_text.c_str(), &parse_end);
    if (parse_end == value_text.c_str() ||
        *parse_end != '\0' || !std::isfinite(value))
      continue;
    if (name == "SCORE") {
      j.score = value;  // last trailer wins
      have_score = true;
    } else {
      j.axis_scores[name] = value;
    }
  }
  if (!have_score) fail_user("judge reply has no SCORE trailer");
  if (j.score < 0.0 || j.score > 10.0)
    fail_user("judge score out of range [0, 10]: " + std::to_string(j.score));
  return j;
}

DepthTable aggregate_scores(const std::vector<Judgment>& judgments) {
  if (judgments.empty()) fail_user("no judgments to aggregate");
  std::map<int, std::pair<double, int>> acc;
  for (const auto& j : judgments) {
    if (j.k < 2 || j.k > 7)
      fail_user("judgment depth out of range: " + std::to_string(j.k));
    if (j.score < 0.0 || j.score > 10.0)
      fail_user("judgment score out of range: " + std::to_string(j.score));
    acc[j.k].first += j.score;
    acc[j.k].second += 1;
  }
  DepthTable table;
  double sum_of_means = 0.0;
  for (const auto& [k, pair] : acc) {
    double mean = pair.first / pair.second;
    table.mean_by_k[k] = mean;
    sum_of_means += mean;
  }
  table.overall = sum_of_means / static_cast<double>(acc.size());
  return table;
}

std::string render_depth_table(const DepthTable& table) {
  char buf[32];
  std::string head = "Skill depth (k)";
  std::string row = "Mean score     ";
  for (int k = 2; k <= 7; ++k) {
    std::snprintf(buf, sizeof buf, "%8d", k);
    head += buf;
    auto it = table.mean_by_k.find(k);
    if (it == table.mean_by_k.end())
      std::snprintf(buf, sizeof buf, "%8s", "-");
    else
      std::snprintf(buf, sizeof buf, "%8.2f", it->second);
    row += buf;
  }
  std::snprintf(buf, sizeof buf, "%8s", "Avg.");
  head += buf;
  std::snprintf(buf, sizeof buf, "%8.2f", table.overall);
  row += buf;
  return head + "\n" + row + "\n";
}

}  // namespace steps
