#include "steps/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <json.hpp>

#include "steps/error.hpp"
#include "steps/io.hpp"

namespace steps {

using nlohmann::json;

SkillId SkillVocab::intern(const std::string& name) {
  auto it = by_name_.find(name);
  if (it != by_name_.end()) return it->second;
  SkillId id = static_cast<SkillId>(names_.size());
  names_.push_back(name);
  freq_.push_back(0);
  by_name_.emplace(name, id);
  return id;
}

std::optional<SkillId> SkillVocab::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

const std::string& SkillVocab::name(SkillId id) const {
  return names_.at(static_cast<std::size_t>(id));
}

std::string normalize_skill(std::string_view raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  auto is_space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
  };
  while (begin < end && is_space(static_cast<unsigned char>(raw[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(raw[end - 1]))) --end;
  std::string out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    out.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(raw[i]))));
  }
  return out;
}

namespace {

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           std::size_t line_no,
                                           const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    fail_user(path + ":" + std::to_string(line_no) + ": field '" + key +
              "' must be a string or null");
  }
  return it->get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail_user("corpus file not found: " + path.string());
  }
  Corpus corpus;
  io::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail_user(path.string() + ":" + std::to_string(line_no) +
                ": malformed JSONL: " + e.what());
    }
    if (!obj.is_object()) {
      fail_user(path.string() + ":" + std::to_string(line_no) +
                ": expected a JSON object");
    }
    InstructionRecord rec;
    if (!obj.contains("id") || !obj["id"].is_string()) {
      fail_user(path.string() + ":" + std::to_string(line_no) +
                ": missing string field 'id'");
    }
    rec.id = obj["id"].get<std::string>();
    if (!obj.contains("instruction") || !obj["instruction"].is_string()) {
      fail_user(path.string() + ":" + std::to_string(line_no) +
                ": missing string field 'instruction'");
    }
    rec.instruction = obj["instruction"].get<std::string>();
    rec.response = optional_string(obj, "response", line_no, path.string());
    rec.source = optional_string(obj, "source", line_no, path.string());

    if (!obj.contains("skills") || !obj["skills"].is_array()) {
      fail_user(path.string() + ":" + std::to_string(line_no) +
                ": missing array field 'skills'");
    }
    std::set<std::string> normalized;
    for (const auto& tag : obj["skills"]) {
      if (!tag.is_string()) {
        fail_user(path.string() + ":" + std::to_string(line_no) +
                  ": skill tags must be strings");
      }
      std::string name = normalize_skill(tag.get<std::string>());
      if (!name.empty()) normalized.insert(std::move(name));
    }
    if (normalized.empty()) {
      fail_user(path.string() + ":" + std::to_string(line_no) + ": record '" +
                rec.id + "' has an empty skill set");
    }
    if (corpus.index_by_id.count(rec.id) != 0) {
      fail_user(path.string() + ":" + std::to_string(line_no) +
                ": duplicate record id '" + rec.id + "'");
    }
    for (const std::string& name : normalized) {
      SkillId id = corpus.vocab.intern(name);
      rec.skills.push_back(id);
      corpus.vocab.bump_frequency(id);
    }
    std::sort(rec.skills.begin(), rec.skills.end());
    corpus.index_by_id.emplace(rec.id, corpus.records.size());
    corpus.records.push_back(std::move(rec));
  });
  if (corpus.records.empty()) {
    fail_user("empty corpus: " + path.string());
  }
  return corpus;
}

InvertedIndex InvertedIndex::build(const Corpus& corpus) {
  InvertedIndex index;
  index.postings_.resize(corpus.vocab.size());
  index.usage_.assign(corpus.records.size(), 0);
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    for (SkillId s : corpus.records[r].skills) {
      index.postings_[static_cast<std::size_t>(s)].push_back(r);
    }
  }
  return index;
}

const std::vector<std::size_t>& InvertedIndex::postings(SkillId skill) const {
  if (skill < 0 || static_cast<std::size_t>(skill) >= postings_.size()) {
    fail_user("unknown skill id " + std::to_string(skill));
  }
  return postings_[static_cast<std::size_t>(skill)];
}

std::vector<std::size_t> InvertedIndex::sample(SkillId skill, std::size_t n,
                                               Rng& rng) {
  const auto& pool = postings(skill);
  std::size_t take = std::min(n, pool.size());
  std::vector<std::size_t> chosen;
  if (take == 0) return chosen;

  std::vector<std::size_t> candidates = pool;
  std::vector<double> weights(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    weights[i] = 1.0 / (1.0 + static_cast<double>(usage_[candidates[i]]));
  }
  for (std::size_t draw = 0; draw < take; ++draw) {
    std::size_t pick = rng.weighted_index(weights);
    chosen.push_back(candidates[pick]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  for (std::size_t r : chosen) ++usage_[r];
  return chosen;
}

void InvertedIndex::reset_usage() {
  std::fill(usage_.begin(), usage_.end(), 0);
}

std::vector<std::size_t> sample_references(InvertedIndex& index, SkillId skill,
                                           std::size_t n, std::uint64_t rng_seed) {
  Rng rng = Rng::stream(rng_seed, "sample_references");
  return index.sample(skill, n, rng);
}

}  // namespace steps
