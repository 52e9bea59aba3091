#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "steps/rng.hpp"

namespace steps {

using SkillId = int;

// One tagged instruction/response pair, the unit of the seed corpus.
struct InstructionRecord {
  std::string id;
  std::string instruction;
  std::optional<std::string> response;
  std::vector<SkillId> skills;  // sorted, unique
  std::optional<std::string> source;
};

// Bidirectional skill-name <-> dense id mapping with per-skill record counts.
// Ids are contiguous 0..n-1 in order of first appearance.
class SkillVocab {
 public:
  SkillId intern(const std::string& name);
  std::optional<SkillId> find(std::string_view name) const;
  const std::string& name(SkillId id) const;
  int frequency(SkillId id) const { return freq_.at(static_cast<std::size_t>(id)); }
  void bump_frequency(SkillId id) { ++freq_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::vector<int> freq_;
  std::unordered_map<std::string, SkillId> by_name_;
};

struct Corpus {
  std::vector<InstructionRecord> records;
  SkillVocab vocab;
  std::unordered_map<std::string, std::size_t> index_by_id;  // record id -> index
};

// Case-fold (ASCII) and trim surrounding whitespace.
std::string normalize_skill(std::string_view raw);

// Loads a JSONL corpus. One object per line:
//   {"id": str, "instruction": str, "response": str|null,
//    "skills": [str, ...], "source": str|null}
// Unknown keys are ignored. Duplicate skill tags inside a record collapse;
// a record whose skill set is empty after normalization is an error, as are
// duplicate record ids and malformed lines (reported with line numbers).
Corpus load_corpus(const std::filesystem::path& path);

// Skill -> posting list of record indexes, plus per-record usage counters
// that drive frequency-aware reference sampling.
class InvertedIndex {
 public:
  static InvertedIndex build(const Corpus& corpus);

  const std::vector<std::size_t>& postings(SkillId skill) const;
  std::size_t skill_count() const { return postings_.size(); }

  // Draws min(n, available) distinct record indexes with probability
  // proportional to 1/(1 + usage), then increments usage for the returned
  // records. Deterministic given the rng state and prior usage.
  std::vector<std::size_t> sample(SkillId skill, std::size_t n, Rng& rng);

  std::uint64_t usage(std::size_t record_index) const {
    return usage_.at(record_index);
  }
  void set_usage(std::size_t record_index, std::uint64_t value) {
    usage_.at(record_index) = value;
  }
  void reset_usage();

 private:
  std::vector<std::vector<std::size_t>> postings_;  // by skill id
  std::vector<std::uint64_t> usage_;                // by record index
};

// Spec-level convenience: one-shot sampling with a fresh stream.
std::vector<std::size_t> sample_references(InvertedIndex& index, SkillId skill,
                                           std::size_t n, std::uint64_t rng_seed);

}  // namespace steps
