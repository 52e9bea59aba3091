#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace steps {

struct CurriculumSchedule {
  int epochs = 0;
  int budget = 0;
  int k_min = 0;
  int k_max = 0;
  // counts[e][k - k_min] for epoch e (0-based); each row sums to budget.
  std::vector<std::vector<int>> counts;

  double mean_k(int epoch) const;
};

// Linear interpolation from a low-k-heavy mixture to a high-k-heavy one,
// rounded per epoch by largest remainder so every row hits the budget
// exactly; a repair sweep enforces non-decreasing mean k across epochs.
CurriculumSchedule make_schedule(int epochs, int budget, int k_min, int k_max);

struct DatasetEntry {
  std::string id;
  int k = 0;
};

// Pulls {id, k} pairs out of dataset or request JSONL files: k from a "k"
// field, else the "skills" array length; id from "id" else "request_id".
std::vector<DatasetEntry> load_dataset_entries(
    const std::filesystem::path& path);

// One manifest per epoch (epoch_001.jsonl ...): a header line carrying
// {epoch, budget, replacement} then one {id, k} line per sampled record.
// Buckets smaller than their count are drawn with replacement and flagged.
std::vector<std::filesystem::path> emit_manifests(
    const std::vector<DatasetEntry>& dataset, const CurriculumSchedule& sched,
    std::uint64_t rng_seed, const std::filesystem::path& out_dir);

}  // namespace steps
