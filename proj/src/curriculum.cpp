#include "steps/curriculum.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "steps/error.hpp"
#include "steps/io.hpp"
#include "steps/rng.hpp"

namespace steps {

double CurriculumSchedule::mean_k(int epoch) const {
  const auto& row = counts.at(static_cast<std::size_t>(epoch));
  long long weighted = 0, total = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    weighted += static_cast<long long>(row[i]) * (k_min + static_cast<int>(i));
    total += row[i];
  }
  if (total == 0) return 0.0;
  return static_cast<double>(weighted) / static_cast<double>(total);
}

CurriculumSchedule make_schedule(int epochs, int budget, int k_min,
                                 int k_max) {
  if (epochs < 1) fail_user("curriculum needs at least 1 epoch");
  if (budget < 1) fail_user("curriculum budget must be at least 1");
  if (k_min < 1 || k_min > k_max)
    fail_user("invalid k range [" + std::to_string(k_min) + ", " +
              std::to_string(k_max) + "]");

  const int m = k_max - k_min + 1;
  std::vector<double> u_low(static_cast<std::size_t>(m));
  std::vector<double> u_high(static_cast<std::size_t>(m));
  double low_sum = 0.0, high_sum = 0.0;
  for (int i = 0; i < m; ++i) {
    int k = k_min + i;
    u_low[static_cast<std::size_t>(i)] = static_cast<double>(k_max + 1 - k);
    u_high[static_cast<std::size_t>(i)] = static_cast<double>(k);
    low_sum += u_low[static_cast<std::size_t>(i)];
    high_sum += u_high[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < m; ++i) {
    u_low[static_cast<std::size_t>(i)] /= low_sum;
    u_high[static_cast<std::size_t>(i)] /= high_sum;
  }

  CurriculumSchedule sched;
  sched.epochs = epochs;
  sched.budget = budget;
  sched.k_min = k_min;
  sched.k_max = k_max;

  for (int e = 1; e <= epochs; ++e) {
    double t = epochs == 1 ? 0.0
                           : static_cast<double>(e - 1) /
                                 static_cast<double>(epochs - 1);
    std::vector<double> share(static_cast<std::size_t>(m));
    std::vector<int> row(static_cast<std::size_t>(m));
    int placed = 0;
    for (int i = 0; i < m; ++i) {
      auto ix = static_cast<std::size_t>(i);
      share[ix] = budget * ((1.0 - t) * u_low[ix] + t * u_high[ix]);
      row[ix] = static_cast<int>(share[ix]);
      placed += row[ix];
    }
    // Largest-remainder top-up; remainder ties go to the smaller k.
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      double ra = share[static_cast<std::size_t>(a)] -
                  row[static_cast<std::size_t>(a)];
      double rb = share[static_cast<std::size_t>(b)] -
                  row[static_cast<std::size_t>(b)];
      return ra > rb;
    });
    for (int left = budget - placed; left > 0; --left)
      row[static_cast<std::size_t>(order[static_cast<std::size_t>(
          budget - placed - left)])] += 1;
    sched.counts.push_back(std::move(row));
  }

  // Rounding can nudge a later epoch's mean under its predecessor's; shift
  // single units upward until the means are non-decreasing again.
  for (int e = 1; e < epochs; ++e) {
    while (sched.mean_k(e) < sched.mean_k(e - 1) - 1e-12) {
      auto& row = sched.counts[static_cast<std::size_t>(e)];
      int low = -1;
      for (int i = 0; i + 1 < m; ++i)
        if (row[static_cast<std::size_t>(i)] > 0) {
          low = i;
          break;
        }
      if (low < 0) break;
      row[static_cast<std::size_t>(low)] -= 1;
      row[static_cast<std::size_t>(low + 1)] += 1;
    }
  }
  return sched;
}

std::vector<DatasetEntry> load_dataset_entries(
    const std::filesystem::path& path) {
  std::vector<DatasetEntry> entries;
  io::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail_user(where() + ": not a JSON object");
    DatasetEntry entry;
    if (j.contains("id") && j["id"].is_string())
      entry.id = j["id"].get<std::string>();
    else if (j.contains("request_id") && j["request_id"].is_string())
      entry.id = j["request_id"].get<std::string>();
    else
      fail_user(where() + ": record has no id or request_id");
    if (j.contains("k") && j["k"].is_number_integer())
      entry.k = j["k"].get<int>();
    else if (j.contains("skills") && j["skills"].is_array())
      entry.k = static_cast<int>(j["skills"].size());
    else
      fail_user(where() + ": record has no k tag or skills array");
    if (entry.k < 1) fail_user(where() + ": k must be at least 1");
    entries.push_back(std::move(entry));
  });
  if (entries.empty()) fail_user(path.string() + ": empty dataset");
  return entries;
}

std::vector<std::filesystem::path> emit_manifests(
    const std::vector<DatasetEntry>& dataset, const CurriculumSchedule& sched,
    std::uint64_t rng_seed, const std::filesystem::path& out_dir) {
  if (dataset.empty()) fail_user("empty dataset");
  for (const auto& row : sched.counts) {
    int sum = 0;
    for (int c : row) sum += c;
    if (sum != sched.budget) fail_internal("schedule row misses its budget");
  }

  std::map<int, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    buckets[dataset[i].k].push_back(i);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail_user("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> files;
  const int m = sched.k_max - sched.k_min + 1;
  for (int e = 0; e < sched.epochs; ++e) {
    const auto& row = sched.counts[static_cast<std::size_t>(e)];
    bool replacement = false;
    for (int i = 0; i < m; ++i) {
      int k = sched.k_min + i;
      int want = row[static_cast<std::size_t>(i)];
      if (want == 0) continue;
      auto it = buckets.find(k);
      if (it == buckets.end())
        fail_user("no dataset records with k=" + std::to_string(k));
      if (static_cast<std::size_t>(want) > it->second.size())
        replacement = true;
    }

    nlohmann::json header;
    header["epoch"] = e + 1;
    header["budget"] = sched.budget;
    header["replacement"] = replacement;
    std::string body = header.dump() + "\n";

    for (int i = 0; i < m; ++i) {
      int k = sched.k_min + i;
      int want = row[static_cast<std::size_t>(i)];
      if (want == 0) continue;
      const auto& pool = buckets.at(k);
      Rng rng = Rng::stream(rng_seed, "curriculum",
                            static_cast<std::uint64_t>(e + 1) * 1009ULL +
                                static_cast<std::uint64_t>(k));
      std::vector<std::size_t> picks;
      if (static_cast<std::size_t>(want) <= pool.size()) {
        std::vector<std::size_t> shuffled = pool;
        for (int p = 0; p < want; ++p) {
          std::size_t j = static_cast<std::size_t>(p) +
                          static_cast<std::size_t>(rng.next_below(
                              shuffled.size() - static_cast<std::size_t>(p)));
          std::swap(shuffled[static_cast<std::size_t>(p)], shuffled[j]);
          picks.push_back(shuffled[static_cast<std::size_t>(p)]);
        }
      } else {
        for (int p = 0; p < want; ++p)
          picks.push_back(pool[static_cast<std::size_t>(
              rng.next_below(pool.size()))]);
      }
      for (std::size_t idx : picks) {
        nlohmann::json line;
        line["id"] = dataset[idx].id;
        line["k"] = dataset[idx].k;
        body += line.dump();
        body += '\n';
      }
    }

    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03d.jsonl", e + 1);
    std::filesystem::path file = out_dir / name;
    io::atomic_write(file, body);
    files.push_back(file);
  }
  return files;
}

}  // namespace steps
