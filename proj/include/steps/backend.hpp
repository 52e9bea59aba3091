#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "steps/synthesis.hpp"

namespace steps {

struct BackendConfig {
  std::string url;  // chat-completion endpoint, e.g. http://host:port/v1/chat
  std::string model = "default";
  int max_inflight = 4;
  bool dry_run = false;
  int max_attempts = 3;   // per request, transient failures only
  int backoff_ms = 250;   // doubled per retry
  int timeout_sec = 30;
};

struct RunPaths {
  std::filesystem::path dataset;   // JSONL successes, append-only
  std::filesystem::path rejects;   // JSONL failures, append-only
  std::filesystem::path requests;  // dry-run request dump
};

struct RunReport {
  int total = 0;
  int sent = 0;
  int written = 0;
  int rejected = 0;
  int skipped = 0;
  int dry = 0;
};

// Reject codes produced by transport handling; parse_conversation codes
// cover the rest.
inline constexpr const char* kErrTransport = "transport_failed";
inline constexpr const char* kErrBadStatus = "bad_status";
inline constexpr const char* kErrBadResponse = "bad_response";

// Dry runs dump the requests verbatim to paths.requests and never touch the
// network. Live runs post each request (bounded in-flight fan-out, bounded
// retries with exponential backoff on 429/5xx/connect failures), append
// parsed conversations to paths.dataset and failures to paths.rejects, and
// skip request_ids already present in the dataset.
RunReport run_synthesis(const std::vector<SynthesisRequest>& requests,
                        const BackendConfig& cfg, const RunPaths& paths);

// Request ids already recorded in a dataset file; empty if the file is
// missing.
std::vector<std::string> dataset_request_ids(const std::filesystem::path& path);

}  // namespace steps
