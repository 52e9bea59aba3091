#include "steps/backend.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "steps/error.hpp"
#include "steps/io.hpp"

namespace steps {

std::vector<std::string> dataset_request_ids(
    const std::filesystem::path& path) {
  std::vector<std::string> ids;
  if (!std::filesystem::exists(path)) return ids;
  io::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("request_id") ||
        !j["request_id"].is_string())
      fail_user(path.string() + ":" + std::to_string(line_no) +
                ": malformed dataset record");
    ids.push_back(j["request_id"].get<std::string>());
  });
  return ids;
}

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading slash
};

Endpoint split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    fail_user("backend url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

struct Outcome {
  bool ok = false;
  std::string content;     // assistant text when ok
  std::string error_code;  // reject code otherwise
  std::string raw;         // body or error detail for the reject record
};

bool transient_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

Outcome post_request(const SynthesisRequest& req, const BackendConfig& cfg,
                     const Endpoint& ep, const std::string& api_key) {
  nlohmann::json body;
  body["model"] = cfg.model;
  body["messages"] = {{{"role", "system"}, {"content", req.system_prompt}},
                      {{"role", "user"}, {"content", req.user_payload}}};
  body["temperature"] = req.params.temperature;
  body["max_tokens"] = req.params.max_tokens;
  std::string payload = body.dump();

  httplib::Client client(ep.base);
  client.set_connection_timeout(cfg.timeout_sec, 0);
  client.set_read_timeout(cfg.timeout_sec, 0);
  client.set_write_timeout(cfg.timeout_sec, 0);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  httplib::Result res;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(cfg.backoff_ms << (attempt - 1)));
    res = client.Post(ep.path, headers, payload, "application/json");
    if (res && !transient_status(res->status)) break;
  }
  if (!res)
    return {false, "", kErrTransport,
            "connection failed: " + httplib::to_string(res.error())};
  if (res->status != 200)
    return {false, "", kErrBadStatus,
            "status " + std::to_string(res->status) + ": " + res->body};

  nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object())
    return {false, "", kErrBadResponse, res->body};
  if (reply.contains("choices") && reply["choices"].is_array() &&
      !reply["choices"].empty()) {
    const auto& first = reply["choices"][0];
    if (first.is_object() && first.contains("message") &&
        first["message"].is_object() &&
        first["message"].contains("content") &&
        first["message"]["content"].is_string())
      return {true, first["message"]["content"].get<std::string>(), "", ""};
  }
  if (reply.contains("content") && reply["content"].is_string())
    return {true, reply["content"].get<std::string>(), "", ""};
  return {false, "", kErrBadResponse, res->body};
}

std::string dataset_line(const SynthesisRequest& req, const Conversation& c) {
  nlohmann::json j;
  j["request_id"] = req.request_id;
  j["skills"] = req.skills;
  auto& turns = j["conversation"] = nlohmann::json::array();
  for (const auto& turn : c.turns)
    turns.push_back({{"role", turn.role}, {"content", turn.content}});
  if (req.k > 0) j["k"] = req.k;
  return j.dump();
}

std::string reject_line(const SynthesisRequest& req, const Outcome& out) {
  nlohmann::json j;
  j["request_id"] = req.request_id;
  j["error_code"] = out.error_code;
  j["raw"] = out.raw;
  return j.dump();
}

}  // namespace

RunReport run_synthesis(const std::vector<SynthesisRequest>& requests,
                        const BackendConfig& cfg, const RunPaths& paths) {
  RunReport report;
  report.total = static_cast<int>(requests.size());

  if (cfg.dry_run) {
    std::string body;
    for (const auto& req : requests) {
      body += request_to_json(req);
      body += '\n';
    }
    io::atomic_write(paths.requests, body);
    report.dry = report.total;
    return report;
  }

  if (cfg.url.empty()) fail_user("live synthesis needs a backend url");
  if (cfg.max_inflight < 1) fail_user("max_inflight must be at least 1");
  Endpoint ep = split_url(cfg.url);
  const char* key_env = std::getenv("STEPS_API_KEY");
  std::string api_key = key_env ? key_env : "";

  auto done_ids = dataset_request_ids(paths.dataset);
  std::set<std::string> done(done_ids.begin(), done_ids.end());

  std::vector<const SynthesisRequest*> pending;
  for (const auto& req : requests) {
    if (done.count(req.request_id)) {
      ++report.skipped;
    } else {
      pending.push_back(&req);
    }
  }

  std::ofstream dataset(paths.dataset, std::ios::app);
  if (!dataset) fail_user("cannot open for append: " + paths.dataset.string());
  std::ofstream rejects;
  auto ensure_rejects = [&]() -> std::ofstream& {
    if (!rejects.is_open()) {
      rejects.open(paths.rejects, std::ios::app);
      if (!rejects)
        fail_user("cannot open for append: " + paths.rejects.string());
    }
    return rejects;
  };

  for (std::size_t base = 0; base < pending.size();
       base += static_cast<std::size_t>(cfg.max_inflight)) {
    std::size_t chunk =
        std::min(pending.size() - base, static_cast<std::size_t>(cfg.max_inflight));
    std::vector<Outcome> outcomes(chunk);
    std::vector<std::thread> workers;
    workers.reserve(chunk);
    for (std::size_t i = 0; i < chunk; ++i) {
      workers.emplace_back([&, i] {
        outcomes[i] = post_request(*pending[base + i], cfg, ep, api_key);
      });
    }
    for (auto& w : workers) w.join();
    report.sent += static_cast<int>(chunk);

    for (std::size_t i = 0; i < chunk; ++i) {
      const SynthesisRequest& req = *pending[base + i];
      Outcome& out = outcomes[i];
      if (out.ok) {
        ConversationParse parsed = parse_conversation(out.content);
        if (parsed.ok) {
          dataset << dataset_line(req, parsed.conversation) << '\n';
          ++report.written;
          continue;
        }
        out.error_code = parsed.error_code;
        out.raw = out.content;
      }
      ensure_rejects() << reject_line(req, out) << '\n';
      ++report.rejected;
    }
    dataset.flush();
    if (rejects.is_open()) rejects.flush();
  }
  return report;
}

}  // namespace steps
