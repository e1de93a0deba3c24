#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "mathsel/scorer.hpp"

namespace mathsel {

namespace {

// Splits "http://host:port/path" into its parts. Only plain http is handled;
// anything else is a configuration error.
void split_url(const std::string& url, std::string& host, int& port, std::string& path) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0) {
    throw ScoringError("remote scorer url must start with http:// : " + url);
  }
  std::string rest = url.substr(scheme.size());
  std::size_t slash = rest.find('/');
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  path = slash == std::string::npos ? "/" : rest.substr(slash);
  std::size_t colon = authority.find(':');
  if (colon == std::string::npos) {
    host = authority;
    port = 80;
  } else {
    host = authority.substr(0, colon);
    port = std::stoi(authority.substr(colon + 1));
  }
  if (host.empty()) throw ScoringError("remote scorer url has no host: " + url);
}

}  // namespace

RemoteScorer::RemoteScorer(RemoteScorerConfig config) : config_(std::move(config)) {
  split_url(config_.url, host_, port_, path_);
  if (config_.max_inflight < 1) config_.max_inflight = 1;
  if (config_.max_retries < 0) config_.max_retries = 0;
}

TokenProbPair RemoteScorer::score_one(const ScoreQuery& q) const {
  nlohmann::json body = {
      {"problem", q.problem->statement},
      {"solution", q.candidate->solution_text},
      {"prompt", build_prompt(*q.problem, *q.candidate).text},
  };
  std::string payload = body.dump() + "\n";

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    client.set_write_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    try {
      nlohmann::json j = nlohmann::json::parse(res->body);
      return TokenProbPair{j.at("p_correct").get<double>(), j.at("p_incorrect").get<double>()};
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
      continue;
    }
  }
  throw ScoringError("remote scorer failed for problem '" + q.problem->id + "' candidate " +
                     std::to_string(q.candidate->index) + " (" + last_error + ")");
}

std::vector<TokenProbPair> RemoteScorer::score_batch(std::span<const ScoreQuery> queries) {
  std::vector<TokenProbPair> out(queries.size());
  if (queries.empty()) return out;

  std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config_.max_inflight), queries.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = score_one(queries[i]);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= queries.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        out[i] = score_one(queries[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace mathsel
