#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "compeval/errors.hpp"

namespace compeval {

struct RetryPolicy {
  int max_attempts = 5;
  int base_delay_ms = 250;  // doubles per attempt; no jitter, runs stay reproducible
};

namespace detail_net {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading '/'
};

inline SplitUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw EvalError(ErrorCode::InvalidConfig, "endpoint '" + url + "' has no scheme");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

inline void backoff_sleep(const RetryPolicy& policy, int attempt) {
  const int delay = policy.base_delay_ms * (1 << attempt);
  std::this_thread::sleep_for(std::chrono::milliseconds(delay));
}

}  // namespace detail_net

inline std::string bearer_token_from_env(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* value = std::getenv(env_name.c_str());
  return value ? value : "";
}

/// POSTs a JSON body, retrying 429/5xx and transport failures with exponential
/// backoff. Anything else non-2xx fails immediately with the status attached.
inline nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                                const std::string& bearer_token, const RetryPolicy& policy = {}) {
  const auto split = detail_net::split_url(url);
  httplib::Client client(split.base);
  client.set_read_timeout(300, 0);
  client.set_connection_timeout(30, 0);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  const std::string payload = body.dump();
  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
    if (attempt > 0) detail_net::backoff_sleep(policy, attempt - 1);
    auto res = client.Post(split.path, headers, payload, "application/json");
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw EvalError(ErrorCode::ServiceError,
                        std::string("endpoint returned invalid JSON: ") + e.what())
            .with_status(res->status);
      }
    }
    last_error = res->body.substr(0, 300);
    if (!detail_net::retryable_status(res->status)) break;
  }
  throw EvalError(ErrorCode::ServiceError,
                  "POST " + url + " failed after retries: " + last_error)
      .with_status(last_status);
}

/// GET for binary payloads (image downloads). Same retry rules as post_json.
inline std::string get_bytes(const std::string& url, const RetryPolicy& policy = {}) {
  const auto split = detail_net::split_url(url);
  httplib::Client client(split.base);
  client.set_read_timeout(300, 0);
  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
    if (attempt > 0) detail_net::backoff_sleep(policy, attempt - 1);
    auto res = client.Get(split.path);
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) return res->body;
    last_error = res->body.substr(0, 300);
    if (!detail_net::retryable_status(res->status)) break;
  }
  throw EvalError(ErrorCode::ServiceError, "GET " + url + " failed after retries: " + last_error)
      .with_status(last_status);
}

}  // namespace compeval
