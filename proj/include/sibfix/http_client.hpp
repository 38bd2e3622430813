#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace sibfix {

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds request_timeout{120};
};

/// POSTs `body` as JSON and parses the JSON reply. Connection failures and
/// 408/429/5xx responses are retried with exponential backoff; other errors
/// and exhausted retries throw BackendError. `attempts` receives the number
/// of requests issued.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::string& bearer_token, const RetryPolicy& policy,
                         int* attempts = nullptr);

/// Splits `scheme://host[:port]/path` into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace sibfix
