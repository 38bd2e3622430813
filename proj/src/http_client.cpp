#include "sibfix/http_client.hpp"

#include <thread>

#include <httplib.h>

#include "sibfix/error.hpp"

namespace sibfix {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InputError("URL without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::string& bearer_token, const RetryPolicy& policy,
                         int* attempts) {
  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  client.set_connection_timeout(policy.request_timeout);
  client.set_read_timeout(policy.request_timeout);
  client.set_write_timeout(policy.request_timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
  const std::string payload = body.dump();

  std::string last_error;
  auto backoff = policy.initial_backoff;
  const int total = policy.max_retries + 1;
  for (int attempt = 1; attempt <= total; ++attempt) {
    if (attempts) *attempts = attempt;
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failure: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw BackendError(url + ": response is not JSON: " + e.what());
      }
    } else if (res->status == 408 || res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      throw BackendError(url + ": HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    if (attempt < total) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw BackendError(url + ": giving up after " + std::to_string(total) +
                     " attempts: " + last_error);
}

}  // namespace sibfix
