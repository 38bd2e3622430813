#pragma once

#include <filesystem>
#include <mutex>
#include <string>

#include "sibfix/http_client.hpp"

namespace sibfix {

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.7;
  int max_output_tokens = 4096;
  std::uint64_t seed = 0;
  /// Identifies the suspicious location being repaired ("loc1", ...).
  std::string location_id;
  /// 1-based attempt counter within that location.
  int attempt = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;
  /// Raw model text. Throws BackendError on unrecoverable failure.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

inline std::string complete(const CompletionRequest& request, Backend& backend) {
  return backend.complete(request);
}

enum class MissingResponse { Error, Empty };

/// Replays responses from a directory of `<location-id>_attempt<k>.txt`
/// files. Without a matching file it returns `fallback.txt` if present,
/// otherwise applies the missing-response policy.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::filesystem::path directory,
                           MissingResponse missing = MissingResponse::Empty);

  std::string name() const override { return "scripted"; }
  std::string complete(const CompletionRequest& request) override;

  static std::string file_name(const std::string& location_id, int attempt);

 private:
  std::filesystem::path directory_;
  MissingResponse missing_;
};

struct RemoteBackendConfig {
  std::string url;  // full chat-completions endpoint
  std::string model;
  std::string api_key_env = "LLM_API_KEY";
  RetryPolicy retry;
};

/// OpenAI-style chat completions: POST {"model", "messages": [{"role":
/// "user", "content": prompt}], "temperature", "max_tokens"}; the answer is
/// choices[0].message.content.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config) : config_(std::move(config)) {}

  std::string name() const override { return "remote:" + config_.model; }
  std::string complete(const CompletionRequest& request) override;

  /// HTTP requests issued so far, retries included.
  int requests_issued() const;

 private:
  RemoteBackendConfig config_;
  mutable std::mutex mutex_;
  int requests_ = 0;
};

}  // namespace sibfix
