#include "sibfix/llm_backend.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sibfix/error.hpp"

namespace sibfix {

namespace {

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::filesystem::path directory, MissingResponse missing)
    : directory_(std::move(directory)), missing_(missing) {
  if (!std::filesystem::is_directory(directory_)) {
    throw InputError("scripted response directory not found: " + directory_.string());
  }
}

std::string ScriptedBackend::file_name(const std::string& location_id, int attempt) {
  return location_id + "_attempt" + std::to_string(attempt) + ".txt";
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
  if (auto text = read_file(directory_ / file_name(request.location_id, request.attempt))) {
    return *text;
  }
  if (auto text = read_file(directory_ / "fallback.txt")) return *text;
  if (missing_ == MissingResponse::Error) {
    throw BackendError("no scripted response for " +
                       file_name(request.location_id, request.attempt));
  }
  return {};
}

std::string RemoteBackend::complete(const CompletionRequest& request) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  nlohmann::json body = {
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
      {"seed", request.seed}};
  int attempts = 0;
  nlohmann::json reply;
  try {
    reply = post_json(config_.url, body, key ? key : "", config_.retry, &attempts);
  } catch (...) {
    std::lock_guard lock(mutex_);
    requests_ += attempts;
    throw;
  }
  {
    std::lock_guard lock(mutex_);
    requests_ += attempts;
  }
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("chat completion reply without choices[0].message.content: ") +
                       e.what());
  }
}

int RemoteBackend::requests_issued() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

}  // namespace sibfix
