#include "sibfix/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <unordered_map>

#include <json.hpp>
#include <openssl/evp.h>

#include "sibfix/text_similarity.hpp"

namespace sibfix {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

double EmbeddingVector::norm() const {
  double sq = 0.0;
  for (double c : components) sq += c * c;
  return std::sqrt(sq);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  const std::size_t n = std::min(a.dimension(), b.dimension());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) d += a.components[i] * b.components[i];
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(d / (na * nb), -1.0, 1.0);
}

std::vector<EmbeddingVector> LocalHashProvider::embed_batch(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    EmbeddingVector v;
    v.components.assign(dimension_, 0.0);
    for (const auto& token : tokenize(text)) {
      std::uint64_t h = 1469598103934665603ULL;
      for (unsigned char c : token) {
        h ^= c;
        h *= 1099511628211ULL;
      }
      v.components[h % dimension_] += 1.0;
    }
    const double n = v.norm();
    if (n > 0.0) {
      for (auto& c : v.components) c /= n;
    }
    out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config)
    : config_(std::move(config)) {
  if (config_.max_batch == 0) config_.max_batch = 1;
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed_batch(
    std::span<const std::string> texts) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  json body = {{"input", json(std::vector<std::string>(texts.begin(), texts.end()))},
               {"model", config_.model}};
  const json reply = post_json(config_.url, body, key ? key : "", config_.retry);
  if (!reply.contains("data") || !reply["data"].is_array()) {
    throw BackendError("embedding protocol error: reply has no \"data\" array");
  }
  const auto& data = reply["data"];
  if (data.size() != texts.size()) {
    throw BackendError("embedding protocol error: expected " + std::to_string(texts.size()) +
                       " vectors, got " + std::to_string(data.size()));
  }
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<bool> seen(texts.size(), false);
  for (const auto& item : data) {
    if (!item.contains("index") || !item.contains("embedding") ||
        !item["index"].is_number_integer() || !item["embedding"].is_array()) {
      throw BackendError("embedding protocol error: malformed data item");
    }
    const auto i = item["index"].get<long long>();
    if (i < 0 || static_cast<std::size_t>(i) >= texts.size() || seen[i]) {
      throw BackendError("embedding protocol error: bad index " + std::to_string(i));
    }
    seen[i] = true;
    out[i].components = item["embedding"].get<std::vector<double>>();
  }
  return out;
}

EmbeddingCache::EmbeddingCache(fs::path directory) : directory_(std::move(directory)) {
  if (!directory_.empty()) fs::create_directories(directory_);
}

std::string EmbeddingCache::key_for(const EmbeddingProvider& provider, const std::string& text) {
  std::string material = provider.name();
  material.push_back('\0');
  material += provider.model();
  material.push_back('\0');
  material += text;
  return sha256_hex(material);
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& key) {
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (directory_.empty()) return std::nullopt;
  const fs::path file = directory_ / (key + ".json");
  std::ifstream in(file);
  if (!in) return std::nullopt;
  try {
    const json entry = json::parse(in);
    if (entry.at("key").get<std::string>() != key) throw std::runtime_error("key mismatch");
    EmbeddingVector v{entry.at("embedding").get<std::vector<double>>()};
    if (v.components.empty()) throw std::runtime_error("empty vector");
    memory_.emplace(key, v);
    return v;
  } catch (const std::exception&) {
    ++corrupt_;
    return std::nullopt;
  }
}

void EmbeddingCache::put(const std::string& key, const EmbeddingVector& vector) {
  std::lock_guard lock(mutex_);
  memory_[key] = vector;
  if (directory_.empty()) return;
  const fs::path file = directory_ / (key + ".json");
  const fs::path tmp = directory_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << json{{"key", key}, {"embedding", vector.components}}.dump();
  }
  fs::rename(tmp, file);
}

std::size_t EmbeddingCache::corrupt_entries() const {
  std::lock_guard lock(mutex_);
  return corrupt_;
}

std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                   EmbeddingProvider& provider, EmbeddingCache* cache,
                                   EmbedStats* stats, std::size_t concurrency) {
  std::vector<EmbeddingVector> out(texts.size());
  // One slot per distinct text: the input positions it fills and the text
  // itself. Slots answered by the cache need no provider call.
  std::vector<std::vector<std::size_t>> positions;
  std::vector<std::string> pending;
  std::vector<std::string> keys;
  std::vector<std::size_t> todo;
  std::unordered_map<std::string_view, std::size_t> slot;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (auto it = slot.find(texts[i]); it != slot.end()) {
      positions[it->second].push_back(i);
      continue;
    }
    const std::size_t s = positions.size();
    slot.emplace(texts[i], s);
    positions.push_back({i});
    pending.push_back(texts[i]);
    keys.push_back(cache ? EmbeddingCache::key_for(provider, texts[i]) : std::string{});
    if (cache) {
      if (auto hit = cache->get(keys[s])) {
        out[i] = std::move(*hit);
        if (stats) ++stats->cache_hits;
        continue;
      }
    }
    todo.push_back(s);
  }

  const std::size_t batch = std::max<std::size_t>(1, provider.max_batch());
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t b = 0; b < todo.size(); b += batch) {
    ranges.emplace_back(b, std::min(todo.size(), b + batch));
  }
  std::mutex stats_mutex;
  auto run_range = [&](std::pair<std::size_t, std::size_t> range) {
    std::vector<std::string> batch_texts;
    for (std::size_t k = range.first; k < range.second; ++k) {
      batch_texts.push_back(pending[todo[k]]);
    }
    auto failed_indices = [&] {
      std::vector<std::size_t> idx;
      for (std::size_t k = range.first; k < range.second; ++k) {
        idx.insert(idx.end(), positions[todo[k]].begin(), positions[todo[k]].end());
      }
      std::sort(idx.begin(), idx.end());
      return idx;
    };
    std::vector<EmbeddingVector> vectors;
    try {
      vectors = provider.embed_batch(batch_texts);
    } catch (const std::exception& e) {
      throw EmbeddingError(std::string("embedding batch failed: ") + e.what(), failed_indices());
    }
    if (vectors.size() != batch_texts.size()) {
      throw EmbeddingError("embedding protocol error: provider returned " +
                               std::to_string(vectors.size()) + " vectors for " +
                               std::to_string(batch_texts.size()) + " texts",
                           failed_indices());
    }
    {
      std::lock_guard lock(stats_mutex);
      if (stats) {
        ++stats->provider_calls;
        stats->texts_embedded += batch_texts.size();
      }
    }
    for (std::size_t k = range.first; k < range.second; ++k) {
      const std::size_t first = positions[todo[k]].front();
      out[first] = std::move(vectors[k - range.first]);
      if (cache) cache->put(keys[todo[k]], out[first]);
    }
  };

  if (concurrency <= 1 || ranges.size() <= 1) {
    for (const auto& r : ranges) run_range(r);
  } else {
    for (std::size_t start = 0; start < ranges.size(); start += concurrency) {
      std::vector<std::future<void>> inflight;
      for (std::size_t r = start; r < std::min(ranges.size(), start + concurrency); ++r) {
        inflight.push_back(std::async(std::launch::async, run_range, ranges[r]));
      }
      for (auto& f : inflight) f.get();
    }
  }

  for (const auto& pos : positions) {
    for (std::size_t k = 1; k < pos.size(); ++k) out[pos[k]] = out[pos.front()];
  }
  return out;
}

}  // namespace sibfix
