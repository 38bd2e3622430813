#pragma once

// Embedding providers and the content-addressed embedding cache.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sibfix/error.hpp"
#include "sibfix/http_client.hpp"

namespace sibfix {

struct EmbeddingVector {
  std::vector<double> components;

  std::size_t dimension() const { return components.size(); }
  double norm() const;
  bool operator==(const EmbeddingVector&) const = default;
};

/// Cosine similarity clamped to [-1, 1]; 0 when either vector is zero.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual std::string model() const = 0;
  virtual std::size_t max_batch() const = 0;
  /// One vector per input, same order.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;
};

/// Deterministic offline provider: tokens (see tokenize) are hashed into
/// `dimension` buckets, counted, and the vector is L2-normalized.
class LocalHashProvider final : public EmbeddingProvider {
 public:
  explicit LocalHashProvider(std::size_t dimension = 512) : dimension_(dimension) {}

  std::string name() const override { return "local-hash"; }
  std::string model() const override { return "hash-" + std::to_string(dimension_); }
  std::size_t max_batch() const override { return 256; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
};

struct RemoteEmbeddingConfig {
  std::string url;
  std::string model;
  std::string api_key_env = "EMBED_API_KEY";
  std::size_t max_batch = 64;
  RetryPolicy retry;
};

/// Wire protocol: POST {"input": [...], "model": m}, reply
/// {"data": [{"index": i, "embedding": [...]}, ...]}.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);

  std::string name() const override { return "remote"; }
  std::string model() const override { return config_.model; }
  std::size_t max_batch() const override { return config_.max_batch; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

 private:
  RemoteEmbeddingConfig config_;
};

/// Raised when a batch cannot be embedded; carries the positions (in the
/// caller's input list) of the texts in the failed batch.
class EmbeddingError : public BackendError {
 public:
  EmbeddingError(const std::string& what, std::vector<std::size_t> batch_indices)
      : BackendError(what), batch_indices_(std::move(batch_indices)) {}

  const std::vector<std::size_t>& batch_indices() const { return batch_indices_; }

 private:
  std::vector<std::size_t> batch_indices_;
};

/// Get-or-compute store keyed by hash(provider, model, text). With a
/// directory, entries persist as one JSON file each; unreadable or
/// mismatching entries count as misses and are overwritten. Thread-safe.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path directory);

  static std::string key_for(const EmbeddingProvider& provider, const std::string& text);

  std::optional<EmbeddingVector> get(const std::string& key);
  void put(const std::string& key, const EmbeddingVector& vector);

  std::size_t corrupt_entries() const;

 private:
  std::filesystem::path directory_;
  std::map<std::string, EmbeddingVector> memory_;
  std::size_t corrupt_ = 0;
  mutable std::mutex mutex_;
};

struct EmbedStats {
  std::size_t provider_calls = 0;  // batch requests issued
  std::size_t texts_embedded = 0;
  std::size_t cache_hits = 0;
};

/// Embeds `texts`, consulting `cache` first and batching misses at the
/// provider's limit. Up to `concurrency` batches are in flight at once;
/// results are independent of completion order.
std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                   EmbeddingProvider& provider, EmbeddingCache* cache = nullptr,
                                   EmbedStats* stats = nullptr, std::size_t concurrency = 1);

std::string sha256_hex(std::string_view data);

}  // namespace sibfix
