#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sibfix {

/// Lowercase word tokens of source text. Operators, brackets and
/// punctuation are dropped; identifiers are split at camel-case,
/// letter/digit and underscore boundaries. Order is preserved.
///   tokenize("getUnboundParameters()") == {"get", "unbound", "parameters"}
std::vector<std::string> tokenize(std::string_view text);

/// Sparse weighted term vector, entries sorted by term id.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
  double norm = 0.0;
};

double dot(const SparseVector& a, const SparseVector& b);
double cosine(const SparseVector& a, const SparseVector& b);

/// TF-IDF over a fixed corpus: tf is the raw count, idf = ln(N / df).
class TfIdfModel {
 public:
  explicit TfIdfModel(std::span<const std::vector<std::string>> documents);

  std::size_t size() const { return vectors_.size(); }
  const SparseVector& vector(std::size_t doc) const { return vectors_[doc]; }
  double cosine(std::size_t a, std::size_t b) const;

 private:
  std::vector<SparseVector> vectors_;
};

/// |A ∩ B| / |A ∪ B| over token sets; two empty sets are identical (1.0).
double jaccard(std::span<const std::string> a, std::span<const std::string> b);

}  // namespace sibfix
