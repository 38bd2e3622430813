#include "sibfix/text_similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

namespace sibfix {

namespace {

enum class CharClass { Lower, Upper, Digit, Other };

CharClass classify(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u >= 0x80) return CharClass::Lower;  // UTF-8 bytes stay inside words
  if (std::islower(u)) return CharClass::Lower;
  if (std::isupper(u)) return CharClass::Upper;
  if (std::isdigit(u)) return CharClass::Digit;
  return CharClass::Other;
}

void split_word(std::string_view word, std::vector<std::string>& out) {
  std::size_t start = 0;
  for (std::size_t i = 1; i <= word.size(); ++i) {
    bool boundary = i == word.size();
    if (!boundary) {
      const auto prev = classify(word[i - 1]);
      const auto cur = classify(word[i]);
      const bool prev_alpha = prev != CharClass::Digit;
      const bool cur_alpha = cur != CharClass::Digit;
      if (prev_alpha != cur_alpha) {
        boundary = true;
      } else if (prev == CharClass::Lower && cur == CharClass::Upper) {
        boundary = true;
      } else if (prev == CharClass::Upper && cur == CharClass::Upper && i + 1 < word.size() &&
                 classify(word[i + 1]) == CharClass::Lower) {
        boundary = true;  // "HTTPResponse" -> HTTP | Response
      }
    }
    if (boundary) {
      std::string piece(word.substr(start, i - start));
      for (auto& c : piece) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (!piece.empty()) out.push_back(std::move(piece));
      start = i;
    }
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (classify(text[i]) == CharClass::Other) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && classify(text[j]) != CharClass::Other) ++j;
    split_word(text.substr(i, j - i), out);
    i = j;
  }
  return out;
}

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
  return dot(a, b) / (a.norm * b.norm);
}

TfIdfModel::TfIdfModel(std::span<const std::vector<std::string>> documents) {
  std::unordered_map<std::string_view, std::uint32_t> vocabulary;
  std::vector<std::vector<std::pair<std::uint32_t, int>>> counts(documents.size());
  std::vector<int> df;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    std::unordered_map<std::uint32_t, int> tf;
    for (const auto& term : documents[d]) {
      auto [it, fresh] = vocabulary.emplace(term, static_cast<std::uint32_t>(vocabulary.size()));
      if (fresh) df.push_back(0);
      if (tf[it->second]++ == 0) ++df[it->second];
    }
    counts[d].assign(tf.begin(), tf.end());
    std::sort(counts[d].begin(), counts[d].end());
  }
  const double n = static_cast<double>(documents.size());
  vectors_.resize(documents.size());
  for (std::size_t d = 0; d < documents.size(); ++d) {
    auto& v = vectors_[d];
    double sq = 0.0;
    for (auto [term, tf] : counts[d]) {
      const double w = tf * std::log(n / df[term]);
      if (w == 0.0) continue;
      v.entries.emplace_back(term, w);
      sq += w * w;
    }
    v.norm = std::sqrt(sq);
  }
}

double TfIdfModel::cosine(std::size_t a, std::size_t b) const {
  return sibfix::cosine(vectors_[a], vectors_[b]);
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  const std::set<std::string_view> sa(a.begin(), a.end());
  const std::set<std::string_view> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (auto t : sa) common += sb.contains(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

}  // namespace sibfix
