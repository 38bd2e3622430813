#pragma once

// Candidate sibling detection: context extraction, token-based (TF-IDF)
// pruning, embedding-based matching, the Jaccard pre-filter, and grouping
// of candidates by enclosing method.

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sibfix/embedding.hpp"
#include "sibfix/subject_model.hpp"

namespace sibfix {

struct StatementContext {
  Statement target;
  std::vector<Statement> lines;  // in source order, includes target
  std::string rendered;          // line texts joined by '\n'

  int line() const { return target.lines.first; }
  const std::string& file() const { return target.file; }
};

struct CandidateSibling {
  StatementContext context;
  double token_similarity = 0.0;
  std::optional<double> embedding_similarity;
  std::optional<double> jaccard_similarity;
};

/// Target plus, for every variable it uses, the nearest preceding statement
/// of the same method that declares or assigns that variable. Falls back to
/// the immediately preceding statement when no variable has a definition.
StatementContext extract_context(const SourceIndex& index, const Statement& target);

/// True when `statement` declares or assigns `variable`.
bool defines_variable(const Statement& statement, std::string_view variable);

inline constexpr std::size_t kDefaultTokenMatchLimit = 100;

/// Ranks `pool` by TF-IDF cosine against `target` over the pool ∪ {target}
/// corpus and returns the top `limit` (ties by file, line). The target's own
/// location is never returned.
std::vector<CandidateSibling> token_match(const StatementContext& target,
                                          std::span<const StatementContext> pool,
                                          std::size_t limit = kDefaultTokenMatchLimit);

/// Keeps candidates whose embedding cosine with the target is ≥ theta,
/// sorted by that cosine descending (ties by file, line).
std::vector<CandidateSibling> embedding_match(const StatementContext& target,
                                              std::vector<CandidateSibling> candidates,
                                              double theta, EmbeddingProvider& provider,
                                              EmbeddingCache* cache = nullptr,
                                              EmbedStats* stats = nullptr,
                                              std::size_t concurrency = 1);

/// Keeps candidates whose token-set Jaccard with the target is ≥ alpha.
std::vector<CandidateSibling> jaccard_filter(std::vector<CandidateSibling> candidates,
                                             const StatementContext& target, double alpha);

struct MethodGroup {
  std::string file;
  /// Absent for the synthetic per-file group of top-level statements.
  std::optional<MethodRef> method;
  std::set<int> sibling_lines;
  /// Highest Jaccard among the group's candidates (0 when unset).
  double best_jaccard = 0.0;
};

/// One group per distinct enclosing method, in order of first appearance
/// in `candidates`.
std::vector<MethodGroup> group_by_method(std::span<const CandidateSibling> candidates,
                                         const SourceIndex& index);

}  // namespace sibfix
