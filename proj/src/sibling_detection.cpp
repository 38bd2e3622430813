#include "sibfix/sibling_detection.hpp"

#include <algorithm>
#include <map>

#include "sibfix/lexer.hpp"
#include "sibfix/text_similarity.hpp"

namespace sibfix {

namespace {

// Candidate ordering: score descending, then (file, line) ascending.
template <typename Score>
void sort_by_score(std::vector<CandidateSibling>& v, Score score) {
  std::stable_sort(v.begin(), v.end(), [&](const auto& a, const auto& b) {
    const double sa = score(a);
    const double sb = score(b);
    if (sa != sb) return sa > sb;
    if (a.context.file() != b.context.file()) return a.context.file() < b.context.file();
    return a.context.line() < b.context.line();
  });
}

bool same_location(const StatementContext& a, const StatementContext& b) {
  return a.file() == b.file() && a.target.begin == b.target.begin;
}

}  // namespace

bool defines_variable(const Statement& statement, std::string_view variable) {
  const std::string masked = mask_source(statement.text);
  const auto tokens = lex(masked);
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    if (tokens[j].kind != TokenKind::Identifier || tokens[j].text != variable) continue;
    const std::string_view prev = j > 0 ? tokens[j - 1].text : std::string_view{};
    const std::string_view next = j + 1 < tokens.size() ? tokens[j + 1].text : std::string_view{};
    if (prev == "." || prev == "->") continue;
    if (is_assignment_operator(next)) return true;
    if (next == "++" || next == "--" || prev == "++" || prev == "--") return true;
    const bool type_before =
        j > 0 && ((tokens[j - 1].kind == TokenKind::Identifier &&
                   (!is_keyword(prev) || is_type_keyword(prev))) ||
                  prev == ">" || prev == "]" || prev == ">>");
    if (type_before && (next.empty() || next == "=" || next == ";" || next == "," ||
                        next == ":" || next == ")" || next == "[")) {
      return true;
    }
  }
  return false;
}

StatementContext extract_context(const SourceIndex& index, const Statement& target) {
  const auto& file = index.require_file(target.file);
  std::vector<const Statement*> preceding;
  for (const auto& s : file.statements) {
    if (s.begin >= target.begin) break;
    if (s.method == target.method) preceding.push_back(&s);
  }

  std::set<std::size_t> chosen;  // begin offsets
  for (const auto& id : identifiers_in(target)) {
    if (id.kind != IdentifierKind::Variable) continue;
    for (auto it = preceding.rbegin(); it != preceding.rend(); ++it) {
      if (defines_variable(**it, id.name)) {
        chosen.insert((*it)->begin);
        break;
      }
    }
  }
  if (chosen.empty() && !preceding.empty()) chosen.insert(preceding.back()->begin);

  StatementContext ctx;
  ctx.target = target;
  for (const auto* s : preceding) {
    if (chosen.contains(s->begin)) ctx.lines.push_back(*s);
  }
  ctx.lines.push_back(target);
  for (std::size_t i = 0; i < ctx.lines.size(); ++i) {
    if (i) ctx.rendered.push_back('\n');
    ctx.rendered += ctx.lines[i].text;
  }
  return ctx;
}

std::vector<CandidateSibling> token_match(const StatementContext& target,
                                          std::span<const StatementContext> pool,
                                          std::size_t limit) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(pool.size() + 1);
  docs.push_back(tokenize(target.rendered));
  for (const auto& ctx : pool) docs.push_back(tokenize(ctx.rendered));
  const TfIdfModel model(docs);

  std::vector<CandidateSibling> scored;
  scored.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (same_location(pool[i], target)) continue;
    CandidateSibling c;
    c.context = pool[i];
    c.token_similarity = model.cosine(0, i + 1);
    scored.push_back(std::move(c));
  }
  sort_by_score(scored, [](const CandidateSibling& c) { return c.token_similarity; });
  if (scored.size() > limit) scored.resize(limit);
  return scored;
}

std::vector<CandidateSibling> embedding_match(const StatementContext& target,
                                              std::vector<CandidateSibling> candidates,
                                              double theta, EmbeddingProvider& provider,
                                              EmbeddingCache* cache, EmbedStats* stats,
                                              std::size_t concurrency) {
  std::vector<std::string> texts;
  texts.reserve(candidates.size() + 1);
  texts.push_back(target.rendered);
  for (const auto& c : candidates) texts.push_back(c.context.rendered);
  const auto vectors = embed(texts, provider, cache, stats, concurrency);

  std::vector<CandidateSibling> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double sim = cosine_similarity(vectors[0], vectors[i + 1]);
    // Absorb rounding so that identical vectors meet theta = 1.
    if (sim + 1e-12 >= theta) {
      candidates[i].embedding_similarity = sim;
      kept.push_back(std::move(candidates[i]));
    }
  }
  sort_by_score(kept, [](const CandidateSibling& c) { return *c.embedding_similarity; });
  return kept;
}

std::vector<CandidateSibling> jaccard_filter(std::vector<CandidateSibling> candidates,
                                             const StatementContext& target, double alpha) {
  const auto target_tokens = tokenize(target.rendered);
  std::vector<CandidateSibling> kept;
  for (auto& c : candidates) {
    const double j = jaccard(tokenize(c.context.rendered), target_tokens);
    c.jaccard_similarity = j;
    if (j >= alpha) kept.push_back(std::move(c));
  }
  return kept;
}

std::vector<MethodGroup> group_by_method(std::span<const CandidateSibling> candidates,
                                         const SourceIndex& index) {
  std::vector<MethodGroup> groups;
  std::map<std::pair<std::string, std::size_t>, std::size_t> slot;  // (file, begin|npos)
  for (const auto& c : candidates) {
    const auto& file = index.require_file(c.context.file());
    std::optional<MethodRef> method;
    if (c.context.target.method) method = file.methods[*c.context.target.method];
    const std::size_t key_begin = method ? method->begin : std::string::npos;
    const auto key = std::make_pair(c.context.file(), key_begin);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, groups.size()).first;
      groups.push_back({c.context.file(), method, {}, 0.0});
    }
    auto& g = groups[it->second];
    g.sibling_lines.insert(c.context.line());
    g.best_jaccard = std::max(g.best_jaccard, c.jaccard_similarity.value_or(0.0));
  }
  return groups;
}

}  // namespace sibfix
