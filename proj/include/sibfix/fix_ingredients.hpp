#pragma once

#include <span>
#include <string>
#include <vector>

#include "sibfix/sibling_detection.hpp"
#include "sibfix/subject_model.hpp"

namespace sibfix {

enum class IngredientKind { MethodDeclaration, FieldDeclaration };

struct FixIngredient {
  IngredientKind kind = IngredientKind::MethodDeclaration;
  std::string signature;
  std::string declaring_class;
  std::string source_file;
  int line = 0;
  double rank_score = 0.0;
  /// Referenced directly on a sibling line (as opposed to harvested from a
  /// related class).
  bool referenced = false;

  bool operator==(const FixIngredient&) const = default;
};

inline constexpr std::size_t kDefaultIngredientsPerLine = 10;

/// For every sibling line: the fields and methods it references, then the
/// top `n` other declarations of the classes that declare them, ranked by
/// TF-IDF cosine against the line. Deduplicated across lines; references
/// that resolve to nothing are skipped and noted in `log`.
std::vector<FixIngredient> extract_fix_ingredients(std::span<const MethodGroup> groups,
                                                   const SourceIndex& index, std::size_t n,
                                                   std::vector<std::string>* log = nullptr);

}  // namespace sibfix
