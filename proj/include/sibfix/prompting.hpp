#pragma once

// Repair prompt construction.
//
// A rendered prompt is eight sections in fixed order, each introduced by a
// marker line of the form `### [NAME]` (see section_marker). Sibling lines
// inside buggy methods carry a trailing `// SIBLING` comment.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sibfix/error.hpp"
#include "sibfix/fix_ingredients.hpp"
#include "sibfix/patch.hpp"
#include "sibfix/sibling_detection.hpp"
#include "sibfix/validation.hpp"

namespace sibfix {

inline constexpr std::string_view kRoleLine = "You are an Automated Program Repair Tool.";
inline constexpr std::string_view kSiblingMarker = "// SIBLING";

struct FailingTest {
  std::string id;
  std::string message;
  std::vector<StackFrame> frames;
};

struct BugEvidence {
  std::vector<FailingTest> failing;
  std::size_t originally_failing = 0;
};

/// Evidence from the unpatched run. Throws InputError when nothing fails.
BugEvidence evidence_from(const TestReport& baseline);

struct FeedbackEntry {
  Patch patch;
  /// Absent for a bare plausible patch, or when the attempt never reached
  /// the test run.
  std::optional<TestReport> results;
  /// Why the attempt failed before validation (parse or apply error).
  std::string note;
};

enum class PromptSection {
  Role,
  Task,
  ReasoningSteps,
  PatchDefinitions,
  BuggyMethods,
  TestResults,
  Feedback,
  Ingredients,
};

inline constexpr std::size_t kPromptSectionCount = 8;

std::string_view section_name(PromptSection section);
/// "### [ROLE]", "### [TASK]", ...
std::string section_marker(PromptSection section);

struct PromptOptions {
  std::size_t token_budget = 24000;
  std::size_t top_frames = 5;
};

/// Tokens are estimated as ceil(characters / 4).
std::size_t estimate_tokens(std::string_view text);

struct PromptBundle {
  std::string text;
  std::vector<PromptSection> sections;
  /// Marker comments placed before any truncation.
  std::size_t sibling_markers = 0;
  /// Human-readable notes about what truncation removed.
  std::vector<std::string> truncations;
};

class PromptBudgetError : public Error {
 public:
  using Error::Error;
};

/// Renders the prompt. Over budget, ingredients are dropped first (from the
/// back), then stack frames inside feedback, then whole groups in order of
/// lowest best_jaccard (at least one group is kept). Throws
/// PromptBudgetError if that is still not enough, InputError if `groups` is
/// empty.
PromptBundle build_prompt(std::span<const MethodGroup> groups, const BugEvidence& evidence,
                          std::span<const FeedbackEntry> feedback,
                          std::span<const FixIngredient> ingredients, const SourceIndex& index,
                          const PromptOptions& options = {});

/// Recovers the sections of a rendered prompt in order. Throws InputError
/// when a marker is missing or out of order.
std::vector<std::pair<PromptSection, std::string>> split_sections(std::string_view prompt);

}  // namespace sibfix
