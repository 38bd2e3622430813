#pragma once

// The repair loops: per suspicious location, candidate detection followed by
// simultaneous repair (all candidate methods in one prompt) and iterative
// repair (one method per prompt, with promising patches carried forward).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sibfix/embedding.hpp"
#include "sibfix/fault_localization.hpp"
#include "sibfix/fix_ingredients.hpp"
#include "sibfix/llm_backend.hpp"
#include "sibfix/patch.hpp"
#include "sibfix/prompting.hpp"
#include "sibfix/sibling_detection.hpp"
#include "sibfix/subject_model.hpp"
#include "sibfix/validation.hpp"

namespace sibfix {

struct RepairConfig {
  std::size_t k = kDefaultTokenMatchLimit;  // max candidate siblings
  double theta = 0.75;                      // embedding similarity threshold
  double alpha = 0.30;                      // Jaccard threshold
  int attempts = 5;                         // t, per phase
  std::size_t ingredients = kDefaultIngredientsPerLine;  // n, per sibling line
  std::chrono::milliseconds budget{std::chrono::hours(5)};
  std::size_t suspicious_cap = 50;
  std::size_t prompt_token_budget = 24000;
  bool stop_on_first_plausible = false;
  bool keep_workspaces = false;
  double temperature = 0.7;
  int max_output_tokens = 4096;
  std::uint64_t seed = 0;

  /// Throws InputError unless k, attempts, ingredients >= 1 and budget > 0.
  void validate() const;
};

enum class Phase { Simultaneous, SimultaneousCombined, Iterative, IterativeCombined };

std::string_view to_string(Phase phase);

struct ValidatedPatch {
  Patch patch;
  TestReport results;
  PatchVerdict verdict;
};

struct AttemptRecord {
  std::string location_id;
  Phase phase = Phase::Simultaneous;
  int attempt = 0;  // 1-based, counted per location across all phases
  std::string group;  // "file::method" for iterative phases, empty otherwise
  std::optional<VerdictKind> verdict;  // absent when the attempt failed before validation
  std::string patch_id;
  std::optional<std::string> parent_id;  // promising patch combined in
  std::vector<std::string> regressions;
  std::string note;
};

struct LocationRecord {
  std::string id;  // "loc<rank position>"
  Location location;
  double score = 0.0;
  std::size_t token_candidates = 0;
  std::size_t embedding_candidates = 0;
  std::size_t jaccard_candidates = 0;
  std::size_t method_groups = 0;
  std::string status;  // "repaired", "exhausted", "budget", "skipped: ...", "aborted"
};

/// Snapshot of the promising set after an iterative method group.
struct PromisingSnapshot {
  std::string location_id;
  std::string group;
  std::vector<std::string> patch_ids;
};

enum class StopReason { Plausible, Exhausted, Budget, BackendFailure };

std::string_view to_string(StopReason reason);

struct RepairState {
  TestReport baseline;
  std::vector<ValidatedPatch> promising;  // P_pro
  std::vector<ValidatedPatch> plausible;  // P_pl
  std::vector<AttemptRecord> attempts;
  std::vector<LocationRecord> locations;
  std::vector<PromisingSnapshot> promising_history;
  StopReason stop = StopReason::Exhausted;
  std::string error;
  std::size_t prompt_tokens = 0;  // estimated, summed over prompts
};

/// Called after each attempt with the prompt and the raw response (both
/// empty when the attempt never reached the backend).
using AttemptObserver = std::function<void(const AttemptRecord&, const std::string& prompt,
                                           const std::string& response)>;

struct RepairInputs {
  const SourceIndex* index = nullptr;
  std::filesystem::path project_root;
  const CoverageMatrix* coverage = nullptr;
  /// Ranked suspicious locations (already in the desired order).
  std::vector<SuspiciousLocation> suspicious;
  HarnessConfig harness;
  Backend* backend = nullptr;
  EmbeddingProvider* provider = nullptr;
  EmbeddingCache* cache = nullptr;
  EmbedStats* embed_stats = nullptr;
  /// Embedding batches in flight at once.
  std::size_t embed_concurrency = 1;
  /// Patched workspaces are created below this directory.
  std::filesystem::path work_dir;
  /// Absolute paths never copied into workspaces (e.g. the run directory).
  std::vector<std::filesystem::path> exclude;
  AttemptObserver observer;
};

class RepairEngine {
 public:
  RepairEngine(RepairConfig config, RepairInputs inputs);

  /// The per-location loop. Stops at the first location that yields a
  /// plausible patch, when the list is exhausted, when the budget runs out,
  /// or on a backend failure (recorded in the state, not thrown).
  RepairState run();

  // Building blocks of run(), public for testing.

  /// Runs the harness on the unmodified project. Throws InputError if no
  /// test fails.
  void establish_baseline();
  /// Statement contexts of every covered statement, in (file, offset) order.
  const std::vector<StatementContext>& context_pool();
  /// Target context first, then token- and embedding-matched candidates.
  std::vector<CandidateSibling> detect(const StatementContext& target,
                                       LocationRecord* record = nullptr);
  void simultaneous_repair(const std::string& location_id, const StatementContext& target,
                           const std::vector<CandidateSibling>& candidates,
                           LocationRecord* record = nullptr);
  void iterative_repair(const std::string& location_id,
                        const std::vector<CandidateSibling>& candidates);

  RepairState& state() { return state_; }
  const RepairConfig& config() const { return config_; }

 private:
  struct Outcome {
    std::optional<Patch> patch;
    std::optional<TestReport> results;
    std::optional<PatchVerdict> verdict;
    std::string note;
  };

  Outcome attempt(const std::string& location_id, Phase phase, const std::string& group_label,
                  std::span<const MethodGroup> groups,
                  std::span<const FixIngredient> ingredients,
                  const std::vector<FeedbackEntry>& feedback, const ValidatedPatch* partner);
  FeedbackEntry feedback_for(const Outcome& outcome) const;
  void check_budget() const;
  void add_plausible(const Outcome& outcome);

  RepairConfig config_;
  RepairInputs in_;
  RepairState state_;
  std::optional<BugEvidence> evidence_;
  std::optional<std::vector<StatementContext>> pool_;
  std::chrono::steady_clock::time_point deadline_;
  std::map<std::string, int> attempt_counter_;
  int workspace_counter_ = 0;
};

}  // namespace sibfix
