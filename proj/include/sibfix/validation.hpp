#pragma once

// Patch application, test execution, and verdict classification.
//
// Harness protocol: the configured command runs through /bin/sh inside the
// workspace with RESULTS_PATH set. It writes one JSON object per line:
//   {"test": id, "status": "pass"|"fail"|"error"|"timeout", "message": text,
//    "frames": [{"unit": u, "method": m, "file": f, "line": n}, ...]}
// Frames are listed outermost (the test case) first. The results file is
// authoritative; the exit status is only recorded.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sibfix/error.hpp"
#include "sibfix/patch.hpp"
#include "sibfix/subject_model.hpp"

namespace sibfix {

enum class TestStatus { Pass, Fail, Error, Timeout };

std::string_view to_string(TestStatus status);

struct StackFrame {
  std::string unit;
  std::string method;
  std::string file;
  int line = 0;  // 0 = unknown

  bool operator==(const StackFrame&) const = default;
};

struct TestResult {
  std::string id;
  TestStatus status = TestStatus::Pass;
  std::string message;
  std::vector<StackFrame> frames;

  bool passed() const { return status == TestStatus::Pass; }
  bool operator==(const TestResult&) const = default;
};

struct TestReport {
  std::vector<TestResult> tests;
  double wall_seconds = 0.0;
  int exit_status = 0;
  bool timed_out = false;

  const TestResult* find(std::string_view id) const;
  std::size_t non_passing() const;
};

class HarnessProtocolError : public Error {
 public:
  using Error::Error;
};

class ApplyError : public Error {
 public:
  using Error::Error;
};

/// Parses a results file. Throws HarnessProtocolError on malformed lines or
/// duplicate test ids.
TestReport parse_results(std::string_view text);

struct HarnessConfig {
  std::string command;
  std::chrono::milliseconds timeout{std::chrono::seconds(300)};
  /// Tests expected in every report (normally the baseline's). Missing ones
  /// are reported as error, or timeout when the run timed out.
  std::vector<std::string> expected_tests;
  /// Harness stdout/stderr are appended here when set.
  std::filesystem::path log_path;
};

/// Runs the harness in `workspace`. A missing results file yields error
/// statuses for every expected test; a timeout kills the process group.
TestReport run_tests(const std::filesystem::path& workspace, const HarnessConfig& harness);

/// Copies `root` to `workspace` (which must not exist) and replaces the
/// span of every edited method with its replacement text. Paths listed in
/// `exclude` (absolute) are not copied. Throws ApplyError when an edit names
/// a method or file that is not indexed, or the file changed since indexing.
std::filesystem::path apply_patch(const std::filesystem::path& root, const Patch& patch,
                                  const SourceIndex& index,
                                  const std::filesystem::path& workspace,
                                  const std::vector<std::filesystem::path>& exclude = {});

/// Applies the patch to in-memory file contents; returns (path, new text)
/// for each touched file, sorted by path.
std::vector<std::pair<std::string, std::string>> patched_files(const Patch& patch,
                                                               const SourceIndex& index);

enum class TraceAlignment { Identical, Progressed, Other };

std::string_view to_string(TraceAlignment alignment);

struct TraceComparison {
  TraceAlignment alignment = TraceAlignment::Other;
  std::size_t divergence = 0;
};

/// Walks both traces from the test case downwards. At the first divergence:
/// same unit/method/file with a later line, or a different method below an
/// identical non-empty prefix, counts as progress.
TraceComparison compare_traces(const std::vector<StackFrame>& before,
                               const std::vector<StackFrame>& after);
TraceAlignment align_traces(const std::vector<StackFrame>& before,
                            const std::vector<StackFrame>& after);

enum class VerdictKind { PassAll, Promising, NoProgress };

std::string_view to_string(VerdictKind kind);

struct TraceEvidence {
  std::string test;
  std::size_t divergence_index = 0;
  std::optional<StackFrame> before;
  std::optional<StackFrame> after;
};

struct PatchVerdict {
  VerdictKind kind = VerdictKind::NoProgress;
  std::vector<std::string> newly_passing;
  std::vector<std::string> regressions;  // recorded only, never a veto
  std::optional<TraceEvidence> trace_progress;
};

PatchVerdict classify(const TestReport& baseline, const TestReport& patched);

}  // namespace sibfix
