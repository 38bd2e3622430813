#pragma once

// Project descriptors, run directories and the machine-readable run report.

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sibfix/fault_localization.hpp"
#include "sibfix/repair_engine.hpp"

namespace sibfix {

inline constexpr int kReportSchemaVersion = 1;

enum class LocalizationMode { Sbfl, Spfl, Pfl };

std::string_view to_string(LocalizationMode mode);
LocalizationMode parse_mode(std::string_view text);

struct BackendSpec {
  std::string kind = "scripted";  // scripted | remote
  std::filesystem::path directory;
  MissingResponse missing = MissingResponse::Empty;
  RemoteBackendConfig remote;
};

struct ProviderSpec {
  std::string kind = "local-hash";  // local-hash | remote
  std::size_t dimension = 512;
  RemoteEmbeddingConfig remote;
  std::size_t concurrency = 1;
};

struct ProjectDescriptor {
  std::filesystem::path source;  // the descriptor file itself
  std::filesystem::path root;
  std::vector<std::string> include{"**/*.java"};
  std::filesystem::path coverage;
  std::string harness_command;
  std::chrono::milliseconds harness_timeout{std::chrono::seconds(300)};
  BackendSpec backend;
  ProviderSpec provider;
  RepairConfig repair;
  LocalizationMode mode = LocalizationMode::Sbfl;
  std::optional<Location> spfl_location;
  std::vector<Location> pfl_locations;
  std::optional<std::filesystem::path> cache;
  std::optional<std::filesystem::path> out;
};

/// Reads and validates a JSON descriptor; relative paths resolve against the
/// descriptor's directory. Throws InputError with a diagnostic.
ProjectDescriptor load_descriptor(const std::filesystem::path& path);

/// "90", "90s", "500ms", "30m", "5h", "1h30m" (a bare number is seconds).
std::chrono::milliseconds parse_duration(std::string_view text);

struct RunOverrides {
  std::optional<LocalizationMode> mode;
  std::optional<double> theta;
  std::optional<double> alpha;
  std::optional<int> attempts;
  std::optional<std::size_t> ingredients;
  std::optional<std::chrono::milliseconds> budget;
  bool stop_on_first_plausible = false;
  bool keep_workspaces = false;
  std::optional<std::filesystem::path> out;
  /// Used instead of the descriptor's backend when set (not owned).
  Backend* backend = nullptr;
};

/// Exit codes of `repair run`.
inline constexpr int kExitRepaired = 0;
inline constexpr int kExitNotRepaired = 1;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitBackendFailure = 3;

struct RunResult {
  int exit_code = kExitInvalidInput;
  std::filesystem::path run_dir;  // empty if the run never started
  nlohmann::json report;
};

/// Suspicious list for the descriptor's mode.
std::vector<SuspiciousLocation> localize(const ProjectDescriptor& descriptor,
                                         const CoverageMatrix& coverage);

/// Loads the descriptor, runs the repair loop and writes the run directory:
///   prompts/<loc>_attempt<k>.txt, responses/<loc>_attempt<k>.txt,
///   patches/{plausible,promising}-<i>.diff, harness.log, report.json.
/// Progress lines go to `log`.
RunResult run(const std::filesystem::path& descriptor, const RunOverrides& overrides,
              std::ostream& log);

}  // namespace sibfix
