#pragma once

// Spectrum-based fault localization over line coverage.
//
// Coverage protocol (JSON Lines, one object per line, blank lines and lines
// starting with '#' ignored):
//   {"test": "<id>", "outcome": "pass" | "fail"}
//   {"test": "<id>", "file": "<path relative to project root>", "lines": [<int>, ...]}
// Every test must be declared by an outcome record before any coverage
// record references it.

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace sibfix {

enum class Outcome { Pass, Fail };

struct Location {
  std::string file;
  int line = 0;

  auto operator<=>(const Location&) const = default;
};

struct CoverageMatrix {
  std::vector<std::pair<std::string, Outcome>> tests;
  std::map<std::string, std::set<Location>> covered;

  std::size_t failing_count() const;
};

CoverageMatrix load_coverage(const std::filesystem::path& path);
CoverageMatrix parse_coverage(std::string_view text);

struct SuspiciousLocation {
  Location location;
  double score = 0.0;
  int rank = 0;

  bool operator==(const SuspiciousLocation&) const = default;
};

/// Spectrum counts of one location.
struct Spectrum {
  int failed_covering = 0;      // ef
  int passed_covering = 0;      // ep
  int failed_not_covering = 0;  // nf
  int passed_not_covering = 0;  // np
};

double ochiai(const Spectrum& s);

/// Scores closer than this are ranked as ties.
inline constexpr double kScoreTieTolerance = 1e-12;

using SuspiciousnessFormula = std::function<double(const Spectrum&)>;

/// Scores every covered location with `formula` (Ochiai by default), sorts
/// by score descending with ties broken by (file, line), and assigns ranks
/// 1..N. Throws InputError when the matrix has no failing test.
std::vector<SuspiciousLocation> rank_locations(const CoverageMatrix& matrix,
                                               const SuspiciousnessFormula& formula);
std::vector<SuspiciousLocation> ochiai_rank(const CoverageMatrix& matrix);

/// Moves `known` to rank 1, keeping the relative order of everything else.
/// If it is absent it is inserted at rank 1 (score 1.0) and `*inserted` is
/// set.
std::vector<SuspiciousLocation> apply_spfl(std::vector<SuspiciousLocation> ranked,
                                           const Location& known, bool* inserted = nullptr);

}  // namespace sibfix
