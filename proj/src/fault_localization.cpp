#include "sibfix/fault_localization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "sibfix/error.hpp"

namespace sibfix {

using nlohmann::json;

std::size_t CoverageMatrix::failing_count() const {
  return static_cast<std::size_t>(std::count_if(
      tests.begin(), tests.end(), [](const auto& t) { return t.second == Outcome::Fail; }));
}

CoverageMatrix parse_coverage(std::string_view text) {
  CoverageMatrix matrix;
  std::unordered_map<std::string, Outcome> declared;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw InputError("coverage line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed record: ") + e.what());
    }
    if (!record.is_object() || !record.contains("test") || !record["test"].is_string()) {
      fail("record without a string \"test\" field");
    }
    const std::string test = record["test"].get<std::string>();
    if (record.contains("outcome")) {
      const auto& o = record["outcome"];
      if (!o.is_string() || (o != "pass" && o != "fail")) fail("outcome must be pass or fail");
      const Outcome outcome = o == "pass" ? Outcome::Pass : Outcome::Fail;
      auto [it, fresh] = declared.emplace(test, outcome);
      if (!fresh) {
        if (it->second != outcome) fail("conflicting outcomes for test " + test);
        continue;
      }
      matrix.tests.emplace_back(test, outcome);
      matrix.covered[test];
    } else if (record.contains("file")) {
      if (!declared.contains(test)) fail("coverage for undeclared test " + test);
      if (!record["file"].is_string() || !record.contains("lines") ||
          !record["lines"].is_array()) {
        fail("coverage record needs \"file\" (string) and \"lines\" (array)");
      }
      const std::string file = record["file"].get<std::string>();
      auto& set = matrix.covered[test];
      for (const auto& l : record["lines"]) {
        if (!l.is_number_integer() || l.get<long long>() < 1) fail("line numbers must be >= 1");
        set.insert({file, l.get<int>()});
      }
    } else {
      fail("record is neither an outcome nor a coverage record");
    }
  }
  if (matrix.failing_count() == 0) {
    throw InputError("coverage has no failing test: nothing to repair");
  }
  return matrix;
}

CoverageMatrix load_coverage(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read coverage file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_coverage(buf.str());
}

double ochiai(const Spectrum& s) {
  const double denom = std::sqrt(static_cast<double>(s.failed_covering + s.failed_not_covering) *
                                 static_cast<double>(s.failed_covering + s.passed_covering));
  if (s.failed_covering == 0 || denom == 0.0) return 0.0;
  return s.failed_covering / denom;
}

std::vector<SuspiciousLocation> rank_locations(const CoverageMatrix& matrix,
                                               const SuspiciousnessFormula& formula) {
  const int total_failed = static_cast<int>(matrix.failing_count());
  if (total_failed == 0) throw InputError("ranking needs at least one failing test");
  const int total_passed = static_cast<int>(matrix.tests.size()) - total_failed;

  std::map<Location, Spectrum> spectra;
  for (const auto& [test, outcome] : matrix.tests) {
    const auto it = matrix.covered.find(test);
    if (it == matrix.covered.end()) continue;
    for (const auto& loc : it->second) {
      auto& s = spectra[loc];
      (outcome == Outcome::Fail ? s.failed_covering : s.passed_covering)++;
    }
  }
  std::vector<SuspiciousLocation> ranked;
  ranked.reserve(spectra.size());
  for (auto& [loc, s] : spectra) {
    s.failed_not_covering = total_failed - s.failed_covering;
    s.passed_not_covering = total_passed - s.passed_covering;
    ranked.push_back({loc, formula(s), 0});
  }
  // spectra is ordered by (file, line), so a stable sort keeps the tie-break.
  // Scores that are equal in exact arithmetic can differ in the last bit
  // (1/sqrt(3F) vs 3/sqrt(27F)), so near-equal scores count as tied.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.score > b.score + kScoreTieTolerance;
  });
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = static_cast<int>(i) + 1;
  return ranked;
}

std::vector<SuspiciousLocation> ochiai_rank(const CoverageMatrix& matrix) {
  return rank_locations(matrix, ochiai);
}

std::vector<SuspiciousLocation> apply_spfl(std::vector<SuspiciousLocation> ranked,
                                           const Location& known, bool* inserted) {
  auto it = std::find_if(ranked.begin(), ranked.end(),
                         [&](const auto& s) { return s.location == known; });
  if (inserted) *inserted = it == ranked.end();
  if (it == ranked.end()) {
    ranked.insert(ranked.begin(), SuspiciousLocation{known, 1.0, 0});
  } else {
    std::rotate(ranked.begin(), it, it + 1);
  }
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = static_cast<int>(i) + 1;
  return ranked;
}

}  // namespace sibfix
