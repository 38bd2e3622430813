#pragma once

// Method-level patches and the model output format.
//
// Output format: each edit is a marker line followed by a fenced block
// holding the complete replacement method (header through closing brace):
//
//   === PATCH file=src/Foo.java method=bar ===
//   ```java
//   public int bar() { ... }
//   ```

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sibfix/error.hpp"

namespace sibfix {

struct MethodEdit {
  std::string file;
  std::string method;
  std::string replacement;

  bool operator==(const MethodEdit&) const = default;
};

enum class PatchProvenance { Generated, Combined };

struct Patch {
  std::vector<MethodEdit> edits;  // at most one per (file, method), sorted
  PatchProvenance provenance = PatchProvenance::Generated;
  std::optional<std::string> parent;  // id of the promising patch combined in

  bool empty() const { return edits.empty(); }
  /// Content hash of the edit set; provenance does not affect it.
  std::string id() const;
  /// Inserts or replaces the edit for (file, method); returns true if one was replaced.
  bool upsert(MethodEdit edit);
};

class PatchParseError : public Error {
 public:
  PatchParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Extracts every marker + fenced block. Duplicate (file, method) blocks:
/// the last wins and a warning is appended. Throws PatchParseError when no
/// block is present, a marker is malformed, or a fence is unterminated.
Patch parse_patch(std::string_view response, std::vector<std::string>* warnings = nullptr);

/// Renders a patch in the output format (inverse of parse_patch).
std::string render_patch(const Patch& patch, std::string_view language = "");

/// Union of the edit sets; on a (file, method) collision the generated edit
/// wins. Provenance is Combined and the promising patch id is recorded.
Patch combine(const Patch& generated, const Patch& promising);

}  // namespace sibfix
