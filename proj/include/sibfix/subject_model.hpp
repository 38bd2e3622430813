#pragma once

// Lightweight, toolchain-free index of a brace-language project: statements,
// methods, classes and member declarations.
//
// Segmentation model: a statement is a maximal segment ending in `;` inside a
// method-body-level scope, or a block header (a segment ending in `{`). A
// method is a block whose header, found at file or class scope, looks like
// `name(params) [trailing qualifiers] {`. Comments and literals are masked
// before any brace is counted. Files whose braces or parentheses do not
// balance are indexed line-wise instead.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sibfix {

struct LineSpan {
  int first = 0;
  int last = 0;

  bool contains(int line) const { return first <= line && line <= last; }
  bool operator==(const LineSpan&) const = default;
};

enum class StatementKind { Simple, BlockHeader, Other };

struct Statement {
  std::string file;
  LineSpan lines;
  std::string text;  // verbatim slice content[begin, end)
  StatementKind kind = StatementKind::Simple;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::optional<std::size_t> method;  // index into SourceFile::methods

  bool operator==(const Statement&) const = default;
};

struct MethodRef {
  std::string file;
  std::string name;
  int signature_line = 0;
  /// Lines from the start of the declaration header through the closing brace.
  LineSpan body;
  std::optional<std::string> class_name;
  std::uint64_t signature_hash = 0;
  std::size_t begin = 0;  // declaration start offset
  std::size_t end = 0;    // one past the closing brace
  std::uint64_t generation = 0;

  /// Identity of the method within one index, independent of generation.
  bool same_method(const MethodRef& other) const {
    return file == other.file && name == other.name && signature_hash == other.signature_hash &&
           begin == other.begin;
  }
  bool operator==(const MethodRef& other) const {
    return same_method(other) && signature_line == other.signature_line && body == other.body &&
           class_name == other.class_name && end == other.end;
  }
};

enum class DeclarationKind { Method, Field };

/// A member declared directly in a class (or at file scope for C-like code).
struct Declaration {
  DeclarationKind kind = DeclarationKind::Field;
  std::string name;
  std::string signature;  // whitespace-normalized header, no body
  std::string class_name;  // empty at file scope
  std::string file;
  int line = 0;

  bool operator==(const Declaration&) const = default;
};

struct ClassInfo {
  std::string file;
  std::string name;
  LineSpan span;

  bool operator==(const ClassInfo&) const = default;
};

struct SourceFile {
  std::string path;  // relative to the project root, '/' separated
  std::string content;
  bool line_wise = false;
  std::vector<Statement> statements;
  std::vector<MethodRef> methods;
  std::vector<ClassInfo> classes;
  std::vector<Declaration> declarations;
  std::vector<std::size_t> line_starts;

  int line_of(std::size_t offset) const;
  std::string_view line_text(int line) const;
  int line_count() const { return static_cast<int>(line_starts.size()); }

  bool operator==(const SourceFile& other) const {
    return path == other.path && content == other.content && line_wise == other.line_wise &&
           statements == other.statements && methods == other.methods &&
           classes == other.classes && declarations == other.declarations;
  }
};

/// Immutable once built; safe to share read-only.
class SourceIndex {
 public:
  SourceIndex() = default;

  std::span<const SourceFile> files() const { return files_; }
  const SourceFile* file(std::string_view path) const;
  const SourceFile& require_file(std::string_view path) const;

  /// First statement whose line span contains `line`.
  const Statement* statement_at(std::string_view path, int line) const;

  std::vector<const MethodRef*> methods_named(std::string_view path, std::string_view name) const;
  std::vector<const ClassInfo*> classes_named(std::string_view name) const;

  std::uint64_t generation() const { return generation_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Structural equality; generation and warnings are ignored.
  bool operator==(const SourceIndex& other) const { return files_ == other.files_; }

 private:
  friend SourceIndex index_sources(std::vector<std::pair<std::string, std::string>> sources);
  friend SourceIndex index_source(const std::filesystem::path& root,
                                  std::span<const std::string> include_patterns);

  std::vector<SourceFile> files_;
  std::vector<std::vector<int>> line_to_statement_;  // per file, index by line
  std::uint64_t generation_ = 0;
  std::vector<std::string> warnings_;
};

/// Indexes every file under `root` whose relative path matches one of the
/// glob patterns (`*`, `?`, `**`). Throws InputError if root is missing.
SourceIndex index_source(const std::filesystem::path& root,
                         std::span<const std::string> include_patterns);

/// Indexes in-memory (path, content) pairs.
SourceIndex index_sources(std::vector<std::pair<std::string, std::string>> sources);

/// Segments a single file. Exposed for tests and for re-indexing patched text.
SourceFile segment_file(std::string path, std::string content, std::string* warning);

bool glob_match(std::string_view pattern, std::string_view path);

/// Innermost method whose span contains the line. Throws InputError when
/// the file is not indexed.
std::optional<MethodRef> enclosing_method(const SourceIndex& index, std::string_view file,
                                          int line);

enum class IdentifierKind { Variable, Call, FieldAccess };

struct Identifier {
  IdentifierKind kind;
  std::string name;

  bool operator==(const Identifier&) const = default;
};

/// Identifier occurrences in a statement, deduplicated by (kind, name) in
/// first-occurrence order. Keywords are excluded.
std::vector<Identifier> identifiers_in(const Statement& statement);
std::vector<Identifier> identifiers_in(std::string_view text);

/// Verbatim declaration text of the method (header through closing brace).
/// Throws StaleReferenceError for refs from another index generation or
/// whose span no longer matches the indexed file.
std::string method_body(const SourceIndex& index, const MethodRef& ref);

}  // namespace sibfix
