#include "sibfix/subject_model.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>

#include "sibfix/error.hpp"
#include "sibfix/lexer.hpp"

namespace sibfix {

namespace fs = std::filesystem;

namespace {

std::atomic<std::uint64_t> g_next_generation{1};

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string normalize_ws(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::size_t trim_end(std::string_view text, std::size_t begin, std::size_t end) {
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return end;
}

enum class ScopeKind { File, Container, Class, Method, Block };

struct Scope {
  ScopeKind kind;
  std::optional<std::size_t> method;
  std::optional<std::size_t> klass;
};

struct HeaderShape {
  ScopeKind kind = ScopeKind::Block;
  std::string name;
};

// Index of the token matching the opening bracket at `open`, or npos.
std::size_t matching_close(const std::vector<Token>& tokens, std::size_t open) {
  int depth = 0;
  for (std::size_t j = open; j < tokens.size(); ++j) {
    if (tokens[j].text == "(") ++depth;
    if (tokens[j].text == ")" && --depth == 0) return j;
  }
  return std::string_view::npos;
}

std::optional<HeaderShape> class_shape(const std::vector<Token>& tokens) {
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto& t = tokens[j];
    if (t.kind != TokenKind::Identifier) continue;
    const bool after_dot = j > 0 && (tokens[j - 1].text == "." || tokens[j - 1].text == "::");
    if (after_dot) continue;
    if (t.text == "class" || t.text == "interface" || t.text == "enum" || t.text == "struct" ||
        t.text == "record" || t.text == "union") {
      for (std::size_t k = j + 1; k < tokens.size(); ++k) {
        if (tokens[k].kind == TokenKind::Identifier && tokens[k].text != "class" &&
            tokens[k].text != "struct") {
          return HeaderShape{ScopeKind::Class, std::string(tokens[k].text)};
        }
        if (tokens[k].kind != TokenKind::Identifier) break;
      }
      return HeaderShape{ScopeKind::Class, "(anonymous)"};
    }
    if (t.text == "namespace") {
      std::string name = "(anonymous namespace)";
      if (j + 1 < tokens.size() && tokens[j + 1].kind == TokenKind::Identifier) {
        name = std::string(tokens[j + 1].text);
      }
      return HeaderShape{ScopeKind::Container, name};
    }
  }
  if (!tokens.empty() && tokens.front().text == "extern") {
    return HeaderShape{ScopeKind::Container, ""};
  }
  // Anonymous class: `... new Type(args) {`
  if (!tokens.empty() && tokens.back().text == ")") {
    for (std::size_t j = 0; j + 1 < tokens.size(); ++j) {
      if (tokens[j].text == "new" && tokens[j + 1].kind == TokenKind::Identifier) {
        return HeaderShape{ScopeKind::Class, std::string(tokens[j + 1].text)};
      }
    }
  }
  return std::nullopt;
}

// Method name if the header tokens look like `name(params) [qualifiers]`.
std::optional<std::string> method_shape(const std::vector<Token>& tokens) {
  std::size_t j = 0;
  while (j < tokens.size()) {
    const auto& t = tokens[j];
    if (t.text == "@") {
      // Annotation: @a.b.C or @C(...)
      ++j;
      while (j < tokens.size() &&
             (tokens[j].kind == TokenKind::Identifier || tokens[j].text == ".")) {
        ++j;
      }
      if (j < tokens.size() && tokens[j].text == "(") {
        const auto close = matching_close(tokens, j);
        if (close == std::string_view::npos) return std::nullopt;
        j = close + 1;
      }
      continue;
    }
    if (t.text == "=") return std::nullopt;
    if (t.text == "(") {
      if (j == 0 || tokens[j - 1].kind != TokenKind::Identifier ||
          is_keyword(tokens[j - 1].text)) {
        return std::nullopt;
      }
      const auto close = matching_close(tokens, j);
      if (close == std::string_view::npos) return std::nullopt;
      for (std::size_t k = close + 1; k < tokens.size(); ++k) {
        if (tokens[k].text == "=" || tokens[k].text == ";") return std::nullopt;
      }
      return std::string(tokens[j - 1].text);
    }
    ++j;
  }
  return std::nullopt;
}

class Segmenter {
 public:
  explicit Segmenter(SourceFile& file) : file_(file), masked_(mask_source(file.content)) {}

  bool run() {
    stack_.push_back({ScopeKind::File, std::nullopt, std::nullopt});
    constexpr auto npos = std::string_view::npos;
    std::size_t seg = npos;
    int paren = 0;
    int expr = 0;
    for (std::size_t i = 0; i < masked_.size(); ++i) {
      const char c = masked_[i];
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (seg == npos) seg = i;
      switch (c) {
        case '(':
        case '[':
          ++paren;
          break;
        case ')':
        case ']':
          if (--paren < 0) return false;
          break;
        case '{':
          if (paren > 0 || expr > 0 || initializer_brace(seg, i)) {
            ++expr;
          } else {
            open_block(seg, i);
            seg = npos;
          }
          break;
        case '}':
          if (expr > 0) {
            --expr;
            break;
          }
          if (seg < i) unterminated(seg, trim_end(masked_, seg, i));
          if (stack_.size() == 1) return false;
          close_block(i);
          seg = npos;
          break;
        case ';':
          if (paren == 0 && expr == 0) {
            terminated(seg, i + 1);
            seg = npos;
          }
          break;
        default:
          break;
      }
    }
    return stack_.size() == 1 && paren == 0 && expr == 0;
  }

 private:
  bool in_body() const {
    const auto k = stack_.back().kind;
    return k == ScopeKind::Method || k == ScopeKind::Block;
  }

  std::optional<std::size_t> innermost_method() const {
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      if (it->kind == ScopeKind::Method) return it->method;
    }
    return std::nullopt;
  }

  std::string innermost_class() const {
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      if (it->kind == ScopeKind::Class) return file_.classes[*it->klass].name;
    }
    return {};
  }

  bool initializer_brace(std::size_t seg, std::size_t brace) const {
    if (seg == brace) return false;
    std::size_t p = brace;
    while (p > seg && std::isspace(static_cast<unsigned char>(masked_[p - 1]))) --p;
    if (p == seg) return false;
    const char prev = masked_[p - 1];
    if (prev == '=' || prev == ',' || prev == ']') return true;
    const std::string_view before(masked_.data() + seg, p - seg);
    return before.size() >= 6 && before.substr(before.size() - 6) == "return" &&
           (before.size() == 6 ||
            !std::isalnum(static_cast<unsigned char>(before[before.size() - 7])));
  }

  void add_statement(std::size_t begin, std::size_t end, StatementKind kind) {
    Statement s;
    s.file = file_.path;
    s.begin = begin;
    s.end = end;
    s.text = file_.content.substr(begin, end - begin);
    s.lines = {file_.line_of(begin), file_.line_of(end - 1)};
    s.kind = kind;
    s.method = innermost_method();
    file_.statements.push_back(std::move(s));
  }

  void open_block(std::size_t seg, std::size_t brace) {
    const bool bare = seg == brace;
    const auto tokens = bare ? std::vector<Token>{}
                             : lex(std::string_view(masked_).substr(seg, brace - seg));
    if (!bare && in_body()) add_statement(seg, brace + 1, StatementKind::BlockHeader);

    const auto parent = stack_.back().kind;
    Scope scope{ScopeKind::Block, std::nullopt, std::nullopt};
    if (auto cls = class_shape(tokens)) {
      if (cls->kind == ScopeKind::Container) {
        scope.kind = ScopeKind::Container;
      } else {
        scope.kind = ScopeKind::Class;
        scope.klass = file_.classes.size();
        file_.classes.push_back({file_.path, cls->name, {file_.line_of(seg), 0}});
      }
    } else if (parent == ScopeKind::File || parent == ScopeKind::Container ||
               parent == ScopeKind::Class) {
      if (auto name = method_shape(tokens)) {
        const std::string header =
            normalize_ws(std::string_view(masked_).substr(seg, brace - seg));
        MethodRef m;
        m.file = file_.path;
        m.name = *name;
        m.begin = seg;
        m.signature_line = file_.line_of(seg);
        m.signature_hash = fnv1a(header);
        const auto cls = innermost_class();
        if (!cls.empty()) m.class_name = cls;
        scope.kind = ScopeKind::Method;
        scope.method = file_.methods.size();
        file_.methods.push_back(std::move(m));
        file_.declarations.push_back(
            {DeclarationKind::Method, *name, header, cls, file_.path, file_.line_of(seg)});
      }
    }
    stack_.push_back(scope);
  }

  void close_block(std::size_t brace) {
    const Scope scope = stack_.back();
    stack_.pop_back();
    if (scope.kind == ScopeKind::Method) {
      auto& m = file_.methods[*scope.method];
      m.end = brace + 1;
      m.body = {m.signature_line, file_.line_of(brace)};
    } else if (scope.kind == ScopeKind::Class) {
      file_.classes[*scope.klass].span.last = file_.line_of(brace);
    }
  }

  void terminated(std::size_t seg, std::size_t end) {
    if (end - seg <= 1) return;  // lone ';'
    if (in_body()) {
      add_statement(seg, end, StatementKind::Simple);
    } else {
      member_declaration(seg, end - 1);
    }
  }

  void unterminated(std::size_t seg, std::size_t end) {
    if (in_body()) {
      add_statement(seg, end, StatementKind::Other);
    } else {
      member_declaration(seg, end);
    }
  }

  // Field or bodiless method declared at class or file scope.
  void member_declaration(std::size_t seg, std::size_t end) {
    const std::string_view text = std::string_view(masked_).substr(seg, end - seg);
    const auto tokens = lex(text);
    if (tokens.empty()) return;
    const auto first = tokens.front().text;
    if (first == "import" || first == "package" || first == "using" || first == "typedef" ||
        first == "friend" || first == "return") {
      return;
    }
    const std::string cls = innermost_class();
    const int line = file_.line_of(seg);
    if (auto name = method_shape(tokens)) {
      file_.declarations.push_back(
          {DeclarationKind::Method, *name, normalize_ws(text), cls, file_.path, line});
      return;
    }
    // Split at depth-0 commas; each part names one field.
    std::size_t eq_cut = text.size();
    int depth = 0;
    std::size_t part_begin = 0;
    std::vector<std::pair<std::size_t, std::size_t>> parts;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      const auto t = tokens[j].text;
      if (t == "(" || t == "[" || t == "{" || t == "<") ++depth;
      if (t == ")" || t == "]" || t == "}" || t == ">") --depth;
      if (t == ">>") depth -= 2;
      if (depth <= 0 && t == "," ) {
        parts.emplace_back(part_begin, j);
        part_begin = j + 1;
      }
      if (depth <= 0 && t == "=" && eq_cut == text.size()) eq_cut = tokens[j].offset;
    }
    parts.emplace_back(part_begin, tokens.size());
    const std::string signature = normalize_ws(text.substr(0, eq_cut));
    for (auto [b, e] : parts) {
      std::size_t stop = e;
      for (std::size_t j = b; j < e; ++j) {
        if (tokens[j].text == "=") {
          stop = j;
          break;
        }
      }
      for (std::size_t j = stop; j > b; --j) {
        const auto& t = tokens[j - 1];
        if (t.kind == TokenKind::Identifier) {
          if (!is_keyword(t.text)) {
            file_.declarations.push_back({DeclarationKind::Field, std::string(t.text), signature,
                                          cls, file_.path, line});
          }
          break;
        }
        if (t.text != "[" && t.text != "]") break;
      }
    }
  }

  SourceFile& file_;
  std::string masked_;
  std::vector<Scope> stack_;
};

void compute_line_starts(SourceFile& f) {
  f.line_starts.clear();
  f.line_starts.push_back(0);
  for (std::size_t i = 0; i < f.content.size(); ++i) {
    if (f.content[i] == '\n' && i + 1 < f.content.size()) f.line_starts.push_back(i + 1);
  }
}

void segment_line_wise(SourceFile& f) {
  f.statements.clear();
  f.methods.clear();
  f.classes.clear();
  f.declarations.clear();
  f.line_wise = true;
  for (int line = 1; line <= f.line_count(); ++line) {
    const std::size_t start = f.line_starts[line - 1];
    const std::size_t stop = start + f.line_text(line).size();
    std::size_t b = start;
    while (b < stop && std::isspace(static_cast<unsigned char>(f.content[b]))) ++b;
    const std::size_t e = trim_end(f.content, b, stop);
    if (b == e) continue;
    Statement s;
    s.file = f.path;
    s.begin = b;
    s.end = e;
    s.text = f.content.substr(b, e - b);
    s.lines = {line, line};
    s.kind = StatementKind::Other;
    f.statements.push_back(std::move(s));
  }
}

void build_line_map(const std::vector<SourceFile>& files,
                    std::vector<std::vector<int>>& line_map) {
  line_map.clear();
  for (const auto& f : files) {
    std::vector<int> map(static_cast<std::size_t>(f.line_count()) + 2, -1);
    for (std::size_t s = 0; s < f.statements.size(); ++s) {
      for (int l = f.statements[s].lines.first; l <= f.statements[s].lines.last; ++l) {
        if (map[l] < 0) map[l] = static_cast<int>(s);
      }
    }
    line_map.push_back(std::move(map));
  }
}

}  // namespace

int SourceFile::line_of(std::size_t offset) const {
  const auto it = std::upper_bound(line_starts.begin(), line_starts.end(), offset);
  return static_cast<int>(it - line_starts.begin());
}

std::string_view SourceFile::line_text(int line) const {
  if (line < 1 || line > line_count()) return {};
  const std::size_t start = line_starts[line - 1];
  std::size_t stop = line < line_count() ? line_starts[line] : content.size();
  if (stop > start && content[stop - 1] == '\n') --stop;
  if (stop > start && content[stop - 1] == '\r') --stop;
  return std::string_view(content).substr(start, stop - start);
}

SourceFile segment_file(std::string path, std::string content, std::string* warning) {
  SourceFile f;
  f.path = std::move(path);
  f.content = std::move(content);
  compute_line_starts(f);
  Segmenter seg(f);
  if (!seg.run()) {
    segment_line_wise(f);
    if (warning) *warning = f.path + ": unbalanced delimiters, indexed line-wise";
  }
  return f;
}

const SourceFile* SourceIndex::file(std::string_view path) const {
  for (const auto& f : files_) {
    if (f.path == path) return &f;
  }
  return nullptr;
}

const SourceFile& SourceIndex::require_file(std::string_view path) const {
  const auto* f = file(path);
  if (!f) throw InputError("file not in index: " + std::string(path));
  return *f;
}

const Statement* SourceIndex::statement_at(std::string_view path, int line) const {
  for (std::size_t i = 0; i < files_.size(); ++i) {
    if (files_[i].path != path) continue;
    const auto& map = line_to_statement_[i];
    if (line < 0 || static_cast<std::size_t>(line) >= map.size() || map[line] < 0) {
      return nullptr;
    }
    return &files_[i].statements[map[line]];
  }
  return nullptr;
}

std::vector<const MethodRef*> SourceIndex::methods_named(std::string_view path,
                                                         std::string_view name) const {
  std::vector<const MethodRef*> out;
  if (const auto* f = file(path)) {
    for (const auto& m : f->methods) {
      if (m.name == name) out.push_back(&m);
    }
  }
  return out;
}

std::vector<const ClassInfo*> SourceIndex::classes_named(std::string_view name) const {
  std::vector<const ClassInfo*> out;
  for (const auto& f : files_) {
    for (const auto& c : f.classes) {
      if (c.name == name) out.push_back(&c);
    }
  }
  return out;
}

SourceIndex index_sources(std::vector<std::pair<std::string, std::string>> sources) {
  std::sort(sources.begin(), sources.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SourceIndex index;
  index.generation_ = g_next_generation++;
  for (auto& [path, content] : sources) {
    std::string warning;
    index.files_.push_back(segment_file(path, std::move(content), &warning));
    if (!warning.empty()) index.warnings_.push_back(warning);
  }
  for (auto& f : index.files_) {
    for (auto& m : f.methods) m.generation = index.generation_;
  }
  build_line_map(index.files_, index.line_to_statement_);
  return index;
}

bool glob_match(std::string_view pattern, std::string_view path) {
  if (pattern.empty()) return path.empty();
  if (pattern.substr(0, 2) == "**") {
    std::string_view rest = pattern.substr(2);
    if (!rest.empty() && rest.front() == '/') {
      rest.remove_prefix(1);
      if (glob_match(rest, path)) return true;
      for (std::size_t k = 0; k < path.size(); ++k) {
        if (path[k] == '/' && glob_match(rest, path.substr(k + 1))) return true;
      }
      return false;
    }
    for (std::size_t k = 0; k <= path.size(); ++k) {
      if (glob_match(rest, path.substr(k))) return true;
    }
    return false;
  }
  if (pattern.front() == '*') {
    for (std::size_t k = 0; k <= path.size(); ++k) {
      if (glob_match(pattern.substr(1), path.substr(k))) return true;
      if (k < path.size() && path[k] == '/') break;
    }
    return false;
  }
  if (path.empty()) return false;
  if (pattern.front() == '?') {
    return path.front() != '/' && glob_match(pattern.substr(1), path.substr(1));
  }
  return pattern.front() == path.front() && glob_match(pattern.substr(1), path.substr(1));
}

SourceIndex index_source(const fs::path& root, std::span<const std::string> include_patterns) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw InputError("project root does not exist or is not a directory: " + root.string());
  }
  std::vector<std::string> matched;
  for (auto it = fs::recursive_directory_iterator(
           root, fs::directory_options::skip_permission_denied, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (!it->is_regular_file(ec)) continue;
    const std::string rel = fs::relative(it->path(), root, ec).generic_string();
    for (const auto& p : include_patterns) {
      if (glob_match(p, rel)) {
        matched.push_back(rel);
        break;
      }
    }
  }
  std::sort(matched.begin(), matched.end());
  std::vector<std::pair<std::string, std::string>> sources;
  std::vector<std::string> warnings;
  for (const auto& rel : matched) {
    std::ifstream in(root / rel, std::ios::binary);
    if (!in) {
      warnings.push_back(rel + ": unreadable, skipped");
      continue;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
      warnings.push_back(rel + ": read error, skipped");
      continue;
    }
    sources.emplace_back(rel, buf.str());
  }
  SourceIndex index = index_sources(std::move(sources));
  index.warnings_.insert(index.warnings_.begin(), warnings.begin(), warnings.end());
  return index;
}

std::optional<MethodRef> enclosing_method(const SourceIndex& index, std::string_view file,
                                          int line) {
  const auto& f = index.require_file(file);
  const MethodRef* best = nullptr;
  for (const auto& m : f.methods) {
    if (!m.body.contains(line)) continue;
    if (!best || m.begin >= best->begin) best = &m;
  }
  if (!best) return std::nullopt;
  return *best;
}

std::vector<Identifier> identifiers_in(std::string_view text) {
  const std::string masked = mask_source(text);
  const auto tokens = lex(masked);
  std::vector<Identifier> out;
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto& t = tokens[j];
    if (t.kind != TokenKind::Identifier || is_keyword(t.text)) continue;
    IdentifierKind kind = IdentifierKind::Variable;
    if (j + 1 < tokens.size() && tokens[j + 1].text == "(") {
      kind = IdentifierKind::Call;
    } else if (j > 0 && (tokens[j - 1].text == "." || tokens[j - 1].text == "->")) {
      kind = IdentifierKind::FieldAccess;
    }
    Identifier id{kind, std::string(t.text)};
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(std::move(id));
  }
  return out;
}

std::vector<Identifier> identifiers_in(const Statement& statement) {
  return identifiers_in(statement.text);
}

std::string method_body(const SourceIndex& index, const MethodRef& ref) {
  if (ref.generation != index.generation()) {
    throw StaleReferenceError("method reference " + ref.file + "::" + ref.name +
                              " belongs to a different index generation");
  }
  const auto* f = index.file(ref.file);
  if (!f) throw StaleReferenceError("file no longer indexed: " + ref.file);
  for (const auto& m : f->methods) {
    if (m.same_method(ref) && m.end == ref.end) {
      return f->content.substr(m.begin, m.end - m.begin);
    }
  }
  throw StaleReferenceError("method " + ref.file + "::" + ref.name + " changed since indexing");
}

}  // namespace sibfix
