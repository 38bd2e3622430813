#include "sibfix/patch.hpp"

#include <algorithm>
#include <regex>

#include "sibfix/embedding.hpp"

namespace sibfix {

namespace {

constexpr std::string_view kMarker = "=== PATCH";

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::size_t leading_backticks(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && s[n] == '`') ++n;
  return n;
}

struct Line {
  std::string_view text;  // without '\n'
  std::size_t offset;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back({text.substr(start), start});
      break;
    }
    lines.push_back({text.substr(start, nl - start), start});
    start = nl + 1;
  }
  return lines;
}

}  // namespace

std::string Patch::id() const {
  std::string material;
  for (const auto& e : edits) {
    material += e.file;
    material.push_back('\0');
    material += e.method;
    material.push_back('\0');
    material += e.replacement;
    material.push_back('\x1e');
  }
  return sha256_hex(material).substr(0, 16);
}

bool Patch::upsert(MethodEdit edit) {
  auto it = std::lower_bound(edits.begin(), edits.end(), edit, [](const auto& a, const auto& b) {
    return std::tie(a.file, a.method) < std::tie(b.file, b.method);
  });
  if (it != edits.end() && it->file == edit.file && it->method == edit.method) {
    *it = std::move(edit);
    return true;
  }
  edits.insert(it, std::move(edit));
  return false;
}

Patch parse_patch(std::string_view response, std::vector<std::string>* warnings) {
  static const std::regex kMarkerRe(R"(^=== PATCH file=(\S+) method=(\S+) ===$)");
  const auto lines = split_lines(response);
  Patch patch;
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view head = rtrim(ltrim(lines[i].text));
    if (head.substr(0, kMarker.size()) != kMarker) continue;
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(head.begin(), head.end(), m, kMarkerRe)) {
      throw PatchParseError("malformed patch marker: " + std::string(head), lines[i].offset);
    }
    const std::size_t marker_offset = lines[i].offset;
    std::size_t j = i + 1;
    while (j < lines.size() && rtrim(lines[j].text).empty()) ++j;
    if (j >= lines.size()) {
      throw PatchParseError("patch marker without a fenced block", marker_offset);
    }
    const std::string_view open = ltrim(lines[j].text);
    const std::size_t fence = leading_backticks(open);
    if (fence < 3) throw PatchParseError("expected an opening ``` fence", lines[j].offset);
    std::string body;
    bool closed = false;
    std::size_t k = j + 1;
    for (; k < lines.size(); ++k) {
      const std::string_view t = rtrim(ltrim(lines[k].text));
      const std::size_t ticks = leading_backticks(t);
      if (ticks >= fence && ticks == t.size()) {
        closed = true;
        break;
      }
      if (k > j + 1) body.push_back('\n');
      body.append(lines[k].text);
    }
    if (!closed) throw PatchParseError("unterminated code fence", lines[j].offset);
    MethodEdit edit{m[1].str(), m[2].str(), std::move(body)};
    if (patch.upsert(edit) && warnings) {
      warnings->push_back("duplicate patch block for " + edit.file + " method " + edit.method +
                          "; keeping the last one");
    }
    ++blocks;
    i = k;
  }
  if (blocks == 0) throw PatchParseError("response contains no patch block", 0);
  return patch;
}

std::string render_patch(const Patch& patch, std::string_view language) {
  std::string out;
  for (const auto& e : patch.edits) {
    std::size_t longest = 0;
    for (const auto& line : split_lines(e.replacement)) {
      longest = std::max(longest, leading_backticks(ltrim(line.text)));
    }
    const std::string fence(std::max<std::size_t>(3, longest + 1), '`');
    out += "=== PATCH file=" + e.file + " method=" + e.method + " ===\n";
    out += fence + std::string(language) + "\n";
    out += e.replacement;
    out += "\n" + fence + "\n";
  }
  return out;
}

Patch combine(const Patch& generated, const Patch& promising) {
  Patch out = promising;
  for (const auto& e : generated.edits) out.upsert(e);
  out.provenance = PatchProvenance::Combined;
  out.parent = promising.id();
  return out;
}

}  // namespace sibfix
