#include "sibfix/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace sibfix {

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Longest first so that greedy matching picks `>>>=` before `>>`.
constexpr std::array<std::string_view, 30> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "==", "!=", "<=", ">=", "+=",
    "-=",   "*=",  "/=",  "%=",  "&=",  "|=", "^=", "++", "--", "&&",
    "||",   "->",  "::",  "<<",  ">>",  "?:", "=>", ".*", "<:", ":>"};

}  // namespace

std::string mask_source(std::string_view text) {
  std::string out(text);
  enum class State { Code, LineComment, BlockComment, String, Char, Preprocessor };
  State state = State::Code;
  bool at_line_start = true;
  const std::size_t n = text.size();
  auto blank = [&](std::size_t i) {
    if (out[i] != '\n') out[i] = ' ';
  };
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    switch (state) {
      case State::Code:
        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
          state = State::LineComment;
          blank(i);
        } else if (c == '/' && i + 1 < n && text[i + 1] == '*') {
          state = State::BlockComment;
          blank(i);
          blank(++i);
        } else if (c == '"') {
          state = State::String;
        } else if (c == '\'') {
          state = State::Char;
        } else if (c == '#' && at_line_start) {
          state = State::Preprocessor;
          blank(i);
        }
        break;
      case State::LineComment:
        if (c == '\n') {
          state = State::Code;
        } else {
          blank(i);
        }
        break;
      case State::BlockComment:
        if (c == '*' && i + 1 < n && text[i + 1] == '/') {
          blank(i);
          blank(++i);
          state = State::Code;
        } else {
          blank(i);
        }
        break;
      case State::String:
      case State::Char: {
        const char quote = state == State::String ? '"' : '\'';
        if (c == '\\' && i + 1 < n && text[i + 1] != '\n') {
          blank(i);
          blank(++i);
        } else if (c == quote) {
          state = State::Code;
        } else if (c == '\n') {
          // Unterminated literal: recover at end of line.
          state = State::Code;
        } else {
          blank(i);
        }
        break;
      }
      case State::Preprocessor:
        if (c == '\n' && !(i > 0 && text[i - 1] == '\\')) {
          state = State::Code;
        } else {
          blank(i);
        }
        break;
    }
    if (c == '\n') {
      at_line_start = true;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      at_line_start = false;
    }
  }
  return out;
}

std::vector<Token> lex(std::string_view masked) {
  std::vector<Token> tokens;
  const std::size_t n = masked.size();
  std::size_t i = 0;
  while (i < n) {
    const char c = masked[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_ident_char(masked[i])) ++i;
      tokens.push_back({TokenKind::Identifier, masked.substr(start, i - start), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(masked[i + 1])))) {
      while (i < n && (is_ident_char(masked[i]) || masked[i] == '.')) ++i;
      tokens.push_back({TokenKind::Number, masked.substr(start, i - start), start});
      continue;
    }
    std::size_t len = 1;
    for (auto op : kOperators) {
      if (masked.substr(i, op.size()) == op) {
        len = op.size();
        break;
      }
    }
    tokens.push_back({TokenKind::Punct, masked.substr(start, len), start});
    i += len;
  }
  return tokens;
}

bool is_keyword(std::string_view word) {
  static const std::unordered_set<std::string_view> kKeywords = {
      // Java
      "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class",
      "const", "continue", "default", "do", "double", "else", "enum", "extends", "final",
      "finally", "float", "for", "goto", "if", "implements", "import", "instanceof", "int",
      "interface", "long", "native", "new", "package", "private", "protected", "public",
      "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
      "throw", "throws", "transient", "try", "void", "volatile", "while", "true", "false",
      "null", "var", "record", "yield",
      // C / C++
      "auto", "bool", "constexpr", "delete", "explicit", "extern", "friend", "inline",
      "mutable", "namespace", "noexcept", "nullptr", "operator", "override", "register",
      "signed", "sizeof", "struct", "template", "typedef", "typename", "union", "unsigned",
      "using", "virtual"};
  return kKeywords.contains(word);
}

bool is_type_keyword(std::string_view word) {
  static const std::unordered_set<std::string_view> kTypes = {
      "boolean", "byte", "char", "double", "float", "int", "long", "short", "var",
      "auto", "bool", "signed", "unsigned", "void"};
  return kTypes.contains(word);
}

bool is_assignment_operator(std::string_view punct) {
  static const std::unordered_set<std::string_view> kAssign = {
      "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="};
  return kAssign.contains(punct);
}

}  // namespace sibfix
