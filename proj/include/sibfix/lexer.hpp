#pragma once

// Lexical helpers shared by the indexer and the similarity code. Everything
// here works on brace-language text (Java, C, C++, C#, JavaScript).

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sibfix {

/// Returns a copy of `text` of identical length in which comments,
/// preprocessor lines and the interiors of string/char literals are replaced
/// by spaces. Newlines are preserved so offsets and line numbers still agree.
std::string mask_source(std::string_view text);

enum class TokenKind { Identifier, Number, Punct };

struct Token {
  TokenKind kind;
  std::string_view text;
  std::size_t offset;  // into the lexed buffer
};

/// Splits masked text into identifiers, numbers and punctuators. Whitespace
/// is dropped. Multi-character operators (`==`, `+=`, `->`, ...) are single
/// tokens.
std::vector<Token> lex(std::string_view masked);

bool is_keyword(std::string_view word);

/// Primitive and declaration-introducing type keywords (`int`, `double`,
/// `var`, `auto`, ...).
bool is_type_keyword(std::string_view word);

bool is_assignment_operator(std::string_view punct);

}  // namespace sibfix
