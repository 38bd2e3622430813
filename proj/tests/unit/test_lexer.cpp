#include <gtest/gtest.h>

#include "sibfix/lexer.hpp"

using namespace sibfix;

TEST(MaskSource, BlanksCommentsAndLiteralsButKeepsLayout) {
  const std::string src = "int a = 1; // note { \n/* } */ s = \"{\\\"}\"; c = '}';\n#define X {\n";
  const std::string masked = mask_source(src);
  ASSERT_EQ(masked.size(), src.size());
  EXPECT_EQ(std::count(masked.begin(), masked.end(), '\n'), 3);
  EXPECT_EQ(masked.find('{'), std::string::npos);
  EXPECT_EQ(masked.find('}'), std::string::npos);
  EXPECT_NE(masked.find("int a = 1;"), std::string::npos);
}

TEST(MaskSource, UnterminatedBlockCommentRunsToEnd) {
  const std::string masked = mask_source("a /* b {\n c");
  EXPECT_EQ(masked, "a       \n  ");
}

TEST(Lex, SplitsIdentifiersNumbersAndOperators) {
  const auto tokens = lex("x += foo->bar(42) == y;");
  std::vector<std::string> texts;
  for (const auto& t : tokens) texts.emplace_back(t.text);
  EXPECT_EQ(texts, (std::vector<std::string>{"x", "+=", "foo", "->", "bar", "(", "42", ")", "==",
                                             "y", ";"}));
  EXPECT_EQ(tokens[0].kind, TokenKind::Identifier);
  EXPECT_EQ(tokens[6].kind, TokenKind::Number);
  EXPECT_EQ(tokens[1].kind, TokenKind::Punct);
  EXPECT_EQ(tokens[2].offset, 5u);
}

TEST(Keywords, Classification) {
  EXPECT_TRUE(is_keyword("return"));
  EXPECT_TRUE(is_keyword("int"));
  EXPECT_FALSE(is_keyword("foo"));
  EXPECT_TRUE(is_type_keyword("double"));
  EXPECT_FALSE(is_type_keyword("return"));
  EXPECT_TRUE(is_assignment_operator("="));
  EXPECT_TRUE(is_assignment_operator("<<="));
  EXPECT_FALSE(is_assignment_operator("=="));
  EXPECT_FALSE(is_assignment_operator("<="));
}
