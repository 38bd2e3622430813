#include <gtest/gtest.h>

#include <random>

#include "sibfix/error.hpp"
#include "sibfix/subject_model.hpp"
#include "test_support.hpp"

using namespace sibfix;

namespace {

const char* kJava = R"(package demo;

import java.util.List;

public class Counter {
    private int count = 0;
    private final String label;

    public Counter(String label) {
        this.label = label;
    }

    public int next(int step) {
        int value = count + step;
        if (value > 10) {
            value = 10;
        }
        count = value;
        return count;
    }

    int f(){ return 1; }

    public abstract void hook();

    static class Inner {
        void run() {
            Runnable r = new Runnable() {
                public void run() {
                    System.out.println("in { anon }");
                }
            };
            r.run();
        }
    }
}
)";

SourceIndex index_one(const std::string& path, const std::string& content) {
  return index_sources({{path, content}});
}

std::vector<std::string> method_names(const SourceFile& f) {
  std::vector<std::string> out;
  for (const auto& m : f.methods) out.push_back(m.name);
  return out;
}

}  // namespace

TEST(Segmenter, FindsMethodsIncludingNestedAndAnonymous) {
  const auto index = index_one("demo/Counter.java", kJava);
  const auto& f = index.require_file("demo/Counter.java");
  EXPECT_FALSE(f.line_wise);
  EXPECT_EQ(method_names(f), (std::vector<std::string>{"Counter", "next", "f", "run", "run"}));
}

TEST(Segmenter, MethodSpanCoversHeaderThroughClosingBrace) {
  const auto index = index_one("demo/Counter.java", kJava);
  const auto& f = index.require_file("demo/Counter.java");
  const auto& next = f.methods[1];
  EXPECT_EQ(next.signature_line, 13);
  EXPECT_EQ(next.body, (LineSpan{13, 20}));
  EXPECT_EQ(next.class_name, std::optional<std::string>("Counter"));
  const std::string text = f.content.substr(next.begin, next.end - next.begin);
  EXPECT_EQ(text.rfind("public int next(int step) {", 0), 0u);
  EXPECT_EQ(text.back(), '}');
}

TEST(Segmenter, OneLineMethodHasOneStatement) {
  const auto index = index_one("A.java", "class A {\n  int f(){ return 1; }\n}\n");
  const auto& f = index.require_file("A.java");
  ASSERT_EQ(f.methods.size(), 1u);
  EXPECT_EQ(f.methods[0].name, "f");
  EXPECT_EQ(f.methods[0].body, (LineSpan{2, 2}));
  ASSERT_EQ(f.statements.size(), 1u);
  EXPECT_EQ(f.statements[0].text, "return 1;");
  EXPECT_EQ(f.statements[0].method, std::optional<std::size_t>(0));
}

TEST(Segmenter, StatementsAndBlockHeaders) {
  const auto index = index_one("demo/Counter.java", kJava);
  const auto* s = index.statement_at("demo/Counter.java", 14);
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->text, "int value = count + step;");
  EXPECT_EQ(s->kind, StatementKind::Simple);
  const auto* header = index.statement_at("demo/Counter.java", 15);
  ASSERT_NE(header, nullptr);
  EXPECT_EQ(header->kind, StatementKind::BlockHeader);
  EXPECT_EQ(header->text, "if (value > 10) {");
  EXPECT_EQ(index.statement_at("demo/Counter.java", 2), nullptr);
}

TEST(Segmenter, MultiLineStatementSpansLines) {
  const auto index =
      index_one("B.java", "class B {\n  void g() {\n    call(a,\n         b);\n  }\n}\n");
  const auto* s = index.statement_at("B.java", 4);
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->lines, (LineSpan{3, 4}));
  EXPECT_EQ(index.statement_at("B.java", 3), s);
}

TEST(Segmenter, DeclarationsOfFieldsAndBodilessMethods) {
  const auto index = index_one("demo/Counter.java", kJava);
  const auto& f = index.require_file("demo/Counter.java");
  std::vector<std::string> fields;
  std::vector<std::string> methods;
  for (const auto& d : f.declarations) {
    (d.kind == DeclarationKind::Field ? fields : methods).push_back(d.name);
    EXPECT_FALSE(d.signature.empty());
  }
  EXPECT_NE(std::find(fields.begin(), fields.end(), "count"), fields.end());
  EXPECT_NE(std::find(fields.begin(), fields.end(), "label"), fields.end());
  EXPECT_NE(std::find(methods.begin(), methods.end(), "hook"), methods.end());
  EXPECT_NE(std::find(methods.begin(), methods.end(), "next"), methods.end());
  for (const auto& d : f.declarations) {
    if (d.name == "count") {
      EXPECT_EQ(d.signature, "private int count");
    }
  }
}

TEST(Segmenter, ClassesAreRecorded) {
  const auto index = index_one("demo/Counter.java", kJava);
  EXPECT_EQ(index.classes_named("Counter").size(), 1u);
  EXPECT_EQ(index.classes_named("Inner").size(), 1u);
  EXPECT_TRUE(index.classes_named("Missing").empty());
}

TEST(Segmenter, UnbalancedFileFallsBackToLines) {
  std::string warning;
  const auto f = segment_file("Broken.java", "class X {\n  void f() {\n    a();\n", &warning);
  EXPECT_TRUE(f.line_wise);
  EXPECT_TRUE(f.methods.empty());
  EXPECT_EQ(f.statements.size(), 3u);
  EXPECT_NE(warning.find("line-wise"), std::string::npos);
}

TEST(Segmenter, CppFreeFunctionsAndNamespaces) {
  const auto index = index_one("x.cpp",
                               "#include <vector>\n"
                               "namespace n {\n"
                               "int add(int a, int b) {\n"
                               "  return a + b;\n"
                               "}\n"
                               "struct S {\n"
                               "  int get() const { return v; }\n"
                               "  int v = 0;\n"
                               "};\n"
                               "}  // namespace n\n");
  const auto& f = index.require_file("x.cpp");
  EXPECT_EQ(method_names(f), (std::vector<std::string>{"add", "get"}));
  EXPECT_FALSE(f.methods[0].class_name.has_value());
  EXPECT_EQ(f.methods[1].class_name, std::optional<std::string>("S"));
}

TEST(Segmenter, InitializerBracesAreNotBlocks) {
  const auto index = index_one("C.java",
                               "class C {\n"
                               "  int[] xs = {1, 2, 3};\n"
                               "  void f() {\n"
                               "    int[] ys = new int[] {4, 5};\n"
                               "    use(ys);\n"
                               "  }\n"
                               "}\n");
  const auto& f = index.require_file("C.java");
  ASSERT_EQ(f.methods.size(), 1u);
  ASSERT_EQ(f.statements.size(), 2u);
  EXPECT_EQ(f.statements[0].text, "int[] ys = new int[] {4, 5};");
}

TEST(Segmenter, RoundTripStatementsAreVerbatimSlices) {
  const auto index = index_one("demo/Counter.java", kJava);
  const auto& f = index.require_file("demo/Counter.java");
  for (const auto& s : f.statements) {
    EXPECT_EQ(f.content.substr(s.begin, s.end - s.begin), s.text);
    EXPECT_EQ(f.line_of(s.begin), s.lines.first);
    EXPECT_EQ(f.line_of(s.end - 1), s.lines.last);
  }
  EXPECT_EQ(index, index_one("demo/Counter.java", kJava));
}

TEST(EnclosingMethod, InnermostMatchesBruteForce) {
  const auto index = index_one("demo/Counter.java", kJava);
  const auto& f = index.require_file("demo/Counter.java");
  for (int line = 1; line <= f.line_count(); ++line) {
    const MethodRef* expected = nullptr;
    for (const auto& m : f.methods) {
      if (m.body.first <= line && line <= m.body.last &&
          (!expected || m.body.first >= expected->body.first)) {
        expected = &m;
      }
    }
    const auto got = enclosing_method(index, "demo/Counter.java", line);
    ASSERT_EQ(got.has_value(), expected != nullptr) << "line " << line;
    if (got) {
      EXPECT_EQ(*got, *expected) << "line " << line;
    }
  }
  const auto inner = enclosing_method(index, "demo/Counter.java", 30);
  ASSERT_TRUE(inner);
  EXPECT_EQ(inner->body.first, 29);
  EXPECT_THROW(enclosing_method(index, "nope.java", 1), InputError);
}

TEST(Identifiers, KindsAndOrder) {
  const auto ids = identifiers_in("result = this.helper.compute(x, y.size) + Foo.BAR;");
  const std::vector<Identifier> expected = {
      {IdentifierKind::Variable, "result"}, {IdentifierKind::FieldAccess, "helper"},
      {IdentifierKind::Call, "compute"},    {IdentifierKind::Variable, "x"},
      {IdentifierKind::Variable, "y"},      {IdentifierKind::FieldAccess, "size"},
      {IdentifierKind::Variable, "Foo"},    {IdentifierKind::FieldAccess, "BAR"},
  };
  EXPECT_EQ(ids, expected);
}

TEST(Identifiers, DedupesAndSkipsKeywordsAndLiterals) {
  const auto ids = identifiers_in("if (a != null && a.ok()) return \"a b\" + a;");
  const std::vector<Identifier> expected = {{IdentifierKind::Variable, "a"},
                                            {IdentifierKind::Call, "ok"}};
  EXPECT_EQ(ids, expected);
}

TEST(MethodBody, StaleReferencesAreRejected) {
  const auto index = index_one("demo/Counter.java", kJava);
  const auto& m = index.require_file("demo/Counter.java").methods[1];
  EXPECT_EQ(method_body(index, m).substr(0, 10), "public int");
  const auto other = index_one("demo/Counter.java", kJava);
  EXPECT_THROW(method_body(other, m), StaleReferenceError);
  MethodRef moved = m;
  moved.end += 1;
  EXPECT_THROW(method_body(index, moved), StaleReferenceError);
}

TEST(GlobMatch, Patterns) {
  EXPECT_TRUE(glob_match("**/*.java", "a/b/C.java"));
  EXPECT_TRUE(glob_match("**/*.java", "C.java"));
  EXPECT_TRUE(glob_match("src/*.c", "src/x.c"));
  EXPECT_FALSE(glob_match("src/*.c", "src/sub/x.c"));
  EXPECT_TRUE(glob_match("src/?.c", "src/x.c"));
  EXPECT_FALSE(glob_match("*.java", "a/C.java"));
}

TEST(IndexSource, ReadsMatchingFilesInSortedOrder) {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "src/b/B.java", "class B { void f() { g(); } }\n");
  testsupport::write_file(dir / "src/a/A.java", "class A { }\n");
  testsupport::write_file(dir / "src/a/notes.txt", "x");
  const std::vector<std::string> patterns = {"src/**/*.java"};
  const auto index = index_source(dir.path(), patterns);
  ASSERT_EQ(index.files().size(), 2u);
  EXPECT_EQ(index.files()[0].path, "src/a/A.java");
  EXPECT_EQ(index.files()[1].path, "src/b/B.java");
  EXPECT_THROW(index_source(dir / "missing", patterns), InputError);
}
