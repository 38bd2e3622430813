#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "sibfix/text_similarity.hpp"
#include "tokenizer_cases.hpp"

using namespace sibfix;

TEST(Tokenize, HandBuiltTable) {
  const auto& cases = testsupport::tokenizer_cases();
  ASSERT_GE(cases.size(), 30u);
  for (const auto& c : cases) {
    EXPECT_EQ(tokenize(c.input), c.expected) << "input: " << c.input;
  }
}

TEST(TfIdf, MatchesDirectFormula) {
  const std::vector<std::vector<std::string>> docs = {
      {"a", "b", "b"}, {"b", "c"}, {"a", "c", "c", "d"}, {"e"}};
  const TfIdfModel model(docs);
  ASSERT_EQ(model.size(), 4u);

  // Independent dense recomputation: w = tf * ln(N / df).
  std::map<std::string, int> df;
  for (const auto& d : docs) {
    std::set<std::string> seen(d.begin(), d.end());
    for (const auto& t : seen) ++df[t];
  }
  auto weights = [&](const std::vector<std::string>& d) {
    std::map<std::string, double> w;
    for (const auto& t : d) w[t] += 1.0;
    for (auto& [t, v] : w) v *= std::log(4.0 / df[t]);
    return w;
  };
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t j = 0; j < docs.size(); ++j) {
      const auto wi = weights(docs[i]);
      const auto wj = weights(docs[j]);
      double d = 0, ni = 0, nj = 0;
      for (const auto& [t, v] : wi) {
        ni += v * v;
        if (wj.count(t)) d += v * wj.at(t);
      }
      for (const auto& [t, v] : wj) nj += v * v;
      const double expected = (ni == 0 || nj == 0) ? 0.0 : d / std::sqrt(ni * nj);
      EXPECT_NEAR(model.cosine(i, j), expected, 1e-12) << i << "," << j;
    }
  }
}

TEST(TfIdf, TermInEveryDocumentHasZeroWeight) {
  const std::vector<std::vector<std::string>> docs = {{"x", "y"}, {"x"}};
  const TfIdfModel model(docs);
  EXPECT_EQ(model.cosine(0, 1), 0.0);
  EXPECT_NEAR(model.cosine(0, 0), 1.0, 1e-12);
}

TEST(Jaccard, Basics) {
  const std::vector<std::string> a = {"a", "b", "c"};
  const std::vector<std::string> b = {"b", "c", "d"};
  EXPECT_DOUBLE_EQ(jaccard(a, b), 0.5);
  const std::vector<std::string> dup = {"a", "a", "b", "c"};
  EXPECT_DOUBLE_EQ(jaccard(a, dup), 1.0);
  const std::vector<std::string> empty;
  EXPECT_DOUBLE_EQ(jaccard(empty, empty), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(a, empty), 0.0);
}
