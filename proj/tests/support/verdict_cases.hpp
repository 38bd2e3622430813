#pragma once

// Hand-built (baseline, patched) report pairs with the verdict each one must
// receive. Expectations follow the promising-patch rules directly: a patch is
// promising when a previously failing test now passes, or when a failing
// test's stack trace now fails later in the same method, or in a different
// method below an identical prefix.

#include <string>
#include <vector>

#include "sibfix/validation.hpp"

namespace testsupport {

struct VerdictCase {
  std::string name;
  sibfix::TestReport baseline;
  sibfix::TestReport patched;
  sibfix::VerdictKind expected;
  std::vector<std::string> regressions;
};

inline sibfix::TestResult pass(std::string id) {
  return {std::move(id), sibfix::TestStatus::Pass, "", {}};
}

inline sibfix::TestResult fail(std::string id, std::vector<sibfix::StackFrame> frames,
                               sibfix::TestStatus status = sibfix::TestStatus::Fail) {
  return {std::move(id), status, "assertion failed", std::move(frames)};
}

inline sibfix::TestReport report(std::vector<sibfix::TestResult> tests) {
  sibfix::TestReport r;
  r.tests = std::move(tests);
  return r;
}

inline std::vector<VerdictCase> verdict_cases() {
  using sibfix::StackFrame;
  using sibfix::VerdictKind;
  const StackFrame test12{"FooTest", "testBar", "test/FooTest.java", 12};
  const StackFrame test14{"FooTest", "testBar", "test/FooTest.java", 14};
  const StackFrame test9{"FooTest", "testBar", "test/FooTest.java", 9};
  const StackFrame foo30{"Foo", "bar", "src/Foo.java", 30};
  const StackFrame foo35{"Foo", "bar", "src/Foo.java", 35};
  const StackFrame foo20{"Foo", "bar", "src/Foo.java", 20};
  const StackFrame baz7{"Foo", "baz", "src/Foo.java", 7};
  const StackFrame other3{"Other", "run", "src/Other.java", 3};
  const StackFrame assert645{"org.junit.Assert", "assertEquals", "Assert.java", 645};
  const StackFrame unknown{"FooTest", "testBar", "test/FooTest.java", 0};

  std::vector<VerdictCase> c;
  c.push_back({"all tests pass",
               report({fail("T1", {test12, assert645}), pass("T2")}),
               report({pass("T1"), pass("T2")}), VerdictKind::PassAll, {}});
  c.push_back({"newly passing test",
               report({fail("T1", {test12}), fail("T2", {test12}), pass("T3")}),
               report({pass("T1"), fail("T2", {test12}), pass("T3")}), VerdictKind::Promising, {}});
  c.push_back({"same method deeper line in test",
               report({fail("T1", {test12, assert645})}),
               report({fail("T1", {test14, assert645})}), VerdictKind::Promising, {}});
  c.push_back({"same method deeper line below prefix",
               report({fail("T1", {test12, foo30})}),
               report({fail("T1", {test12, foo35})}), VerdictKind::Promising, {}});
  c.push_back({"cross-method divergence with identical prefix",
               report({fail("T1", {test12, foo30, assert645})}),
               report({fail("T1", {test12, baz7, assert645})}), VerdictKind::Promising, {}});
  c.push_back({"identical traces",
               report({fail("T1", {test12, foo30, assert645})}),
               report({fail("T1", {test12, foo30, assert645})}), VerdictKind::NoProgress, {}});
  c.push_back({"shallower line in test",
               report({fail("T1", {test12, assert645})}),
               report({fail("T1", {test9, assert645})}), VerdictKind::NoProgress, {}});
  c.push_back({"shallower line below prefix",
               report({fail("T1", {test12, foo30})}),
               report({fail("T1", {test12, foo20})}), VerdictKind::NoProgress, {}});
  c.push_back({"regression only",
               report({fail("T1", {test12, foo30}), pass("T2")}),
               report({fail("T1", {test12, foo30}), fail("T2", {other3})}), VerdictKind::NoProgress,
               {"T2"}});
  c.push_back({"newly passing despite regression",
               report({fail("T1", {test12}), pass("T2")}),
               report({pass("T1"), fail("T2", {other3})}), VerdictKind::Promising, {"T2"}});
  c.push_back({"divergence at the outermost frame",
               report({fail("T1", {test12, foo30})}),
               report({fail("T1", {other3, foo30})}), VerdictKind::NoProgress, {}});
  c.push_back({"failing test now errors without frames",
               report({fail("T1", {test12, foo30})}),
               report({fail("T1", {}, sibfix::TestStatus::Error)}), VerdictKind::NoProgress, {}});
  c.push_back({"trace progress after a regression",
               report({fail("T1", {test12, assert645}), pass("T2")}),
               report({fail("T1", {test14, assert645}), fail("T2", {other3})}),
               VerdictKind::Promising, {"T2"}});
  c.push_back({"unknown line matches any line",
               report({fail("T1", {unknown, foo30})}),
               report({fail("T1", {test12, foo35})}), VerdictKind::Promising, {}});
  c.push_back({"baseline without frames gives no trace evidence",
               report({fail("T1", {})}),
               report({fail("T1", {test12})}), VerdictKind::NoProgress, {}});
  c.push_back({"progress on one of two failing tests",
               report({fail("T1", {test12, foo30}), fail("T2", {test12, foo30})}),
               report({fail("T1", {test12, foo30}), fail("T2", {test12, foo35})}),
               VerdictKind::Promising, {}});
  c.push_back({"failing test times out",
               report({fail("T1", {test12, foo30})}),
               report({fail("T1", {}, sibfix::TestStatus::Timeout)}), VerdictKind::NoProgress, {}});
  return c;
}

}  // namespace testsupport
