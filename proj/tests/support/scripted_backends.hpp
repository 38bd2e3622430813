#pragma once

// Prompt-aware backends for the sibling-bug fixture. They look at what the
// prompt asks for and answer the way a model would in a given scenario.

#include <regex>
#include <string>
#include <vector>

#include "sibfix/llm_backend.hpp"
#include "sibfix/patch.hpp"
#include "sibfix/prompting.hpp"
#include "test_support.hpp"

namespace testsupport {

struct MethodHeader {
  std::string file;
  std::string method;
};

/// Method groups listed in a prompt's buggy-methods section.
inline std::vector<MethodHeader> prompted_methods(const std::string& prompt) {
  static const std::regex kHeader(R"(^#### (\S+) :: method (\S+) )");
  std::vector<MethodHeader> out;
  for (const auto& [section, body] : sibfix::split_sections(prompt)) {
    if (section != sibfix::PromptSection::BuggyMethods) continue;
    std::istringstream lines(body);
    std::string line;
    std::smatch m;
    while (std::getline(lines, line)) {
      if (std::regex_search(line, m, kHeader)) out.push_back({m[1], m[2]});
    }
  }
  return out;
}

inline std::string section_text(const std::string& prompt, sibfix::PromptSection wanted) {
  for (const auto& [section, body] : sibfix::split_sections(prompt)) {
    if (section == wanted) return body;
  }
  return {};
}

/// The three correct method edits from the bundled response.
inline sibfix::Patch sibling_fix() {
  return sibfix::parse_patch(
      read_file(fixtures() / "sibling_bug" / "responses" / "loc1_attempt1.txt"));
}

inline sibfix::MethodEdit fix_for(const std::string& method) {
  for (const auto& e : sibling_fix().edits) {
    if (e.method == method) return e;
  }
  throw std::runtime_error("no fix for " + method);
}

/// The same method with the original (buggy) call.
inline sibfix::MethodEdit buggy_version(const std::string& method) {
  auto e = fix_for(method);
  e.replacement = std::regex_replace(e.replacement, std::regex("getUnboundParameters"),
                                     "getAllParameters");
  return e;
}

/// A cosmetic rewrite of Report.totalParameters that keeps its behavior.
inline sibfix::MethodEdit report_rewrite() {
  return {"src/tmpl/Report.java", "totalParameters",
          "public int totalParameters() {\n"
          "        List<Parameter> every = parameters.getAllParameters();\n"
          "        return every.size();\n"
          "    }"};
}

inline std::string respond(const sibfix::Patch& p) {
  return "Proposed change.\n\n" + sibfix::render_patch(p, "java");
}

inline bool is_counter(const std::string& method) {
  return method == "countPlaceholders" || method == "missingSegments" ||
         method == "pendingFields";
}

/// Simultaneous prompts (several methods) get a do-nothing answer. Single
/// method prompts for a counter get that counter's fix; the Report prompt
/// gets the Report rewrite bundled with all three counters restored to their
/// buggy form, so combining it with any promising patch undoes that patch's
/// progress.
class CarryOverBackend final : public sibfix::Backend {
 public:
  std::string name() const override { return "carry-over"; }
  std::string complete(const sibfix::CompletionRequest& request) override {
    const auto methods = prompted_methods(request.prompt);
    sibfix::Patch p;
    if (methods.size() != 1) {
      ++simultaneous_prompts;
      p.upsert(report_rewrite());
    } else if (is_counter(methods[0].method)) {
      p.upsert(fix_for(methods[0].method));
    } else if (methods[0].method == "totalParameters") {
      p.upsert(report_rewrite());
      for (const auto* m : {"countPlaceholders", "missingSegments", "pendingFields"}) {
        p.upsert(buggy_version(m));
      }
    } else {
      return "No change needed here.";
    }
    return respond(p);
  }
  int simultaneous_prompts = 0;
};

/// The first answer fixes the three counters but also breaks Report. The
/// full fix is only produced once the feedback section names the test that
/// the previous answer broke.
class FeedbackBackend final : public sibfix::Backend {
 public:
  static constexpr const char* kBrokenTest = "tmpl.ParameterSetTest#testReportTotals";

  std::string name() const override { return "feedback"; }
  std::string complete(const sibfix::CompletionRequest& request) override {
    feedback_sections.push_back(section_text(request.prompt, sibfix::PromptSection::Feedback));
    if (feedback_sections.back().find(kBrokenTest) != std::string::npos) {
      return respond(sibling_fix());
    }
    auto p = sibling_fix();
    p.upsert({"src/tmpl/Report.java", "totalParameters",
              "public int totalParameters() {\n"
              "        List<Parameter> all = parameters.getUnboundParameters();\n"
              "        return all.size();\n"
              "    }"});
    return respond(p);
  }
  std::vector<std::string> feedback_sections;
};

}  // namespace testsupport
