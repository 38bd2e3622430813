#include "sibfix/prompting.hpp"

#include <algorithm>
#include <numeric>

#include "sibfix/unified_diff.hpp"

namespace sibfix {

namespace {

constexpr PromptSection kOrder[kPromptSectionCount] = {
    PromptSection::Role,        PromptSection::Task,         PromptSection::ReasoningSteps,
    PromptSection::PatchDefinitions, PromptSection::BuggyMethods, PromptSection::TestResults,
    PromptSection::Feedback,    PromptSection::Ingredients,
};

std::string fence_for(std::string_view body) {
  std::size_t longest = 0;
  std::size_t run = 0;
  for (char c : body) {
    run = c == '`' ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  return std::string(std::max<std::size_t>(3, longest + 1), '`');
}

std::string language_of(std::string_view path) {
  const auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return "";
  const auto ext = path.substr(dot + 1);
  if (ext == "java") return "java";
  if (ext == "c" || ext == "h") return "c";
  if (ext == "cc" || ext == "cpp" || ext == "cxx" || ext == "hpp" || ext == "hh") return "cpp";
  if (ext == "cs") return "csharp";
  if (ext == "js") return "javascript";
  if (ext == "ts") return "typescript";
  if (ext == "go") return "go";
  if (ext == "kt") return "kotlin";
  if (ext == "scala") return "scala";
  if (ext == "swift") return "swift";
  if (ext == "rs") return "rust";
  return std::string(ext);
}

std::string format_frame(const StackFrame& f) {
  std::string out = "    at ";
  if (!f.unit.empty()) out += f.unit + ".";
  out += f.method.empty() ? "<unknown>" : f.method;
  out += "(" + (f.file.empty() ? std::string("?") : f.file);
  if (f.line > 0) out += ":" + std::to_string(f.line);
  out += ")\n";
  return out;
}

void append_frames(std::string& out, const std::vector<StackFrame>& frames, std::size_t limit) {
  const std::size_t n = std::min(limit, frames.size());
  // Frames are stored outermost first; show the innermost ones, deepest first.
  for (std::size_t i = 0; i < n; ++i) out += format_frame(frames[frames.size() - 1 - i]);
  if (frames.size() > n) out += "    ... " + std::to_string(frames.size() - n) + " more\n";
}

const char* kTask =
    "Repair a bug whose fix spans several related code locations (siblings).\n"
    "(a) Analyze the buggy methods below. Statements marked with `// SIBLING` are\n"
    "    candidate sibling locations that may need the same or a related change.\n"
    "(b) Evaluate the previous patching attempts, if any.\n"
    "(c) Learn from the previous patching results: which tests changed and how far\n"
    "    execution progressed.\n"
    "(d) Generate consistent patches: apply coherent edits to every sibling that is\n"
    "    relevant to the failure, and leave unrelated siblings untouched.\n";

const char* kReasoning =
    "Step 1. Examine bug-related information and identify failure-relevant siblings.\n"
    "Step 2. Analyze previous patches and infer repair rationales.\n"
    "Step 3. Map fixing ingredients to the inferred repair rationales.\n"
    "Step 4. Design consistent repair strategies.\n"
    "Step 5. Define the required output format.\n"
    "\n"
    "Output format: for every method you change, emit a marker line followed by a\n"
    "fenced code block containing the complete new method, from its declaration\n"
    "header through its closing brace:\n"
    "\n"
    "=== PATCH file=<path as shown above> method=<method name> ===\n"
    "```<language>\n"
    "<complete replacement method>\n"
    "```\n"
    "\n"
    "Methods you do not emit stay unchanged. Do not use any other format for code.\n";

const char* kDefinitions =
    "Plausible patch: a patch that makes all tests pass.\n"
    "Promising patch: a patch that partially addresses the root cause. It shows\n"
    "progress in test outcomes (a previously failing test now passes) or in\n"
    "execution (a failing test now fails later within the same method, or reaches\n"
    "a different method along the same call path).\n";

struct RenderInput {
  std::vector<const MethodGroup*> groups;
  std::size_t ingredient_count = 0;
  bool feedback_frames = true;
};

std::string render_group(const MethodGroup& g, const SourceIndex& index, std::size_t* markers) {
  const SourceFile& file = index.require_file(g.file);
  std::string out;
  int first = 0;
  int last = 0;
  if (g.method) {
    out += "#### " + g.file + " :: method " + g.method->name;
    first = g.method->body.first;
    last = g.method->body.last;
  } else {
    out += "#### " + g.file + " :: top-level statements";
  }
  std::string code;
  auto emit = [&](int line) {
    std::string text(file.line_text(line));
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    if (g.sibling_lines.count(line)) {
      text += "  ";
      text += kSiblingMarker;
      ++*markers;
    }
    code += text + "\n";
  };
  if (g.method) {
    out += " (lines " + std::to_string(first) + "-" + std::to_string(last) + ")\n";
    for (int line = first; line <= last; ++line) emit(line);
  } else {
    out += "\n";
    for (int line : g.sibling_lines) emit(line);
  }
  const std::string fence = fence_for(code);
  out += fence + language_of(g.file) + "\n" + code + fence + "\n\n";
  return out;
}

std::string render_patch_diff(const Patch& patch, const SourceIndex& index) {
  try {
    std::string diff;
    for (const auto& [path, content] : patched_files(patch, index)) {
      diff += unified_diff(index.require_file(path).content, content, "a/" + path, "b/" + path);
    }
    return diff;
  } catch (const Error&) {
    return render_patch(patch);
  }
}

std::string render_feedback(const FeedbackEntry& fb, const SourceIndex& index, std::size_t n,
                            bool frames, std::size_t top_frames) {
  std::string out = "#### Attempt feedback " + std::to_string(n) + "\n";
  if (!fb.patch.empty()) {
    const std::string diff = render_patch_diff(fb.patch, index);
    const std::string fence = fence_for(diff);
    out += "Patch:\n" + fence + "diff\n" + diff + fence + "\n";
  } else {
    out += "Patch: (none could be extracted)\n";
  }
  if (!fb.note.empty()) out += "Problem: " + fb.note + "\n";
  if (!fb.results) {
    if (fb.note.empty()) out += "Outcome: plausible patch, all tests pass.\n";
    return out + "\n";
  }
  const auto& tests = fb.results->tests;
  const std::size_t failing = fb.results->non_passing();
  out += "Outcome: " + std::to_string(tests.size() - failing) + " of " +
         std::to_string(tests.size()) + " tests pass.\n";
  if (failing > 0) {
    out += "Failing tests after this patch:\n";
    for (const auto& t : tests) {
      if (t.passed()) continue;
      out += "- " + t.id + " [" + std::string(to_string(t.status)) + "]";
      if (!t.message.empty()) out += ": " + t.message;
      out += "\n";
      if (frames) append_frames(out, t.frames, top_frames);
    }
  }
  return out + "\n";
}

std::string render_ingredient(const FixIngredient& ing) {
  std::string out = ing.signature;
  out += "    // ";
  if (!ing.declaring_class.empty()) out += ing.declaring_class + ", ";
  out += ing.source_file + ":" + std::to_string(ing.line) + "\n";
  return out;
}

std::string render(const RenderInput& in, const BugEvidence& evidence,
                   std::span<const FeedbackEntry> feedback,
                   std::span<const FixIngredient> ingredients, const SourceIndex& index,
                   const PromptOptions& options, std::size_t* markers) {
  std::string out;
  auto open = [&](PromptSection s) { out += section_marker(s) + "\n"; };

  open(PromptSection::Role);
  out += std::string(kRoleLine) + "\n\n";
  open(PromptSection::Task);
  out += std::string(kTask) + "\n";
  open(PromptSection::ReasoningSteps);
  out += std::string(kReasoning) + "\n";
  open(PromptSection::PatchDefinitions);
  out += std::string(kDefinitions) + "\n";

  open(PromptSection::BuggyMethods);
  for (const auto* g : in.groups) out += render_group(*g, index, markers);

  open(PromptSection::TestResults);
  out += "Originally failing tests: " + std::to_string(evidence.originally_failing) + "\n";
  for (const auto& t : evidence.failing) {
    out += "- " + t.id;
    if (!t.message.empty()) out += ": " + t.message;
    out += "\n";
    append_frames(out, t.frames, options.top_frames);
  }
  out += "\n";

  open(PromptSection::Feedback);
  for (std::size_t i = 0; i < feedback.size(); ++i) {
    out += render_feedback(feedback[i], index, i + 1, in.feedback_frames, options.top_frames);
  }
  if (feedback.empty()) out += "(no previous attempts)\n\n";

  open(PromptSection::Ingredients);
  for (std::size_t i = 0; i < in.ingredient_count; ++i) out += render_ingredient(ingredients[i]);
  if (in.ingredient_count == 0) out += "(none)\n";
  return out;
}

}  // namespace

std::string_view section_name(PromptSection section) {
  switch (section) {
    case PromptSection::Role: return "ROLE";
    case PromptSection::Task: return "TASK";
    case PromptSection::ReasoningSteps: return "REASONING-STEPS";
    case PromptSection::PatchDefinitions: return "PATCH-DEFINITIONS";
    case PromptSection::BuggyMethods: return "BUGGY-METHODS";
    case PromptSection::TestResults: return "TEST-RESULTS";
    case PromptSection::Feedback: return "FEEDBACK";
    case PromptSection::Ingredients: return "INGREDIENTS";
  }
  return "";
}

std::string section_marker(PromptSection section) {
  return "### [" + std::string(section_name(section)) + "]";
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

BugEvidence evidence_from(const TestReport& baseline) {
  BugEvidence evidence;
  for (const auto& t : baseline.tests) {
    if (!t.passed()) evidence.failing.push_back({t.id, t.message, t.frames});
  }
  evidence.originally_failing = evidence.failing.size();
  if (evidence.failing.empty()) throw InputError("baseline run has no failing test");
  return evidence;
}

PromptBundle build_prompt(std::span<const MethodGroup> groups, const BugEvidence& evidence,
                          std::span<const FeedbackEntry> feedback,
                          std::span<const FixIngredient> ingredients, const SourceIndex& index,
                          const PromptOptions& options) {
  if (groups.empty()) throw InputError("prompt needs at least one method group");

  RenderInput in;
  for (const auto& g : groups) in.groups.push_back(&g);
  in.ingredient_count = ingredients.size();

  PromptBundle bundle;
  bundle.sections.assign(std::begin(kOrder), std::end(kOrder));
  bundle.text = render(in, evidence, feedback, ingredients, index, options, &bundle.sibling_markers);
  auto fits = [&] { return estimate_tokens(bundle.text) <= options.token_budget; };
  auto rerender = [&] {
    std::size_t ignored = 0;
    bundle.text = render(in, evidence, feedback, ingredients, index, options, &ignored);
  };

  if (!fits() && in.ingredient_count > 0) {
    const std::size_t before = in.ingredient_count;
    while (!fits() && in.ingredient_count > 0) {
      --in.ingredient_count;
      rerender();
    }
    bundle.truncations.push_back("dropped " + std::to_string(before - in.ingredient_count) +
                                 " of " + std::to_string(before) + " ingredients");
  }
  if (!fits() && !feedback.empty()) {
    in.feedback_frames = false;
    rerender();
    bundle.truncations.push_back("removed stack frames from feedback");
  }
  if (!fits() && in.groups.size() > 1) {
    // Drop order: lowest best_jaccard first; among equals, the later group.
    std::vector<std::size_t> order(in.groups.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (in.groups[a]->best_jaccard != in.groups[b]->best_jaccard) {
        return in.groups[a]->best_jaccard < in.groups[b]->best_jaccard;
      }
      return a > b;
    });
    std::vector<bool> keep(in.groups.size(), true);
    const auto all = in.groups;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i + 1 < order.size() && !fits(); ++i) {
      keep[order[i]] = false;
      ++dropped;
      in.groups.clear();
      for (std::size_t j = 0; j < all.size(); ++j) {
        if (keep[j]) in.groups.push_back(all[j]);
      }
      rerender();
    }
    bundle.truncations.push_back("dropped " + std::to_string(dropped) + " method groups");
  }
  if (!fits()) {
    throw PromptBudgetError("prompt needs " + std::to_string(estimate_tokens(bundle.text)) +
                            " tokens, budget is " + std::to_string(options.token_budget));
  }
  return bundle;
}

std::vector<std::pair<PromptSection, std::string>> split_sections(std::string_view prompt) {
  std::vector<std::size_t> starts;
  std::size_t from = 0;
  for (PromptSection s : kOrder) {
    const std::string marker = section_marker(s) + "\n";
    std::size_t pos = from;
    while (true) {
      pos = prompt.find(marker, pos);
      if (pos == std::string_view::npos) {
        throw InputError("prompt section " + std::string(section_name(s)) + " not found");
      }
      if (pos == 0 || prompt[pos - 1] == '\n') break;
      ++pos;
    }
    starts.push_back(pos);
    from = pos + marker.size();
  }
  std::vector<std::pair<PromptSection, std::string>> out;
  for (std::size_t i = 0; i < kPromptSectionCount; ++i) {
    const std::size_t body = starts[i] + section_marker(kOrder[i]).size() + 1;
    const std::size_t end = i + 1 < kPromptSectionCount ? starts[i + 1] : prompt.size();
    out.emplace_back(kOrder[i], std::string(prompt.substr(body, end - body)));
  }
  return out;
}

}  // namespace sibfix
