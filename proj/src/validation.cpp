#include "sibfix/validation.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sibfix/lexer.hpp"

namespace sibfix {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(TestStatus status) {
  switch (status) {
    case TestStatus::Pass: return "pass";
    case TestStatus::Fail: return "fail";
    case TestStatus::Error: return "error";
    case TestStatus::Timeout: return "timeout";
  }
  return "error";
}

std::string_view to_string(TraceAlignment alignment) {
  switch (alignment) {
    case TraceAlignment::Identical: return "identical";
    case TraceAlignment::Progressed: return "progressed";
    case TraceAlignment::Other: return "other";
  }
  return "other";
}

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::PassAll: return "PassAll";
    case VerdictKind::Promising: return "Promising";
    case VerdictKind::NoProgress: return "NoProgress";
  }
  return "NoProgress";
}

const TestResult* TestReport::find(std::string_view id) const {
  for (const auto& t : tests) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::size_t TestReport::non_passing() const {
  return static_cast<std::size_t>(
      std::count_if(tests.begin(), tests.end(), [](const auto& t) { return !t.passed(); }));
}

TestReport parse_results(std::string_view text) {
  TestReport report;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "results line " + std::to_string(line_no) + ": ";
    try {
      const json j = json::parse(line);
      TestResult r;
      r.id = j.at("test").get<std::string>();
      const auto status = j.at("status").get<std::string>();
      if (status == "pass") r.status = TestStatus::Pass;
      else if (status == "fail") r.status = TestStatus::Fail;
      else if (status == "error") r.status = TestStatus::Error;
      else if (status == "timeout") r.status = TestStatus::Timeout;
      else throw HarnessProtocolError(where + "unknown status " + status);
      if (j.contains("message") && !j["message"].is_null()) r.message = j["message"].get<std::string>();
      if (j.contains("frames")) {
        for (const auto& f : j["frames"]) {
          StackFrame frame;
          frame.unit = f.value("unit", "");
          frame.method = f.value("method", "");
          frame.file = f.value("file", "");
          frame.line = f.value("line", 0);
          if (frame.line < 0) throw HarnessProtocolError(where + "negative line number");
          r.frames.push_back(std::move(frame));
        }
      }
      if (!seen.insert(r.id).second) throw HarnessProtocolError(where + "duplicate test " + r.id);
      report.tests.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw HarnessProtocolError(where + e.what());
    }
  }
  return report;
}

TestReport run_tests(const fs::path& workspace, const HarnessConfig& harness) {
  const fs::path results = workspace.parent_path() / (workspace.filename().string() + ".results.jsonl");
  std::error_code ec;
  fs::remove(results, ec);

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    if (chdir(workspace.c_str()) != 0) _exit(127);
    setenv("RESULTS_PATH", results.c_str(), 1);
    const char* log = harness.log_path.empty() ? "/dev/null" : harness.log_path.c_str();
    const int fd = open(log, O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd >= 0) {
      dup2(fd, STDOUT_FILENO);
      dup2(fd, STDERR_FILENO);
      close(fd);
    }
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    execl("/bin/sh", "sh", "-c", harness.command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);

  TestReport report;
  int status = 0;
  const auto deadline = start + harness.timeout;
  while (true) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      report.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;

  std::ifstream in(results, std::ios::binary);
  const bool have_results = static_cast<bool>(in);
  if (have_results) {
    std::ostringstream buf;
    buf << in.rdbuf();
    auto parsed = parse_results(buf.str());
    report.tests = std::move(parsed.tests);
  }
  const TestStatus missing_status = report.timed_out ? TestStatus::Timeout : TestStatus::Error;
  const std::string missing_message =
      report.timed_out ? "harness timed out"
                       : (have_results ? "test missing from results"
                                       : "harness produced no results (exit " +
                                             std::to_string(report.exit_status) + ")");
  for (const auto& id : harness.expected_tests) {
    if (!report.find(id)) report.tests.push_back({id, missing_status, missing_message, {}});
  }
  if (report.tests.empty() && (report.timed_out || !have_results)) {
    report.tests.push_back({"<harness>", missing_status, missing_message, {}});
  }
  return report;
}

namespace {

std::vector<std::string> parameter_tokens(std::string_view text, std::string_view name) {
  const std::string masked = mask_source(text);
  const auto tokens = lex(masked);
  for (std::size_t j = 0; j + 1 < tokens.size(); ++j) {
    if (tokens[j].text != name || tokens[j + 1].text != "(") continue;
    std::vector<std::string> out;
    int depth = 0;
    for (std::size_t k = j + 1; k < tokens.size(); ++k) {
      if (tokens[k].text == "(") ++depth;
      if (tokens[k].text == ")" && --depth == 0) break;
      out.emplace_back(tokens[k].text);
    }
    return out;
  }
  return {};
}

const MethodRef& resolve_edit(const SourceIndex& index, const MethodEdit& edit) {
  const auto* file = index.file(edit.file);
  if (!file) throw ApplyError("patch edits a file that is not indexed: " + edit.file);
  const auto candidates = index.methods_named(edit.file, edit.method);
  if (candidates.empty()) {
    throw ApplyError("method " + edit.method + " not found in " + edit.file);
  }
  if (candidates.size() > 1) {
    const auto wanted = parameter_tokens(edit.replacement, edit.method);
    for (const auto* m : candidates) {
      const auto text = std::string_view(file->content).substr(m->begin, m->end - m->begin);
      if (parameter_tokens(text, edit.method) == wanted) return *m;
    }
  }
  return *candidates.front();
}

std::string trimmed(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void copy_tree(const fs::path& from, const fs::path& to, const std::vector<fs::path>& exclude) {
  fs::create_directories(to);
  for (const auto& entry : fs::directory_iterator(from)) {
    const fs::path abs = fs::absolute(entry.path()).lexically_normal();
    if (std::any_of(exclude.begin(), exclude.end(),
                    [&](const fs::path& x) { return fs::absolute(x).lexically_normal() == abs; })) {
      continue;
    }
    const fs::path target = to / entry.path().filename();
    if (entry.is_directory() && !entry.is_symlink()) {
      copy_tree(entry.path(), target, exclude);
    } else {
      fs::copy(entry.path(), target,
               fs::copy_options::copy_symlinks | fs::copy_options::overwrite_existing);
    }
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> patched_files(const Patch& patch,
                                                               const SourceIndex& index) {
  std::map<std::string, std::vector<std::pair<const MethodRef*, std::string>>> per_file;
  for (const auto& edit : patch.edits) {
    const MethodRef& m = resolve_edit(index, edit);
    per_file[edit.file].emplace_back(&m, trimmed(edit.replacement));
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& [path, edits] : per_file) {
    std::sort(edits.begin(), edits.end(),
              [](const auto& a, const auto& b) { return a.first->begin > b.first->begin; });
    std::string content = index.require_file(path).content;
    std::size_t floor = std::string::npos;  // start of the previously applied (later) edit
    for (const auto& [m, text] : edits) {
      if (m->end > floor) {
        throw ApplyError("overlapping method edits in " + path + " (" + m->name + ")");
      }
      content.replace(m->begin, m->end - m->begin, text);
      floor = m->begin;
    }
    out.emplace_back(path, std::move(content));
  }
  return out;
}

fs::path apply_patch(const fs::path& root, const Patch& patch, const SourceIndex& index,
                     const fs::path& workspace, const std::vector<fs::path>& exclude) {
  const auto files = patched_files(patch, index);
  for (const auto& edit : patch.edits) {
    std::ifstream in(root / edit.file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in || buf.str() != index.require_file(edit.file).content) {
      throw ApplyError(edit.file + " changed since indexing");
    }
  }
  if (fs::exists(workspace)) throw ApplyError("workspace already exists: " + workspace.string());
  auto excluded = exclude;
  excluded.push_back(workspace);
  copy_tree(root, workspace, excluded);
  for (const auto& [path, content] : files) {
    std::ofstream out(workspace / path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw ApplyError("cannot write " + (workspace / path).string());
  }
  return workspace;
}

namespace {

bool frame_equal(const StackFrame& a, const StackFrame& b) {
  const bool line_eq = a.line == b.line || a.line == 0 || b.line == 0;
  return a.unit == b.unit && a.method == b.method && a.file == b.file && line_eq;
}

}  // namespace

TraceComparison compare_traces(const std::vector<StackFrame>& before,
                               const std::vector<StackFrame>& after) {
  if (before.empty()) return {TraceAlignment::Other, 0};
  std::size_t d = 0;
  while (d < before.size() && d < after.size() && frame_equal(before[d], after[d])) ++d;
  if (d == before.size() && d == after.size()) return {TraceAlignment::Identical, d};
  if (d == before.size() || d == after.size()) return {TraceAlignment::Other, d};
  const auto& b = before[d];
  const auto& a = after[d];
  if (a.unit == b.unit && a.method == b.method && a.file == b.file) {
    return {a.line > b.line ? TraceAlignment::Progressed : TraceAlignment::Other, d};
  }
  if ((a.unit != b.unit || a.method != b.method) && d >= 1) {
    return {TraceAlignment::Progressed, d};
  }
  return {TraceAlignment::Other, d};
}

TraceAlignment align_traces(const std::vector<StackFrame>& before,
                            const std::vector<StackFrame>& after) {
  return compare_traces(before, after).alignment;
}

PatchVerdict classify(const TestReport& baseline, const TestReport& patched) {
  PatchVerdict verdict;
  for (const auto& t : baseline.tests) {
    const auto* now = patched.find(t.id);
    if (!t.passed() && now && now->passed()) verdict.newly_passing.push_back(t.id);
    if (t.passed() && (!now || !now->passed())) verdict.regressions.push_back(t.id);
  }
  if (patched.non_passing() == 0) {
    verdict.kind = VerdictKind::PassAll;
    return verdict;
  }
  if (!verdict.newly_passing.empty()) {
    verdict.kind = VerdictKind::Promising;
    return verdict;
  }
  for (const auto& t : baseline.tests) {
    if (t.passed()) continue;
    const auto* now = patched.find(t.id);
    if (!now || now->passed()) continue;
    const auto cmp = compare_traces(t.frames, now->frames);
    if (cmp.alignment == TraceAlignment::Progressed) {
      TraceEvidence ev{t.id, cmp.divergence, std::nullopt, std::nullopt};
      if (cmp.divergence < t.frames.size()) ev.before = t.frames[cmp.divergence];
      if (cmp.divergence < now->frames.size()) ev.after = now->frames[cmp.divergence];
      verdict.trace_progress = std::move(ev);
      verdict.kind = VerdictKind::Promising;
      return verdict;
    }
  }
  verdict.kind = VerdictKind::NoProgress;
  return verdict;
}

}  // namespace sibfix
