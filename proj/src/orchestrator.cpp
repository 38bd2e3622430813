#include "sibfix/orchestrator.hpp"

#include <ctime>
#include <fstream>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>

#include "sibfix/unified_diff.hpp"

namespace sibfix {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(LocalizationMode mode) {
  switch (mode) {
    case LocalizationMode::Sbfl: return "sbfl";
    case LocalizationMode::Spfl: return "spfl";
    case LocalizationMode::Pfl: return "pfl";
  }
  return "";
}

LocalizationMode parse_mode(std::string_view text) {
  if (text == "sbfl") return LocalizationMode::Sbfl;
  if (text == "spfl") return LocalizationMode::Spfl;
  if (text == "pfl") return LocalizationMode::Pfl;
  throw InputError("unknown mode '" + std::string(text) + "' (expected sbfl, spfl or pfl)");
}

std::chrono::milliseconds parse_duration(std::string_view text) {
  static const std::regex whole(R"(^(\d+(?:\.\d+)?(?:ms|s|m|h)?)+$)");
  static const std::regex part(R"((\d+(?:\.\d+)?)(ms|s|m|h)?)");
  const std::string s(text);
  if (s.empty() || !std::regex_match(s, whole)) {
    throw InputError("invalid duration '" + s + "'");
  }
  double ms = 0;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), part); it != std::sregex_iterator();
       ++it) {
    const double value = std::stod((*it)[1].str());
    const std::string unit = (*it)[2].str();
    if (unit == "ms") ms += value;
    else if (unit == "m") ms += value * 60'000;
    else if (unit == "h") ms += value * 3'600'000;
    else ms += value * 1000;
  }
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

namespace {

void check_keys(const json& object, const std::string& where, const std::set<std::string>& allowed) {
  if (!object.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) throw InputError("unknown key '" + key + "' in " + where);
  }
}

Location location_from(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("file") || !j.contains("line")) {
    throw InputError(where + " needs \"file\" and \"line\"");
  }
  return {j.at("file").get<std::string>(), j.at("line").get<int>()};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

}  // namespace

ProjectDescriptor load_descriptor(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read descriptor " + path.string());
  ProjectDescriptor d;
  d.source = fs::absolute(path);
  const fs::path base = d.source.parent_path();
  try {
    const json j = json::parse(in);
    check_keys(j, "descriptor",
               {"project_root", "include", "coverage", "harness", "backend", "provider", "repair",
                "mode", "cache", "out"});
    if (!j.contains("project_root")) throw InputError("descriptor needs \"project_root\"");
    if (!j.contains("coverage")) throw InputError("descriptor needs \"coverage\"");
    if (!j.contains("harness")) throw InputError("descriptor needs \"harness\"");

    d.root = resolve(base, j.at("project_root").get<std::string>());
    if (!fs::is_directory(d.root)) throw InputError("project root not found: " + d.root.string());
    if (j.contains("include")) d.include = j.at("include").get<std::vector<std::string>>();
    d.coverage = resolve(base, j.at("coverage").get<std::string>());
    if (!fs::is_regular_file(d.coverage)) {
      throw InputError("coverage file not found: " + d.coverage.string());
    }

    const auto& h = j.at("harness");
    check_keys(h, "harness", {"command", "timeout_s"});
    d.harness_command = h.at("command").get<std::string>();
    const std::string placeholder = "{descriptor_dir}";
    for (auto pos = d.harness_command.find(placeholder); pos != std::string::npos;
         pos = d.harness_command.find(placeholder, pos)) {
      d.harness_command.replace(pos, placeholder.size(), base.string());
    }
    if (h.contains("timeout_s")) {
      d.harness_timeout =
          std::chrono::milliseconds(static_cast<long long>(h.at("timeout_s").get<double>() * 1000));
    }

    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      check_keys(b, "backend",
                 {"kind", "dir", "missing", "url", "model", "api_key_env", "max_retries"});
      d.backend.kind = b.value("kind", "scripted");
      if (d.backend.kind == "scripted") {
        if (!b.contains("dir")) throw InputError("scripted backend needs \"dir\"");
        d.backend.directory = resolve(base, b.at("dir").get<std::string>());
        if (!fs::is_directory(d.backend.directory)) {
          throw InputError("scripted response directory not found: " +
                           d.backend.directory.string());
        }
        const auto missing = b.value("missing", "empty");
        if (missing == "error") d.backend.missing = MissingResponse::Error;
        else if (missing != "empty") throw InputError("backend.missing must be empty or error");
      } else if (d.backend.kind == "remote") {
        d.backend.remote.url = b.at("url").get<std::string>();
        d.backend.remote.model = b.at("model").get<std::string>();
        d.backend.remote.api_key_env = b.value("api_key_env", "LLM_API_KEY");
        d.backend.remote.retry.max_retries = b.value("max_retries", 3);
      } else {
        throw InputError("backend.kind must be scripted or remote");
      }
    } else {
      throw InputError("descriptor needs \"backend\"");
    }

    if (j.contains("provider")) {
      const auto& p = j.at("provider");
      check_keys(p, "provider",
                 {"kind", "dimension", "url", "model", "api_key_env", "max_batch", "concurrency"});
      d.provider.kind = p.value("kind", "local-hash");
      d.provider.dimension = p.value("dimension", std::size_t{512});
      d.provider.concurrency = p.value("concurrency", std::size_t{1});
      if (d.provider.kind == "remote") {
        d.provider.remote.url = p.at("url").get<std::string>();
        d.provider.remote.model = p.at("model").get<std::string>();
        d.provider.remote.api_key_env = p.value("api_key_env", "EMBED_API_KEY");
        d.provider.remote.max_batch = p.value("max_batch", std::size_t{64});
      } else if (d.provider.kind != "local-hash") {
        throw InputError("provider.kind must be local-hash or remote");
      }
      if (d.provider.dimension == 0) throw InputError("provider.dimension must be positive");
    }

    if (j.contains("repair")) {
      const auto& r = j.at("repair");
      check_keys(r, "repair",
                 {"k", "theta", "alpha", "attempts", "ingredients", "budget", "suspicious_cap",
                  "prompt_token_budget", "temperature", "max_tokens", "seed"});
      auto& c = d.repair;
      c.k = r.value("k", c.k);
      c.theta = r.value("theta", c.theta);
      c.alpha = r.value("alpha", c.alpha);
      c.attempts = r.value("attempts", c.attempts);
      c.ingredients = r.value("ingredients", c.ingredients);
      if (r.contains("budget")) {
        c.budget = r.at("budget").is_number()
                       ? std::chrono::milliseconds(
                             static_cast<long long>(r.at("budget").get<double>() * 1000))
                       : parse_duration(r.at("budget").get<std::string>());
      }
      c.suspicious_cap = r.value("suspicious_cap", c.suspicious_cap);
      c.prompt_token_budget = r.value("prompt_token_budget", c.prompt_token_budget);
      c.temperature = r.value("temperature", c.temperature);
      c.max_output_tokens = r.value("max_tokens", c.max_output_tokens);
      c.seed = r.value("seed", c.seed);
      c.validate();
    }

    if (j.contains("mode")) {
      const auto& m = j.at("mode");
      check_keys(m, "mode", {"kind", "location", "locations"});
      d.mode = parse_mode(m.value("kind", "sbfl"));
      if (m.contains("location")) d.spfl_location = location_from(m.at("location"), "mode.location");
      if (m.contains("locations")) {
        for (const auto& l : m.at("locations")) {
          d.pfl_locations.push_back(location_from(l, "mode.locations entry"));
        }
      }
    }
    if (j.contains("cache")) d.cache = resolve(base, j.at("cache").get<std::string>());
    if (j.contains("out")) d.out = resolve(base, j.at("out").get<std::string>());
  } catch (const json::exception& e) {
    throw InputError("descriptor " + path.string() + ": " + e.what());
  }
  return d;
}

std::vector<SuspiciousLocation> localize(const ProjectDescriptor& d,
                                         const CoverageMatrix& coverage) {
  switch (d.mode) {
    case LocalizationMode::Sbfl:
      return ochiai_rank(coverage);
    case LocalizationMode::Spfl:
      if (!d.spfl_location) throw InputError("spfl mode needs mode.location");
      return apply_spfl(ochiai_rank(coverage), *d.spfl_location);
    case LocalizationMode::Pfl: {
      if (d.pfl_locations.empty()) throw InputError("pfl mode needs mode.locations");
      std::vector<SuspiciousLocation> out;
      for (const auto& l : d.pfl_locations) {
        out.push_back({l, 1.0, static_cast<int>(out.size()) + 1});
      }
      return out;
    }
  }
  return {};
}

namespace {

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error("cannot write " + path.string());
}

fs::path make_run_dir(const fs::path& out_dir) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream name;
  name << "run-" << std::put_time(&tm, "%Y%m%d-%H%M%S");
  fs::path dir = out_dir / name.str();
  for (int i = 2; fs::exists(dir); ++i) dir = out_dir / (name.str() + "-" + std::to_string(i));
  fs::create_directories(dir / "prompts");
  fs::create_directories(dir / "responses");
  fs::create_directories(dir / "patches");
  return dir;
}

std::string patch_diff(const Patch& patch, const SourceIndex& index) {
  std::string diff;
  for (const auto& [path, content] : patched_files(patch, index)) {
    diff += unified_diff(index.require_file(path).content, content, "a/" + path, "b/" + path);
  }
  return diff;
}

json frame_json(const StackFrame& f) {
  return {{"unit", f.unit}, {"method", f.method}, {"file", f.file}, {"line", f.line}};
}

json report_json(const TestReport& r) {
  json tests = json::array();
  for (const auto& t : r.tests) {
    tests.push_back({{"test", t.id}, {"status", to_string(t.status)}, {"message", t.message}});
  }
  return {{"tests", tests}, {"exit_status", r.exit_status}, {"timed_out", r.timed_out}};
}

json patch_json(const ValidatedPatch& p, const SourceIndex& index, const std::string& diff_file) {
  json j = {{"id", p.patch.id()},
            {"provenance", p.patch.provenance == PatchProvenance::Combined ? "combined" : "generated"},
            {"parent", p.patch.parent ? json(*p.patch.parent) : json(nullptr)},
            {"verdict", to_string(p.verdict.kind)},
            {"newly_passing", p.verdict.newly_passing},
            {"regressions", p.verdict.regressions},
            {"diff_file", diff_file},
            {"diff", patch_diff(p.patch, index)}};
  json methods = json::array();
  for (const auto& e : p.patch.edits) methods.push_back({{"file", e.file}, {"method", e.method}});
  j["methods"] = methods;
  if (p.verdict.trace_progress) {
    const auto& ev = *p.verdict.trace_progress;
    j["trace_progress"] = {{"test", ev.test},
                           {"divergence_index", ev.divergence_index},
                           {"before", ev.before ? frame_json(*ev.before) : json(nullptr)},
                           {"after", ev.after ? frame_json(*ev.after) : json(nullptr)}};
  }
  return j;
}

json config_json(const ProjectDescriptor& d) {
  const auto& c = d.repair;
  return {{"project_root", d.root.string()},
          {"include", d.include},
          {"coverage", d.coverage.string()},
          {"harness", {{"command", d.harness_command},
                       {"timeout_s", d.harness_timeout.count() / 1000.0}}},
          {"backend", d.backend.kind == "remote"
                          ? json{{"kind", "remote"}, {"url", d.backend.remote.url},
                                 {"model", d.backend.remote.model}}
                          : json{{"kind", "scripted"}, {"dir", d.backend.directory.string()}}},
          {"provider", d.provider.kind == "remote"
                           ? json{{"kind", "remote"}, {"url", d.provider.remote.url},
                                  {"model", d.provider.remote.model}}
                           : json{{"kind", "local-hash"}, {"dimension", d.provider.dimension}}},
          {"mode", to_string(d.mode)},
          {"k", c.k},
          {"theta", c.theta},
          {"alpha", c.alpha},
          {"attempts", c.attempts},
          {"ingredients", c.ingredients},
          {"budget_s", c.budget.count() / 1000.0},
          {"suspicious_cap", c.suspicious_cap},
          {"prompt_token_budget", c.prompt_token_budget},
          {"stop_on_first_plausible", c.stop_on_first_plausible},
          {"temperature", c.temperature},
          {"max_tokens", c.max_output_tokens},
          {"seed", c.seed}};
}

}  // namespace

RunResult run(const fs::path& descriptor_path, const RunOverrides& overrides, std::ostream& log) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  RunResult result;

  ProjectDescriptor d;
  CoverageMatrix coverage;
  std::vector<SuspiciousLocation> suspicious;
  std::unique_ptr<Backend> backend;
  std::unique_ptr<EmbeddingProvider> provider;
  std::optional<SourceIndex> index;
  try {
    d = load_descriptor(descriptor_path);
    if (overrides.mode) d.mode = *overrides.mode;
    if (overrides.theta) d.repair.theta = *overrides.theta;
    if (overrides.alpha) d.repair.alpha = *overrides.alpha;
    if (overrides.attempts) d.repair.attempts = *overrides.attempts;
    if (overrides.ingredients) d.repair.ingredients = *overrides.ingredients;
    if (overrides.budget) d.repair.budget = *overrides.budget;
    if (overrides.out) d.out = fs::absolute(*overrides.out);
    d.repair.stop_on_first_plausible |= overrides.stop_on_first_plausible;
    d.repair.keep_workspaces |= overrides.keep_workspaces;
    d.repair.validate();

    coverage = load_coverage(d.coverage);
    suspicious = localize(d, coverage);
    index.emplace(index_source(d.root, d.include));
    for (const auto& w : index->warnings()) log << "warning: " << w << "\n";

    if (overrides.backend) {
      // Caller-supplied; leave `backend` empty so it is not deleted.
    } else if (d.backend.kind == "remote") {
      backend = std::make_unique<RemoteBackend>(d.backend.remote);
    } else {
      backend = std::make_unique<ScriptedBackend>(d.backend.directory, d.backend.missing);
    }
    if (d.provider.kind == "remote") {
      provider = std::make_unique<RemoteEmbeddingProvider>(d.provider.remote);
    } else {
      provider = std::make_unique<LocalHashProvider>(d.provider.dimension);
    }
  } catch (const InputError& e) {
    log << "error: " << e.what() << "\n";
    result.exit_code = kExitInvalidInput;
    return result;
  }

  const fs::path out_dir = d.out.value_or(d.source.parent_path() / "runs");
  result.run_dir = make_run_dir(out_dir);
  const fs::path run_dir = result.run_dir;
  log << "run directory: " << run_dir.string() << "\n";

  EmbeddingCache cache(d.cache.value_or(out_dir / "embedding-cache"));
  EmbedStats embed_stats;

  RepairInputs inputs;
  inputs.index = &*index;
  inputs.project_root = d.root;
  inputs.coverage = &coverage;
  inputs.suspicious = suspicious;
  inputs.harness.command = d.harness_command;
  inputs.harness.timeout = d.harness_timeout;
  inputs.harness.log_path = run_dir / "harness.log";
  inputs.backend = overrides.backend ? overrides.backend : backend.get();
  inputs.provider = provider.get();
  inputs.cache = &cache;
  inputs.embed_stats = &embed_stats;
  inputs.embed_concurrency = d.provider.concurrency;
  inputs.work_dir = run_dir / "workspaces";
  inputs.exclude = {fs::absolute(out_dir).lexically_normal()};
  inputs.observer = [&](const AttemptRecord& rec, const std::string& prompt,
                        const std::string& response) {
    const std::string name = ScriptedBackend::file_name(rec.location_id, rec.attempt);
    if (!prompt.empty()) write_file(run_dir / "prompts" / name, prompt);
    if (!prompt.empty()) write_file(run_dir / "responses" / name, response);
    log << rec.location_id << " attempt " << rec.attempt << " [" << to_string(rec.phase) << "] "
        << (rec.verdict ? std::string(to_string(*rec.verdict)) : std::string("failed"));
    if (!rec.note.empty()) log << ": " << rec.note;
    log << "\n";
  };

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["descriptor"] = d.source.string();
  report["config"] = config_json(d);
  if (overrides.backend) report["config"]["backend"] = {{"kind", overrides.backend->name()}};
  json susp = json::array();
  for (std::size_t i = 0; i < suspicious.size() && i < d.repair.suspicious_cap; ++i) {
    const auto& s = suspicious[i];
    susp.push_back({{"file", s.location.file}, {"line", s.location.line}, {"score", s.score},
                    {"rank", s.rank}});
  }
  report["suspicious"] = susp;

  RepairState state;
  int exit_code = kExitNotRepaired;
  const auto engine_started = clock::now();
  try {
    RepairEngine engine(d.repair, inputs);
    engine.establish_baseline();
    report["baseline"] = report_json(engine.state().baseline);
    state = engine.run();
  } catch (const InputError& e) {
    log << "error: " << e.what() << "\n";
    report["status"] = "invalid-input";
    report["error"] = e.what();
    write_file(run_dir / "report.json", report.dump(2) + "\n");
    result.exit_code = kExitInvalidInput;
    result.report = report;
    return result;
  } catch (const BackendError& e) {
    state.stop = StopReason::BackendFailure;
    state.error = e.what();
  }
  const auto engine_finished = clock::now();

  if (state.stop == StopReason::BackendFailure) {
    log << "error: " << state.error << "\n";
    exit_code = kExitBackendFailure;
  } else if (!state.plausible.empty()) {
    exit_code = kExitRepaired;
  }

  report["status"] = to_string(state.stop);
  report["error"] = state.error.empty() ? json(nullptr) : json(state.error);
  json locations = json::array();
  for (const auto& l : state.locations) {
    locations.push_back({{"id", l.id},
                         {"file", l.location.file},
                         {"line", l.location.line},
                         {"score", l.score},
                         {"token_candidates", l.token_candidates},
                         {"embedding_candidates", l.embedding_candidates},
                         {"jaccard_candidates", l.jaccard_candidates},
                         {"method_groups", l.method_groups},
                         {"status", l.status}});
  }
  report["locations"] = locations;
  json attempts = json::array();
  for (const auto& a : state.attempts) {
    attempts.push_back({{"location", a.location_id},
                        {"phase", to_string(a.phase)},
                        {"attempt", a.attempt},
                        {"group", a.group},
                        {"verdict", a.verdict ? json(to_string(*a.verdict)) : json(nullptr)},
                        {"patch_id", a.patch_id},
                        {"parent_id", a.parent_id ? json(*a.parent_id) : json(nullptr)},
                        {"regressions", a.regressions},
                        {"note", a.note}});
  }
  report["attempts"] = attempts;

  json plausible = json::array();
  for (std::size_t i = 0; i < state.plausible.size(); ++i) {
    const std::string file = "patches/plausible-" + std::to_string(i + 1) + ".diff";
    auto j = patch_json(state.plausible[i], *index, file);
    write_file(run_dir / file, j["diff"].get<std::string>());
    plausible.push_back(std::move(j));
  }
  report["plausible"] = plausible;
  json promising = json::array();
  for (std::size_t i = 0; i < state.promising.size(); ++i) {
    const std::string file = "patches/promising-" + std::to_string(i + 1) + ".diff";
    auto j = patch_json(state.promising[i], *index, file);
    write_file(run_dir / file, j["diff"].get<std::string>());
    promising.push_back(std::move(j));
  }
  report["promising"] = promising;
  json history = json::array();
  for (const auto& h : state.promising_history) {
    history.push_back({{"location", h.location_id}, {"group", h.group}, {"patches", h.patch_ids}});
  }
  report["promising_history"] = history;

  json counts = {{"attempts", state.attempts.size()},
                 {"estimated_prompt_tokens", state.prompt_tokens},
                 {"embedding_provider_calls", embed_stats.provider_calls},
                 {"embedding_cache_hits", embed_stats.cache_hits},
                 {"texts_embedded", embed_stats.texts_embedded}};
  if (auto* remote = dynamic_cast<RemoteBackend*>(inputs.backend)) {
    counts["llm_requests"] = remote->requests_issued();
  }
  report["counts"] = counts;
  auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  report["timings"] = {{"setup_seconds", secs(started, engine_started)},
                       {"repair_seconds", secs(engine_started, engine_finished)},
                       {"total_seconds", secs(started, clock::now())},
                       {"baseline_seconds", state.baseline.wall_seconds}};
  report["exit_code"] = exit_code;
  write_file(run_dir / "report.json", report.dump(2) + "\n");

  log << "status: " << to_string(state.stop) << ", " << state.plausible.size()
      << " plausible patch(es)\n";
  result.exit_code = exit_code;
  result.report = std::move(report);
  return result;
}

}  // namespace sibfix
