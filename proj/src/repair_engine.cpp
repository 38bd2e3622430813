#include "sibfix/repair_engine.hpp"

#include <algorithm>
#include <map>

namespace sibfix {

namespace fs = std::filesystem;

namespace {

struct BudgetExhausted {};

std::string group_label(const MethodGroup& g) {
  if (!g.method) return g.file + "::<top-level>";
  return g.file + "::" + g.method->name + ":" + std::to_string(g.method->signature_line);
}

void add_unique(std::vector<ValidatedPatch>& set, ValidatedPatch p) {
  const auto id = p.patch.id();
  for (const auto& existing : set) {
    if (existing.patch.id() == id) return;
  }
  set.push_back(std::move(p));
}

}  // namespace

void RepairConfig::validate() const {
  if (k < 1) throw InputError("k must be at least 1");
  if (attempts < 1) throw InputError("attempts must be at least 1");
  if (ingredients < 1) throw InputError("ingredients must be at least 1");
  if (budget.count() <= 0) throw InputError("budget must be positive");
  if (suspicious_cap < 1) throw InputError("suspicious cap must be at least 1");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Simultaneous: return "simultaneous";
    case Phase::SimultaneousCombined: return "simultaneous-combined";
    case Phase::Iterative: return "iterative";
    case Phase::IterativeCombined: return "iterative-combined";
  }
  return "";
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Plausible: return "plausible";
    case StopReason::Exhausted: return "exhausted";
    case StopReason::Budget: return "budget";
    case StopReason::BackendFailure: return "backend-failure";
  }
  return "";
}

RepairEngine::RepairEngine(RepairConfig config, RepairInputs inputs)
    : config_(std::move(config)), in_(std::move(inputs)) {
  config_.validate();
  if (!in_.index || !in_.backend || !in_.provider) {
    throw InputError("repair engine needs an index, a backend and an embedding provider");
  }
  deadline_ = std::chrono::steady_clock::now() + config_.budget;
}

void RepairEngine::check_budget() const {
  if (std::chrono::steady_clock::now() >= deadline_) throw BudgetExhausted{};
}

void RepairEngine::establish_baseline() {
  fs::create_directories(in_.work_dir);
  const fs::path ws = in_.work_dir / "baseline";
  fs::remove_all(ws);
  apply_patch(in_.project_root, Patch{}, *in_.index, ws, in_.exclude);
  HarnessConfig harness = in_.harness;
  harness.expected_tests.clear();
  state_.baseline = run_tests(ws, harness);
  if (!config_.keep_workspaces) {
    fs::remove_all(ws);
    fs::remove(fs::path(ws.string() + ".results.jsonl"));
  }
  if (state_.baseline.tests.size() == 1 && state_.baseline.tests[0].id == "<harness>") {
    throw InputError("test harness produced no results on the unmodified project: " +
                     state_.baseline.tests[0].message);
  }
  evidence_ = evidence_from(state_.baseline);
  in_.harness.expected_tests.clear();
  for (const auto& t : state_.baseline.tests) in_.harness.expected_tests.push_back(t.id);
}

const std::vector<StatementContext>& RepairEngine::context_pool() {
  if (pool_) return *pool_;
  std::map<std::pair<std::string, std::size_t>, const Statement*> covered;
  if (in_.coverage) {
    for (const auto& [test, locations] : in_.coverage->covered) {
      for (const auto& loc : locations) {
        if (!in_.index->file(loc.file)) continue;
        if (const auto* s = in_.index->statement_at(loc.file, loc.line)) {
          covered.emplace(std::make_pair(s->file, s->begin), s);
        }
      }
    }
  }
  pool_.emplace();
  for (const auto& [key, s] : covered) pool_->push_back(extract_context(*in_.index, *s));
  return *pool_;
}

std::vector<CandidateSibling> RepairEngine::detect(const StatementContext& target,
                                                   LocationRecord* record) {
  auto matched = token_match(target, context_pool(), config_.k);
  if (record) record->token_candidates = matched.size();
  matched = embedding_match(target, std::move(matched), config_.theta, *in_.provider, in_.cache,
                            in_.embed_stats, in_.embed_concurrency);
  if (record) record->embedding_candidates = matched.size();
  // The suspicious statement is always its own first candidate.
  std::vector<CandidateSibling> out;
  out.push_back({target, 1.0, 1.0, std::nullopt});
  for (auto& c : matched) out.push_back(std::move(c));
  return out;
}

RepairEngine::Outcome RepairEngine::attempt(const std::string& location_id, Phase phase,
                                            const std::string& group,
                                            std::span<const MethodGroup> groups,
                                            std::span<const FixIngredient> ingredients,
                                            const std::vector<FeedbackEntry>& feedback,
                                            const ValidatedPatch* partner) {
  check_budget();
  AttemptRecord rec;
  rec.location_id = location_id;
  rec.phase = phase;
  rec.attempt = ++attempt_counter_[location_id];
  rec.group = group;

  Outcome out;
  std::string prompt;
  std::string response;
  auto finish = [&] {
    rec.note = out.note;
    if (out.verdict) {
      rec.verdict = out.verdict->kind;
      rec.regressions = out.verdict->regressions;
    }
    state_.attempts.push_back(rec);
    if (in_.observer) in_.observer(rec, prompt, response);
    return out;
  };

  try {
    PromptOptions options;
    options.token_budget = config_.prompt_token_budget;
    prompt = build_prompt(groups, *evidence_, feedback, ingredients, *in_.index, options).text;
    state_.prompt_tokens += estimate_tokens(prompt);
  } catch (const PromptBudgetError& e) {
    out.note = e.what();
    return finish();
  }

  CompletionRequest request;
  request.prompt = prompt;
  request.temperature = config_.temperature;
  request.max_output_tokens = config_.max_output_tokens;
  request.seed = config_.seed + state_.attempts.size();
  request.location_id = location_id;
  request.attempt = rec.attempt;
  response = in_.backend->complete(request);

  Patch patch;
  try {
    std::vector<std::string> warnings;
    const Patch generated = parse_patch(response, &warnings);
    patch = partner ? combine(generated, partner->patch) : generated;
    for (const auto& w : warnings) out.note += (out.note.empty() ? "" : "; ") + w;
  } catch (const PatchParseError& e) {
    out.note = std::string("could not extract a patch from the response: ") + e.what();
    return finish();
  }
  out.patch = patch;
  rec.patch_id = patch.id();
  rec.parent_id = patch.parent;

  const fs::path ws = in_.work_dir / ("ws" + std::to_string(++workspace_counter_));
  try {
    apply_patch(in_.project_root, patch, *in_.index, ws, in_.exclude);
    out.results = run_tests(ws, in_.harness);
    out.verdict = classify(state_.baseline, *out.results);
  } catch (const ApplyError& e) {
    out.note = std::string("patch could not be applied: ") + e.what();
  } catch (const HarnessProtocolError& e) {
    out.results.reset();
    out.note = std::string("test harness output was malformed: ") + e.what();
  }
  if (!config_.keep_workspaces) {
    std::error_code ec;
    fs::remove_all(ws, ec);
    fs::remove(fs::path(ws.string() + ".results.jsonl"), ec);
  }
  return finish();
}

FeedbackEntry RepairEngine::feedback_for(const Outcome& outcome) const {
  FeedbackEntry fb;
  if (outcome.patch) fb.patch = *outcome.patch;
  fb.note = outcome.note;
  if (outcome.verdict && outcome.verdict->kind == VerdictKind::PassAll) return fb;
  fb.results = outcome.results;
  return fb;
}

void RepairEngine::add_plausible(const Outcome& outcome) {
  add_unique(state_.plausible, {*outcome.patch, *outcome.results, *outcome.verdict});
}

void RepairEngine::simultaneous_repair(const std::string& location_id,
                                       const StatementContext& target,
                                       const std::vector<CandidateSibling>& candidates,
                                       LocationRecord* record) {
  if (!evidence_) establish_baseline();
  const auto filtered = jaccard_filter(candidates, target, config_.alpha);
  auto groups = group_by_method(filtered, *in_.index);
  std::erase_if(groups, [](const MethodGroup& g) { return !g.method; });
  if (record) {
    record->jaccard_candidates = filtered.size();
    record->method_groups = groups.size();
  }
  if (groups.empty()) return;
  const auto ingredients = extract_fix_ingredients(groups, *in_.index, config_.ingredients);
  auto done = [&] { return config_.stop_on_first_plausible && !state_.plausible.empty(); };
  auto is_pass = [](const Outcome& o) { return o.verdict && o.verdict->kind == VerdictKind::PassAll; };

  std::vector<FeedbackEntry> fb;
  for (int tried = 0; tried < config_.attempts && !done(); ++tried) {
    const auto out = attempt(location_id, Phase::Simultaneous, "", groups, ingredients, fb, nullptr);
    if (is_pass(out)) add_plausible(out);
    fb = {feedback_for(out)};
  }

  const auto promising = state_.promising;
  for (const auto& p_pro : promising) {
    if (done()) break;
    fb = {FeedbackEntry{p_pro.patch, p_pro.results, ""}};
    for (int tried = 0; tried < config_.attempts && !done(); ++tried) {
      const auto out = attempt(location_id, Phase::SimultaneousCombined, "", groups, ingredients,
                               fb, &p_pro);
      if (is_pass(out)) add_plausible(out);
      fb = {feedback_for(out)};
    }
  }
}

void RepairEngine::iterative_repair(const std::string& location_id,
                                    const std::vector<CandidateSibling>& candidates) {
  if (!evidence_) establish_baseline();
  auto groups = group_by_method(candidates, *in_.index);
  std::erase_if(groups, [](const MethodGroup& g) { return !g.method; });
  auto done = [&] { return config_.stop_on_first_plausible && !state_.plausible.empty(); };

  for (const auto& m : groups) {
    if (done()) break;
    const std::span<const MethodGroup> single(&m, 1);
    const auto ingredients = extract_fix_ingredients(single, *in_.index, config_.ingredients);
    const std::string label = group_label(m);
    std::vector<FeedbackEntry> fb;
    std::vector<ValidatedPatch> new_pro;

    for (int tried = 0; tried < config_.attempts && !done(); ++tried) {
      const auto out =
          attempt(location_id, Phase::Iterative, label, single, ingredients, fb, nullptr);
      if (out.verdict && out.verdict->kind == VerdictKind::PassAll) {
        add_plausible(out);
      } else if (out.verdict && out.verdict->kind == VerdictKind::Promising) {
        add_unique(new_pro, {*out.patch, *out.results, *out.verdict});
      }
      fb = {feedback_for(out)};
    }

    for (const auto& p_pro : state_.promising) {
      if (done()) break;
      fb = {FeedbackEntry{p_pro.patch, p_pro.results, ""}};
      for (int tried = 0; tried < config_.attempts && !done(); ++tried) {
        const auto out = attempt(location_id, Phase::IterativeCombined, label, single,
                                 ingredients, fb, &p_pro);
        if (out.verdict && out.verdict->kind == VerdictKind::PassAll) {
          add_plausible(out);
        } else if (out.verdict && out.verdict->kind == VerdictKind::Promising) {
          add_unique(new_pro, {*out.patch, *out.results, *out.verdict});
        } else {
          add_unique(new_pro, p_pro);
        }
        fb = {feedback_for(out)};
      }
    }

    state_.promising = std::move(new_pro);
    PromisingSnapshot snap{location_id, label, {}};
    for (const auto& p : state_.promising) snap.patch_ids.push_back(p.patch.id());
    state_.promising_history.push_back(std::move(snap));
  }
}

RepairState RepairEngine::run() {
  if (!evidence_) establish_baseline();
  context_pool();
  std::map<std::pair<std::string, std::size_t>, std::string> seen;  // statement -> location id
  const std::size_t count = std::min(config_.suspicious_cap, in_.suspicious.size());
  try {
    for (std::size_t i = 0; i < count; ++i) {
      const auto& suspicious = in_.suspicious[i];
      LocationRecord rec;
      rec.id = "loc" + std::to_string(i + 1);
      rec.location = suspicious.location;
      rec.score = suspicious.score;
      rec.status = "budget";
      state_.locations.push_back(rec);
      const std::size_t slot = state_.locations.size() - 1;
      check_budget();

      const Statement* statement = in_.index->file(suspicious.location.file)
                                       ? in_.index->statement_at(suspicious.location.file,
                                                                 suspicious.location.line)
                                       : nullptr;
      if (!statement) {
        state_.locations[slot].status = "skipped: no statement at this location";
        continue;
      }
      const auto key = std::make_pair(statement->file, statement->begin);
      if (auto it = seen.find(key); it != seen.end()) {
        state_.locations[slot].status = "skipped: same statement as " + it->second;
        continue;
      }
      seen.emplace(key, rec.id);

      const auto target = extract_context(*in_.index, *statement);
      const auto candidates = detect(target, &state_.locations[slot]);
      simultaneous_repair(rec.id, target, candidates, &state_.locations[slot]);
      if (!state_.plausible.empty()) {
        state_.locations[slot].status = "repaired";
        state_.stop = StopReason::Plausible;
        break;
      }
      iterative_repair(rec.id, candidates);
      if (!state_.plausible.empty()) {
        state_.locations[slot].status = "repaired";
        state_.stop = StopReason::Plausible;
        break;
      }
      state_.locations[slot].status = "exhausted";
    }
  } catch (const BudgetExhausted&) {
    state_.stop = state_.plausible.empty() ? StopReason::Budget : StopReason::Plausible;
  } catch (const BackendError& e) {
    if (!state_.locations.empty()) state_.locations.back().status = "aborted";
    state_.stop = StopReason::BackendFailure;
    state_.error = e.what();
  }
  return state_;
}

}  // namespace sibfix
