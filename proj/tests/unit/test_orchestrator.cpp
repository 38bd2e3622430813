#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "sibfix/orchestrator.hpp"
#include "test_support.hpp"

using namespace sibfix;
using nlohmann::json;
namespace fs = std::filesystem;
using std::chrono::milliseconds;

namespace {

json read_json(const fs::path& p) { return json::parse(testsupport::read_file(p)); }

void write_json(const fs::path& p, const json& j) { testsupport::write_file(p, j.dump(2)); }

// Runs the CLI; returns its exit status and stdout.
int cli(const std::string& args, std::string* out = nullptr) {
  return testsupport::run_shell(testsupport::repair_binary().string() + " " + args + " 2>/dev/null",
                                out);
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

TEST(ParseDuration, Forms) {
  EXPECT_EQ(parse_duration("90"), milliseconds(90'000));
  EXPECT_EQ(parse_duration("90s"), milliseconds(90'000));
  EXPECT_EQ(parse_duration("500ms"), milliseconds(500));
  EXPECT_EQ(parse_duration("30m"), milliseconds(1'800'000));
  EXPECT_EQ(parse_duration("5h"), milliseconds(18'000'000));
  EXPECT_EQ(parse_duration("1h30m"), milliseconds(5'400'000));
  EXPECT_EQ(parse_duration("1.5s"), milliseconds(1500));
  EXPECT_THROW(parse_duration(""), InputError);
  EXPECT_THROW(parse_duration("soon"), InputError);
  EXPECT_THROW(parse_duration("-5s"), InputError);
}

TEST(ParseMode, Names) {
  EXPECT_EQ(parse_mode("sbfl"), LocalizationMode::Sbfl);
  EXPECT_EQ(parse_mode("spfl"), LocalizationMode::Spfl);
  EXPECT_EQ(parse_mode("pfl"), LocalizationMode::Pfl);
  EXPECT_THROW(parse_mode("SBFL!"), InputError);
  EXPECT_EQ(to_string(LocalizationMode::Spfl), "spfl");
}

class Descriptor : public ::testing::Test {
 protected:
  testsupport::TempDir dir;
  fs::path path;
  json base;
  void SetUp() override {
    path = testsupport::stage_sibling_fixture(dir / "fx");
    base = read_json(path);
  }
  ProjectDescriptor load_with(const json& j) {
    write_json(path, j);
    return load_descriptor(path);
  }
};

TEST_F(Descriptor, LoadsTheBundledFixture) {
  const auto d = load_descriptor(path);
  EXPECT_EQ(d.root, fs::canonical(dir / "fx" / "project"));
  EXPECT_EQ(d.include, std::vector<std::string>{"src/**/*.java"});
  EXPECT_EQ(d.harness_timeout, milliseconds(30'000));
  EXPECT_NE(d.harness_command.find(fs::canonical(dir / "fx").string() + "/run_tests.sh"),
            std::string::npos);
  EXPECT_EQ(d.repair.attempts, 5);
  EXPECT_EQ(d.repair.budget, milliseconds(600'000));
  EXPECT_EQ(d.mode, LocalizationMode::Sbfl);
  ASSERT_TRUE(d.spfl_location);
  EXPECT_EQ(d.spfl_location->line, 21);
}

TEST_F(Descriptor, RejectsBadInput) {
  auto j = base;
  j["surprise"] = 1;
  EXPECT_THROW(load_with(j), InputError);
  j = base;
  j["coverage"] = "nope.jsonl";
  EXPECT_THROW(load_with(j), InputError);
  j = base;
  j["project_root"] = "missing";
  EXPECT_THROW(load_with(j), InputError);
  j = base;
  j["mode"]["kind"] = "magic";
  EXPECT_THROW(load_with(j), InputError);
  j = base;
  j["repair"]["budget"] = "forever";
  EXPECT_THROW(load_with(j), InputError);
  j = base;
  j["backend"] = {{"kind", "scripted"}, {"dir", "no-such-dir"}};
  EXPECT_THROW(load_with(j), InputError);
  j = base;
  j.erase("harness");
  EXPECT_THROW(load_with(j), InputError);
  testsupport::write_file(path, "{ not json");
  EXPECT_THROW(load_descriptor(path), InputError);
  EXPECT_THROW(load_descriptor(dir / "absent.json"), InputError);
}

TEST_F(Descriptor, LocalizationModes) {
  auto d = load_descriptor(path);
  const auto coverage = load_coverage(d.coverage);
  const auto sbfl = localize(d, coverage);
  d.mode = LocalizationMode::Spfl;
  const auto spfl = localize(d, coverage);
  ASSERT_EQ(spfl.size(), sbfl.size());
  EXPECT_EQ(spfl[0].location, (Location{"src/tmpl/SqlQuery.java", 21}));

  auto j = base;
  j["mode"] = {{"kind", "pfl"},
               {"locations", json::array({{{"file", "src/tmpl/UrlBuilder.java"}, {"line", 22}},
                                          {{"file", "src/tmpl/SqlQuery.java"}, {"line", 21}}})}};
  const auto pd = load_with(j);
  const auto pfl = localize(pd, coverage);
  ASSERT_EQ(pfl.size(), 2u);
  EXPECT_EQ(pfl[0].location.file, "src/tmpl/UrlBuilder.java");
  EXPECT_EQ(pfl[1].rank, 2);

  j = base;
  j["mode"] = {{"kind", "spfl"}};
  const auto missing = load_with(j);
  EXPECT_THROW(localize(missing, coverage), InputError);
}

TEST(Cli, RepairsTheSiblingFixture) {
  testsupport::TempDir dir;
  const auto descriptor = testsupport::stage_sibling_fixture(dir / "fx");
  std::string out;
  ASSERT_EQ(cli("run " + descriptor.string() + " --out " + (dir / "runs").string(), &out), 0);
  const fs::path report_path = trim(out);
  ASSERT_TRUE(fs::exists(report_path)) << out;
  const fs::path run_dir = report_path.parent_path();
  EXPECT_EQ(run_dir.parent_path(), dir / "runs");

  const auto report = read_json(report_path);
  EXPECT_EQ(report["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(report["status"], "plausible");
  EXPECT_EQ(report["exit_code"], 0);
  ASSERT_EQ(report["plausible"].size(), 1u);
  EXPECT_EQ(testsupport::read_file(run_dir / "patches" / "plausible-1.diff"),
            testsupport::read_file(testsupport::fixtures() / "sibling_bug" / "expected.diff"));
  EXPECT_TRUE(fs::exists(run_dir / "prompts" / "loc1_attempt1.txt"));
  EXPECT_EQ(testsupport::read_file(run_dir / "responses" / "loc1_attempt1.txt"),
            testsupport::read_file(dir / "fx" / "responses" / "loc1_attempt1.txt"));
  EXPECT_TRUE(fs::exists(run_dir / "harness.log"));
  EXPECT_FALSE(fs::exists(run_dir / "workspaces" / "ws1"));
  // The project itself is untouched.
  EXPECT_EQ(testsupport::read_file(dir / "fx" / "project" / "src" / "tmpl" / "SqlQuery.java"),
            testsupport::read_file(testsupport::fixtures() / "sibling_bug" / "project" / "src" /
                                   "tmpl" / "SqlQuery.java"));
}

TEST(Cli, ExitCodesForBadInput) {
  testsupport::TempDir dir;
  const auto descriptor = testsupport::stage_sibling_fixture(dir / "fx");
  EXPECT_EQ(cli("run " + (dir / "none.json").string()), kExitInvalidInput);
  EXPECT_EQ(cli("run " + descriptor.string() + " --mode nonsense"), kExitInvalidInput);
  EXPECT_EQ(cli("run " + descriptor.string() + " --budget later"), kExitInvalidInput);
  EXPECT_EQ(cli("frobnicate"), kExitInvalidInput);
  fs::remove(dir / "fx" / "coverage.jsonl");
  EXPECT_EQ(cli("run " + descriptor.string()), kExitInvalidInput);
}

TEST(Cli, NotRepairedAndBackendFailure) {
  testsupport::TempDir dir;
  const auto descriptor = testsupport::stage_sibling_fixture(dir / "fx");
  fs::remove(dir / "fx" / "responses" / "loc1_attempt1.txt");
  std::string out;
  EXPECT_EQ(cli("run " + descriptor.string() + " --attempts 1 --out " + (dir / "a").string(), &out),
            kExitNotRepaired);
  const auto report = read_json(trim(out));
  EXPECT_EQ(report["status"], "exhausted");
  EXPECT_TRUE(report["plausible"].empty());

  auto j = read_json(descriptor);
  j["backend"]["missing"] = "error";
  write_json(descriptor, j);
  EXPECT_EQ(cli("run " + descriptor.string() + " --out " + (dir / "b").string(), &out),
            kExitBackendFailure);
  EXPECT_EQ(read_json(trim(out))["status"], "backend-failure");
}

TEST(Run, SecondRunServesEmbeddingsFromCache) {
  testsupport::TempDir dir;
  const auto descriptor = testsupport::stage_sibling_fixture(dir / "fx");
  RunOverrides o;
  o.out = dir / "runs";
  std::ostringstream log;
  const auto first = run(descriptor, o, log);
  const auto second = run(descriptor, o, log);
  ASSERT_EQ(first.exit_code, 0);
  ASSERT_EQ(second.exit_code, 0);
  EXPECT_GT(first.report["counts"]["embedding_provider_calls"].get<int>(), 0);
  EXPECT_EQ(second.report["counts"]["embedding_provider_calls"], 0);
  EXPECT_GT(second.report["counts"]["embedding_cache_hits"].get<int>(), 0);
  EXPECT_NE(first.run_dir, second.run_dir);
  EXPECT_EQ(first.report["attempts"], second.report["attempts"]);
}
