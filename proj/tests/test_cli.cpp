#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "studentsim/cli/cli.hpp"
#include "studentsim/cli/run_config.hpp"
#include "studentsim/json_io.hpp"

namespace studentsim::cli {
namespace {

using nlohmann::json;
using testing::read_file;
using testing::TempDir;
namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string lecture() { return testing::sample_lecture_path().string(); }

/// Real-looking records for the sample lecture.
fs::path write_students(const TempDir& dir, std::size_t n, std::uint64_t seed = 5) {
  const auto l = load_lecture(lecture());
  std::mt19937_64 rng(seed);
  std::vector<StudentRecord> records;
  for (std::size_t i = 0; i < n; ++i) records.push_back(testing::random_record(l, rng, "stu" + std::to_string(i)));
  const auto path = dir / "students.jsonl";
  export_cohort(records, path);
  return path;
}

json manifest_without_timestamp(const fs::path& dir) {
  auto j = json::parse(read_file(dir / "manifest.json"));
  j.erase("created_at");
  return j;
}

std::vector<std::string> simulate_args(const fs::path& out, const std::string& n = "4") {
  return {"simulate", "--lecture", lecture(), "--mode", "experiment2", "--cohort-size", n, "--provider", "mock",
          "--seed", "9", "--out", out.string()};
}

TEST(Simulate, TwoMockRunsAreIdentical) {
  TempDir dir;
  const auto a = run(simulate_args(dir / "a"));
  const auto b = run(simulate_args(dir / "b"));
  ASSERT_EQ(a.code, kExitOk) << a.err;
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_EQ(read_file(dir / "a" / "cohort.jsonl"), read_file(dir / "b" / "cohort.jsonl"));
  EXPECT_EQ(manifest_without_timestamp(dir / "a"), manifest_without_timestamp(dir / "b"));
  EXPECT_EQ(read_file(dir / "a" / "logs" / "agent_0002.jsonl"), read_file(dir / "b" / "logs" / "agent_0002.jsonl"));
}

TEST(Simulate, OutputsAndManifest) {
  TempDir dir;
  const auto r = run(simulate_args(dir / "run", "3"));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto l = load_lecture(lecture());
  const auto cohort = load_cohort(dir / "run" / "cohort.jsonl", &l);
  ASSERT_EQ(cohort.size(), 3u);
  const auto m = json::parse(read_file(dir / "run" / "manifest.json"));
  EXPECT_EQ(m["summary"]["agents"], 3);
  EXPECT_EQ(m["summary"]["failed"], 0);
  EXPECT_EQ(m["config"]["seed"], 9);
  EXPECT_EQ(m["agents"][1]["seed"], 9 ^ 1);
  EXPECT_FALSE(m["template_hash"].get<std::string>().empty());
  EXPECT_FALSE(m.contains("out"));
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "agent_%04d.jsonl", i);
    std::ifstream log(dir / "run" / "logs" / name);
    ASSERT_TRUE(log) << name;
    int exchanges = 0;
    for (std::string line; std::getline(log, line);) {
      const auto j = json::parse(line);
      if (j["kind"] == "exchange") {
        ++exchanges;
        EXPECT_TRUE(j.contains("user"));
        EXPECT_TRUE(j.contains("system"));
      }
    }
    EXPECT_EQ(exchanges, 3);
  }
}

TEST(Simulate, NoLogsFlag) {
  TempDir dir;
  auto args = simulate_args(dir / "run", "2");
  args.push_back("--no-logs");
  ASSERT_EQ(run(args).code, kExitOk);
  EXPECT_FALSE(fs::exists(dir / "run" / "logs"));
}

TEST(Simulate, Experiment1WithoutRecordsNamesTheKey) {
  TempDir dir;
  const auto r = run({"simulate", "--lecture", lecture(), "--mode", "experiment1", "--out", (dir / "x").string()});
  EXPECT_EQ(r.code, kExitFatal);
  EXPECT_NE(r.err.find("records"), std::string::npos) << r.err;
}

TEST(Simulate, Experiment2WithoutCohortSizeNamesTheKey) {
  TempDir dir;
  const auto r = run({"simulate", "--lecture", lecture(), "--mode", "experiment2", "--out", (dir / "x").string()});
  EXPECT_EQ(r.code, kExitFatal);
  EXPECT_NE(r.err.find("cohort_size"), std::string::npos) << r.err;
}

TEST(Simulate, FailingAgentGivesPartialExit) {
  TempDir dir;
  std::ofstream(dir / "config.json") << json{{"mock", {{"faults", {{"failing_agents", {1}}}}}}}.dump();
  auto args = simulate_args(dir / "run", "3");
  args.insert(args.end(), {"--config", (dir / "config.json").string()});
  const auto r = run(args);
  EXPECT_EQ(r.code, kExitPartial);
  EXPECT_NE(r.err.find("agent_0001"), std::string::npos) << r.err;
  const auto cohort = load_cohort(dir / "run" / "cohort.jsonl");
  ASSERT_EQ(cohort.size(), 2u);
  const auto m = json::parse(read_file(dir / "run" / "manifest.json"));
  EXPECT_EQ(m["summary"]["failed"], 1);
  EXPECT_EQ(m["agents"][1]["status"], "failed");
  EXPECT_NE(read_file(dir / "run" / "logs" / "agent_0001.jsonl").find("\"kind\":\"error\""), std::string::npos);
}

TEST(Simulate, ReplayMode) {
  TempDir dir;
  const auto students = write_students(dir, 4);
  const auto r = run({"simulate", "--lecture", lecture(), "--mode", "experiment1", "--records", students.string(),
                      "--prior", "standard", "--ablate", "M", "--out", (dir / "run").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto cohort = load_cohort(dir / "run" / "cohort.jsonl");
  ASSERT_EQ(cohort.size(), 4u);
  EXPECT_EQ(cohort[3].student_id, "stu3");
  const auto m = json::parse(read_file(dir / "run" / "manifest.json"));
  EXPECT_EQ(m["config"]["simulation"]["prior"], "standard");
  EXPECT_EQ(m["config"]["simulation"]["ablate"], "M");
}

TEST(Simulate, CommandLineOverridesConfigAndManifestReruns) {
  TempDir dir;
  std::ofstream(dir / "config.json") << json{{"lecture", lecture()},
                                             {"mode", "experiment2"},
                                             {"cohort_size", 5},
                                             {"seed", 1},
                                             {"simulation", {{"temperature", 0.0}}}}
                                            .dump();
  const auto r = run({"simulate", "--config", (dir / "config.json").string(), "--cohort-size", "2", "--out",
                      (dir / "first").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto m = json::parse(read_file(dir / "first" / "manifest.json"));
  EXPECT_EQ(m["config"]["cohort_size"], 2);
  EXPECT_EQ(m["config"]["seed"], 1);

  // A manifest doubles as a config for an exact rerun.
  const auto again = run({"simulate", "--config", (dir / "first" / "manifest.json").string(), "--out", (dir / "second").string()});
  ASSERT_EQ(again.code, kExitOk) << again.err;
  EXPECT_EQ(read_file(dir / "first" / "cohort.jsonl"), read_file(dir / "second" / "cohort.jsonl"));
}

TEST(Simulate, UnknownConfigKeyIsNamed) {
  TempDir dir;
  std::ofstream(dir / "config.json") << json{{"provider", {{"kindd", "mock"}}}}.dump();
  const auto r = run({"simulate", "--config", (dir / "config.json").string(), "--lecture", lecture()});
  EXPECT_EQ(r.code, kExitFatal);
  EXPECT_NE(r.err.find("provider.kindd"), std::string::npos) << r.err;
}

TEST(Simulate, NoNetworkFallsBackToMock) {
  TempDir dir;
  const char* old = std::getenv("NO_NETWORK");
  const std::optional<std::string> saved = old ? std::optional<std::string>(old) : std::nullopt;
  ::setenv("NO_NETWORK", "1", 1);
  auto args = simulate_args(dir / "run", "1");
  args[8] = "remote";
  const auto r = run(args);
  if (saved) {
    ::setenv("NO_NETWORK", saved->c_str(), 1);
  } else {
    ::unsetenv("NO_NETWORK");
  }
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("NO_NETWORK"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitFatal);
  EXPECT_EQ(run({"bogus"}).code, kExitFatal);
  EXPECT_EQ(run({"simulate", "--workers", "many"}).code, kExitFatal);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({"simulate", "--lecture", "/nonexistent.jsonl", "--cohort-size", "1", "--out", "/tmp/x"}).code, kExitFatal);
}

TEST(Ablate, SixCellsWithScores) {
  TempDir dir;
  const auto students = write_students(dir, 3);
  const auto r = run({"ablate", "--lecture", lecture(), "--records", students.string(), "--out", (dir / "grid").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::vector<json> personas;
  for (const auto& cell : ablation_grid()) {
    const auto scores = dir / "grid" / cell.name / "scores.csv";
    ASSERT_TRUE(fs::exists(scores)) << cell.name;
    EXPECT_EQ(read_file(scores).rfind("agent,metric,value\n", 0), 0u);
    const auto cohort = load_cohort(dir / "grid" / cell.name / "cohort.jsonl");
    json p = json::array();
    for (const auto& rec : cohort) p.push_back(rec.persona ? json(*rec.persona) : json());
    personas.push_back(p);
  }
  for (const auto& p : personas) EXPECT_EQ(p, personas.front());

  const auto xd = read_file(dir / "grid" / "xD" / "logs" / "agent_0000.jsonl");
  EXPECT_EQ(xd.find("[DEMONSTRATION]"), std::string::npos);
  const auto all = read_file(dir / "grid" / "all_prior" / "logs" / "agent_0000.jsonl");
  EXPECT_NE(all.find("[DEMONSTRATION]"), std::string::npos);
  const auto standard = read_file(dir / "grid" / "all_standard" / "logs" / "agent_0000.jsonl");
  EXPECT_EQ(standard.find("[PRIORS]"), std::string::npos);

  std::istringstream comparison(read_file(dir / "grid" / "comparison.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(comparison, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Ablate, RefusesGenerativeMode) {
  TempDir dir;
  const auto r = run({"ablate", "--lecture", lecture(), "--mode", "experiment2", "--cohort-size", "2", "--out",
                      (dir / "g").string()});
  EXPECT_EQ(r.code, kExitFatal);
  EXPECT_NE(r.err.find("mode"), std::string::npos);
}

TEST(Analyze, SelfComparisonScoresPerfectly) {
  TempDir dir;
  const auto students = write_students(dir, 3);
  const auto r = run({"analyze", "--lecture", lecture(), "--cohort", students.string(), "--truth", students.string(),
                      "--out", (dir / "an").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto csv = read_file(dir / "an" / "scores.csv");
  EXPECT_NE(csv.find("stu1,gaze_aoi_distance,0\n"), std::string::npos);
  EXPECT_NE(csv.find("stu1,choice_similarity,1\n"), std::string::npos);
  EXPECT_NE(r.out.find("mae_overall = 0"), std::string::npos) << r.out;
}

TEST(Analyze, CorrelationOutputs) {
  TempDir dir;
  const auto students = write_students(dir, 2);
  const auto r = run({"analyze", "--lecture", lecture(), "--cohort", students.string(), "--out", (dir / "an").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto corr = read_file(dir / "an" / "correlation.csv");
  EXPECT_EQ(corr.rfind("label,persona_age,persona_major", 0), 0u);
  std::istringstream in(read_file(dir / "an" / "summary.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);

  const auto g = run({"analyze", "--lecture", lecture(), "--cohort", students.string(), "--out", (dir / "g").string(),
                      "--include-gender"});
  ASSERT_EQ(g.code, kExitOk);
  EXPECT_NE(read_file(dir / "g" / "correlation.csv").find("persona_gender"), std::string::npos);
}

TEST(Analyze, MalformedLineIsNamed) {
  TempDir dir;
  const auto students = write_students(dir, 20);
  std::vector<std::string> lines;
  {
    std::ifstream in(students);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  lines[16] = "{\"version\": 1, \"student_id\": ";
  {
    std::ofstream out(students);
    for (const auto& l : lines) out << l << '\n';
  }
  const auto r = run({"analyze", "--lecture", lecture(), "--cohort", students.string(), "--out", (dir / "an").string()});
  EXPECT_EQ(r.code, kExitFatal);
  EXPECT_NE(r.err.find(":17:"), std::string::npos) << r.err;
}

TEST(Validate, ReportsEachFile) {
  TempDir dir;
  const auto good = write_students(dir, 2);
  EXPECT_EQ(run({"validate", "--lecture", lecture(), "--students", good.string()}).code, kExitOk);
  std::ofstream(dir / "bad.jsonl") << "{\"version\": 1}\n";
  const auto r = run({"validate", "--lecture", lecture(), "--students", good.string(), (dir / "bad.jsonl").string()});
  EXPECT_EQ(r.code, kExitFatal);
  EXPECT_NE(r.err.find("bad.jsonl"), std::string::npos) << r.err;
}

TEST(Derive, RawToStudents) {
  TempDir dir;
  const auto l = load_lecture(lecture());
  std::ofstream raw(dir / "raw.jsonl");
  const long end = l.slides.back().transcripts.back().window->end_s;
  for (long t = 0; t < end; ++t) {
    raw << json{{"version", 1}, {"kind", "sample"}, {"student_id", "r1"}, {"timestamp_s", t},
                {"gaze_point", {0.5, 0.5}}, {"mouse_point", {0.5, 0.5}}, {"face_detected", true},
                {"confusion_click", t % 7 == 0}}
               .dump()
        << '\n';
  }
  raw << json{{"version", 1}, {"kind", "answer"}, {"student_id", "r1"}, {"question_id", "q1"}, {"chosen", "B"}}.dump() << '\n';
  raw.close();
  const auto r = run({"derive", "--lecture", lecture(), "--raw", (dir / "raw.jsonl").string(), "--out",
                      (dir / "students.jsonl").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto cohort = load_cohort(dir / "students.jsonl", &l);
  ASSERT_EQ(cohort.size(), 1u);
  EXPECT_TRUE(cohort[0].answers[0].is_correct);
  EXPECT_EQ(run({"validate", "--lecture", lecture(), "--raw", (dir / "raw.jsonl").string()}).code, kExitOk);
}

// ---- run configuration ------------------------------------------------------------

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.lecture = "l.jsonl";
  c.mode = Mode::kExperiment1;
  c.records = "r.jsonl";
  c.simulation.seed = 42;
  c.simulation.ablation = parse_ablation("MC");
  c.simulation.prior_mode = PriorMode::kStandard;
  c.provider.requests_per_minute = 7;
  c.mock.faults.failing_agents = {2, 3};
  c.workers = 2;
  const auto j = run_config_to_json(c);
  const auto back = run_config_from_json(j);
  EXPECT_EQ(run_config_to_json(back), j);
  EXPECT_EQ(back.simulation.seed, 42u);
  EXPECT_TRUE(back.simulation.ablation.drop_cognitive);
  EXPECT_FALSE(back.simulation.ablation.drop_gaze);
}

TEST(RunConfig, AblationCodes) {
  EXPECT_EQ(ablation_code({}), "none");
  EXPECT_EQ(ablation_code(parse_ablation("D")), "D");
  EXPECT_EQ(ablation_code(parse_ablation("none")), "none");
  EXPECT_THROW((void)parse_ablation("Q"), std::exception);
}

TEST(RunConfig, ValidationNamesKeys) {
  RunConfig c;
  c.lecture = "l";
  c.cohort_size = 2;
  c.workers = 0;
  try {
    validate_run_config(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "workers");
  }
  c.workers = 1;
  c.provider.kind = "carrier-pigeon";
  try {
    validate_run_config(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "provider.kind");
  }
}

}  // namespace
}  // namespace studentsim::cli
