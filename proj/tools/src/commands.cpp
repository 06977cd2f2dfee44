#include <chrono>
#include <ctime>
#include <fstream>
#include <map>

#include "studentsim/cli/cli.hpp"
#include "studentsim/dataset.hpp"
#include "studentsim/json_io.hpp"
#include "studentsim/metrics.hpp"

namespace studentsim::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string log_name(std::size_t agent_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "agent_%04zu.jsonl", agent_index);
  return buf;
}

json exchange_line(const std::string& agent_id, const PromptExchange& e) {
  return json{{"version", kFormatVersion},  {"kind", "exchange"},       {"agent_id", agent_id},
              {"slide_index", e.slide_index}, {"parse_attempt", e.parse_attempt}, {"system", e.system_text},
              {"user", e.user_text},          {"response", e.response}};
}

void write_logs(const fs::path& dir, const ExperimentResult& result) {
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("agent_", 0) == 0 && entry.path().extension() == ".jsonl") fs::remove(entry.path());
  }
  for (const auto& run : result.runs) {
    auto out = open_output(dir / log_name(run.agent_index));
    for (const auto& step : run.steps) {
      for (const auto& e : step.exchanges) out << exchange_line(run.agent_id, e).dump() << '\n';
      out << json{{"version", kFormatVersion}, {"kind", "step"},          {"agent_id", run.agent_id},
                  {"slide_index", step.slide_index}, {"fallback", step.fallback}, {"reflection", step.reflection_text}}
                 .dump()
          << '\n';
    }
    for (const auto& e : run.failed_exchanges) out << exchange_line(run.agent_id, e).dump() << '\n';
    if (run.error) {
      out << json{{"version", kFormatVersion}, {"kind", "error"}, {"agent_id", run.agent_id}, {"message", *run.error}}.dump()
          << '\n';
    }
  }
}

json agent_entry(const AgentRun& run) {
  json j{{"agent_id", run.agent_id},
         {"index", run.agent_index},
         {"seed", run.seed},
         {"persona", run.persona ? json(*run.persona) : json(nullptr)},
         {"status", run.ok() ? "ok" : "failed"},
         {"steps", run.steps.size()},
         {"fallback_steps", run.fallback_steps()},
         {"llm_calls", run.totals.llm_calls},
         {"provider_attempts", run.totals.provider_attempts},
         {"parse_failures", run.totals.parse_failures},
         {"prompt_tokens", run.totals.prompt_tokens},
         {"completion_tokens", run.totals.completion_tokens}};
  if (run.error) j["error"] = *run.error;
  return j;
}

PromptTemplates templates_for(const RunConfig& c) {
  return c.templates ? PromptTemplates::load(*c.templates) : PromptTemplates::builtin();
}

/// Replaces a remote provider with the mock when the network is switched off.
RunConfig effective_config(RunConfig c, std::ostream& err) {
  if (c.provider.kind == "remote" && llm::network_disabled()) {
    err << "note: NO_NETWORK=1, using the mock provider\n";
    c.provider.kind = "mock";
  }
  return c;
}

struct CellResult {
  ExperimentResult result;
  std::vector<StudentRecord> real;
  Lecture lecture;
};

/// Runs the experiment of `c` and writes its run directory.
CellResult run_into(const RunConfig& c, const std::string& command, std::ostream& out) {
  CellResult cell;
  cell.lecture = load_lecture(c.lecture);
  const auto templates = templates_for(c);
  auto provider = llm::make_provider(c.provider, c.mock);

  if (c.mode == Mode::kExperiment1) {
    cell.real = load_cohort(*c.records, &cell.lecture);
    cell.result = run_experiment1(cell.lecture, cell.real, c.simulation, *provider, templates, c.workers);
  } else {
    cell.result = run_experiment2(cell.lecture, *c.cohort_size, c.simulation, *provider, templates, c.workers);
  }

  fs::create_directories(c.out);
  export_cohort(cell.result.cohort(), c.out / "cohort.jsonl");
  if (c.logs) write_logs(c.out / "logs", cell.result);

  json agents = json::array();
  std::size_t fallbacks = 0;
  for (const auto& run : cell.result.runs) {
    agents.push_back(agent_entry(run));
    fallbacks += run.fallback_steps();
  }
  const json manifest{{"version", kFormatVersion},
                      {"tool", "studentsim " STUDENTSIM_VERSION},
                      {"command", command},
                      {"created_at", utc_timestamp()},
                      {"config", run_config_to_json(c)},
                      {"template_version", templates.version()},
                      {"template_hash", templates.hash()},
                      {"provider", provider->identity()},
                      {"agent_seed_rule", "run seed XOR agent index"},
                      {"summary",
                       {{"agents", cell.result.runs.size()},
                        {"failed", cell.result.failures()},
                        {"fallback_steps", fallbacks}}},
                      {"agents", agents}};
  open_output(c.out / "manifest.json") << manifest.dump(2) << '\n';

  out << c.out.string() << ": " << cell.result.runs.size() - cell.result.failures() << "/" << cell.result.runs.size()
      << " agents completed, " << fallbacks << " fallback steps\n";
  return cell;
}

void report_failures(const ExperimentResult& result, std::ostream& err) {
  for (const auto& run : result.runs) {
    if (!run.ok()) err << "agent " << run.agent_id << " failed: " << *run.error << '\n';
  }
}

}  // namespace

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const RunConfig c = effective_config(config, err);
  validate_run_config(c);
  const auto cell = run_into(c, "simulate", out);
  report_failures(cell.result, err);
  return cell.result.failures() > 0 ? kExitPartial : kExitOk;
}

std::vector<AblationCell> ablation_grid() {
  std::vector<AblationCell> grid;
  grid.push_back({"all_prior", PriorMode::kCognitivePriors, {}});
  grid.push_back({"all_standard", PriorMode::kStandard, {}});
  grid.push_back({"xM", PriorMode::kCognitivePriors, parse_ablation("M")});
  grid.push_back({"xP", PriorMode::kCognitivePriors, parse_ablation("P")});
  grid.push_back({"xC", PriorMode::kCognitivePriors, parse_ablation("C")});
  grid.push_back({"xD", PriorMode::kCognitivePriors, parse_ablation("D")});
  return grid;
}

int cmd_ablate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  RunConfig base = effective_config(config, err);
  if (base.mode != Mode::kExperiment1) {
    throw ConfigError("mode", "the ablation grid scores replays against real records; use experiment1");
  }
  validate_run_config(base);

  fs::create_directories(base.out);
  auto comparison = open_output(base.out / "comparison.csv");
  const auto names = metrics::score_metric_names();
  comparison << "cell,prior,ablate";
  for (const auto& n : names) comparison << ',' << n;
  comparison << '\n';

  bool partial = false;
  for (const auto& spec : ablation_grid()) {
    RunConfig c = base;
    c.out = base.out / spec.name;
    c.simulation.prior_mode = spec.prior;
    c.simulation.ablation = spec.ablation;
    const auto cell = run_into(c, "ablate", out);
    report_failures(cell.result, err);
    partial = partial || cell.result.failures() > 0;

    const auto cohort = cell.result.cohort();
    const auto scores = metrics::score_cohort(cohort, cell.real, cell.lecture);
    auto scores_file = open_output(c.out / "scores.csv");
    metrics::write_scores_csv(scores_file, scores);

    const auto values = metrics::score_values(metrics::mean_scores(scores));
    comparison << spec.name << ',' << to_string(spec.prior) << ',' << ablation_code(spec.ablation);
    for (const auto& v : values) comparison << ',' << metrics::format_value(scores.empty() ? std::nullopt : v);
    comparison << '\n';
  }
  return partial ? kExitPartial : kExitOk;
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream&) {
  const Lecture lecture = load_lecture(o.lecture);
  const auto cohort = load_cohort(o.cohort, &lecture);
  fs::create_directories(o.out);

  if (o.truth) {
    const auto truth = load_cohort(*o.truth, &lecture);
    const auto scores = metrics::score_cohort(cohort, truth, lecture);
    auto scores_file = open_output(o.out / "scores.csv");
    metrics::write_scores_csv(scores_file, scores);
    const auto names = metrics::score_metric_names();
    const auto means = metrics::score_values(metrics::mean_scores(scores));
    out << "mean over " << scores.size() << " agents\n";
    for (std::size_t i = 0; i < names.size(); ++i) out << "  " << names[i] << " = " << metrics::format_value(means[i]) << '\n';
    return kExitOk;
  }

  std::vector<metrics::StudentSummary> summaries;
  for (const auto& r : cohort) summaries.push_back(metrics::summarize_student(r, lecture));
  auto summary_file = open_output(o.out / "summary.csv");
  metrics::write_summary_csv(summary_file, summaries);
  const auto matrix = metrics::correlation_matrix(cohort, lecture, {o.include_gender});
  auto correlation_file = open_output(o.out / "correlation.csv");
  metrics::write_correlation_csv(correlation_file, matrix);
  out << "summarized " << cohort.size() << " students; " << matrix.size() << "x" << matrix.size()
      << " correlation matrix written to " << (o.out / "correlation.csv").string() << '\n';
  return kExitOk;
}

int cmd_validate(const fs::path& lecture_path, const std::vector<fs::path>& students, const std::vector<fs::path>& raw,
                 std::ostream& out, std::ostream& err) {
  int status = kExitOk;
  Lecture lecture;
  try {
    lecture = load_lecture(lecture_path);
    out << "ok " << lecture_path.string() << ": " << lecture.slides.size() << " slides\n";
  } catch (const std::exception& e) {
    err << "invalid " << e.what() << '\n';
    return kExitFatal;
  }
  for (const auto& path : students) {
    try {
      const auto records = load_cohort(path, &lecture);
      out << "ok " << path.string() << ": " << records.size() << " records\n";
    } catch (const std::exception& e) {
      err << "invalid " << e.what() << '\n';
      status = kExitFatal;
    }
  }
  for (const auto& path : raw) {
    try {
      const auto recordings = load_raw_recordings(path);
      for (const auto& r : recordings) (void)derive_student_record(r, lecture);
      out << "ok " << path.string() << ": " << recordings.size() << " recordings\n";
    } catch (const std::exception& e) {
      err << "invalid " << path.string() << ": " << e.what() << '\n';
      status = kExitFatal;
    }
  }
  return status;
}

int cmd_derive(const fs::path& lecture_path, const fs::path& raw, const fs::path& output, std::ostream& out,
               std::ostream&) {
  const Lecture lecture = load_lecture(lecture_path);
  std::vector<StudentRecord> records;
  for (const auto& r : load_raw_recordings(raw)) records.push_back(derive_student_record(r, lecture));
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  export_cohort(records, output);
  out << "derived " << records.size() << " student records into " << output.string() << '\n';
  return kExitOk;
}

}  // namespace studentsim::cli
