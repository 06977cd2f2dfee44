#include "studentsim/cli/cli.hpp"

#include <CLI11.hpp>

namespace studentsim::cli {

namespace {

/// Flags shared by simulate and ablate; each one overrides the config file when given.
struct RunFlags {
  std::string config;
  std::string lecture;
  std::string mode;
  std::size_t cohort_size = 0;
  std::string records;
  std::string prior;
  std::string ablate;
  std::string provider;
  std::string model;
  std::uint64_t seed = 0;
  std::size_t workers = 4;
  std::string out;
  double temperature = 0.0;
  int max_tokens = 0;
  std::string endpoint;
  std::string credential_env;
  int rpm = 0;
  std::string templates;
  bool no_logs = false;

  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app, bool with_design_flags) {
    opts["config"] = app->add_option("--config", config, "JSON run configuration (a run manifest works too)");
    opts["lecture"] = app->add_option("--lecture", lecture, "Lecture file (JSONL, one slide per line)");
    opts["mode"] = app->add_option("--mode", mode, "experiment1 (replay) or experiment2 (generate)")
                       ->check(CLI::IsMember({"experiment1", "experiment2"}));
    opts["cohort-size"] = app->add_option("--cohort-size", cohort_size, "Agents to generate in experiment2");
    opts["records"] = app->add_option("--records", records, "Real student records for experiment1");
    if (with_design_flags) {
      opts["prior"] = app->add_option("--prior", prior, "Prompting mode")->check(CLI::IsMember({"cognitive", "standard"}));
      opts["ablate"] = app->add_option("--ablate", ablate, "Memory layer to drop from the demonstration")
                           ->check(CLI::IsMember({"none", "M", "P", "C", "D"}));
    }
    opts["provider"] = app->add_option("--provider", provider, "Model provider")->check(CLI::IsMember({"remote", "mock"}));
    opts["model"] = app->add_option("--model", model, "Model name sent to the provider");
    opts["seed"] = app->add_option("--seed", seed, "Run seed; agent i uses seed XOR i");
    opts["workers"] = app->add_option("--workers", workers, "Concurrent agents (default 4)")->check(CLI::PositiveNumber);
    opts["out"] = app->add_option("--out", out, "Output directory");
    opts["temperature"] = app->add_option("--temperature", temperature, "Sampling temperature (default 0)");
    opts["max-tokens"] = app->add_option("--max-tokens", max_tokens, "Reply token limit (default 2048)");
    opts["endpoint"] = app->add_option("--endpoint", endpoint, "Chat-completions URL of the remote provider");
    opts["credential-env"] =
        app->add_option("--credential-env", credential_env, "Environment variable holding the API key");
    opts["rpm"] = app->add_option("--rpm", rpm, "Requests per minute; 0 disables the limit");
    opts["templates"] = app->add_option("--templates", templates, "Prompt template directory");
    opts["no-logs"] = app->add_flag("--no-logs", no_logs, "Skip the prompt/response logs");
  }

  [[nodiscard]] bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  [[nodiscard]] RunConfig resolve() const {
    RunConfig c;
    if (given("config")) c = load_run_config(config);
    if (given("lecture")) c.lecture = lecture;
    if (given("mode")) c.mode = mode == "experiment1" ? Mode::kExperiment1 : Mode::kExperiment2;
    if (given("cohort-size")) c.cohort_size = cohort_size;
    if (given("records")) c.records = records;
    if (given("prior")) c.simulation.prior_mode = prior == "cognitive" ? PriorMode::kCognitivePriors : PriorMode::kStandard;
    if (given("ablate")) c.simulation.ablation = parse_ablation(ablate);
    if (given("provider")) c.provider.kind = provider;
    if (given("model")) c.simulation.model_name = model;
    if (given("seed")) c.simulation.seed = seed;
    if (given("workers")) c.workers = workers;
    if (given("out")) c.out = out;
    if (given("temperature")) c.simulation.temperature = temperature;
    if (given("max-tokens")) c.simulation.max_tokens = max_tokens;
    if (given("endpoint")) c.provider.endpoint = endpoint;
    if (given("credential-env")) c.provider.credential_env = credential_env;
    if (given("rpm")) c.provider.requests_per_minute = rpm;
    if (given("templates")) c.templates = templates;
    if (given("no-logs")) c.logs = !no_logs;
    return c;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulates students attending slide lectures with language-model agents and scores the results.",
               "studentsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "studentsim " STUDENTSIM_VERSION);

  RunFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "Run experiment1 (replay) or experiment2 (generate)");
  sim_flags.attach(simulate, true);

  RunFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "Run the six-cell ablation grid over experiment1");
  ablate_flags.attach(ablate, false);

  AnalyzeOptions analyze_opts;
  std::string truth;
  auto* analyze = app.add_subcommand("analyze", "Score a cohort against real records, or summarize and correlate it");
  analyze->add_option("--lecture", analyze_opts.lecture, "Lecture file")->required();
  analyze->add_option("--cohort", analyze_opts.cohort, "Cohort file to analyze")->required();
  auto* truth_opt = analyze->add_option("--truth", truth, "Real records; switches to replay scoring");
  analyze->add_option("--out", analyze_opts.out, "Output directory")->required();
  analyze->add_flag("--include-gender", analyze_opts.include_gender, "Add persona gender to the correlation matrix");

  std::string validate_lecture;
  std::vector<std::string> validate_students, validate_raw;
  auto* validate = app.add_subcommand("validate", "Check lecture, student and raw-sample files");
  validate->add_option("--lecture", validate_lecture, "Lecture file")->required();
  validate->add_option("--students", validate_students, "Student record files");
  validate->add_option("--raw", validate_raw, "Raw per-second sample files");

  std::string derive_lecture, derive_raw, derive_out;
  auto* derive = app.add_subcommand("derive", "Reduce raw per-second samples to student records");
  derive->add_option("--lecture", derive_lecture, "Lecture file")->required();
  derive->add_option("--raw", derive_raw, "Raw per-second sample file")->required();
  derive->add_option("--out", derive_out, "Students file to write")->required();

  std::vector<const char*> argv{"studentsim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_flags.resolve(), out, err);
    if (ablate->parsed()) {
      RunConfig c = ablate_flags.resolve();
      if (!ablate_flags.given("mode") && !ablate_flags.given("config")) c.mode = Mode::kExperiment1;
      return cmd_ablate(c, out, err);
    }
    if (analyze->parsed()) {
      if (truth_opt->count() > 0) analyze_opts.truth = truth;
      return cmd_analyze(analyze_opts, out, err);
    }
    if (validate->parsed()) {
      return cmd_validate(validate_lecture, {validate_students.begin(), validate_students.end()},
                          {validate_raw.begin(), validate_raw.end()}, out, err);
    }
    if (derive->parsed()) return cmd_derive(derive_lecture, derive_raw, derive_out, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace studentsim::cli
