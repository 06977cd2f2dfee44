#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "studentsim/cli/run_config.hpp"

namespace studentsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

/// Entry point without the program name, e.g. {"simulate", "--lecture", "l.jsonl", ...}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs the configured experiment and writes cohort.jsonl, manifest.json and
/// logs/ under config.out. 0 on full success, 2 when some agents failed.
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);

struct AblationCell {
  std::string name;
  PriorMode prior = PriorMode::kCognitivePriors;
  Ablation ablation;
};

/// all_prior, all_standard, xM, xP, xC, xD.
[[nodiscard]] std::vector<AblationCell> ablation_grid();

/// Runs every grid cell as an experiment1 replay into config.out/<cell>/,
/// scores each cell and writes config.out/comparison.csv.
int cmd_ablate(const RunConfig& config, std::ostream& out, std::ostream& err);

struct AnalyzeOptions {
  std::filesystem::path lecture;
  std::filesystem::path cohort;
  std::optional<std::filesystem::path> truth;
  std::filesystem::path out;
  bool include_gender = false;
};

/// With truth: scores.csv. Without: summary.csv and correlation.csv.
int cmd_analyze(const AnalyzeOptions& options, std::ostream& out, std::ostream& err);

/// Exit 0 iff the lecture and every given student or raw file validate.
int cmd_validate(const std::filesystem::path& lecture, const std::vector<std::filesystem::path>& students,
                 const std::vector<std::filesystem::path>& raw, std::ostream& out, std::ostream& err);

/// Raw per-second recordings to a students file.
int cmd_derive(const std::filesystem::path& lecture, const std::filesystem::path& raw,
               const std::filesystem::path& output, std::ostream& out, std::ostream& err);

}  // namespace studentsim::cli
