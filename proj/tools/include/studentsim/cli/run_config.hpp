#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "studentsim/agent_engine.hpp"
#include "studentsim/llm_provider.hpp"
#include "studentsim/mock_provider.hpp"

namespace studentsim::cli {

/// A configuration problem tied to one key of the run configuration.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what);
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Mode { kExperiment1, kExperiment2 };

struct RunConfig {
  std::filesystem::path lecture;
  Mode mode = Mode::kExperiment2;
  std::optional<std::size_t> cohort_size;
  std::optional<std::filesystem::path> records;
  SimulationConfig simulation;
  llm::ProviderConfig provider;
  llm::MockPolicy mock = llm::MockPolicy::standard();
  /// Template directory; the built-in templates when absent.
  std::optional<std::filesystem::path> templates;
  std::filesystem::path out = "run";
  std::size_t workers = 4;
  bool logs = true;
};

[[nodiscard]] std::string to_string(Mode m);
[[nodiscard]] std::string to_string(PriorMode m);
/// "none" or the letters of the dropped layers, e.g. "M" or "D".
[[nodiscard]] std::string ablation_code(const Ablation& a);
[[nodiscard]] Ablation parse_ablation(const std::string& code);

/// Everything needed to repeat a run except the output directory.
[[nodiscard]] nlohmann::json run_config_to_json(const RunConfig& c);
/// Overlays the keys of `j` on `base`. Accepts a run manifest too (its "config"
/// member is used). Unknown keys and bad values raise ConfigError.
[[nodiscard]] RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Cross-field checks: experiment1 needs records, experiment2 a cohort size.
void validate_run_config(const RunConfig& c);

}  // namespace studentsim::cli
