#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "studentsim/core_model.hpp"
#include "studentsim/dataset.hpp"
#include "studentsim/llm_provider.hpp"
#include "studentsim/persona.hpp"

namespace studentsim {

// ---- prompt templates -------------------------------------------------------

/// Named template bodies with `{{placeholder}}` markers. The engine writes the
/// `[BLOCK]` header lines itself; templates only supply wording.
class PromptTemplates {
 public:
  /// Templates compiled into the library (templates/v1).
  static PromptTemplates builtin();
  /// Every `*.txt` in `dir`, keyed by file stem; the directory name is the version.
  static PromptTemplates load(const std::filesystem::path& dir);

  [[nodiscard]] const std::string& get(const std::string& name) const;
  [[nodiscard]] const std::string& version() const { return version_; }
  /// FNV-1a over names and bodies, hex encoded; recorded in run manifests.
  [[nodiscard]] std::string hash() const;
  [[nodiscard]] const std::map<std::string, std::string>& parts() const { return parts_; }

  PromptTemplates(std::string version, std::map<std::string, std::string> parts);

 private:
  std::string version_;
  std::map<std::string, std::string> parts_;
};

/// Substitutes `{{name}}` markers; throws std::invalid_argument on an unknown marker.
[[nodiscard]] std::string render_template(const std::string& tpl, const std::map<std::string, std::string>& vars);

/// The six numbered statements of the priors template.
[[nodiscard]] std::vector<std::string> prior_statements(const PromptTemplates& templates);

// ---- configuration ----------------------------------------------------------

enum class PriorMode { kCognitivePriors, kStandard };

struct Ablation {
  bool drop_motor = false;          // xM
  bool drop_gaze = false;           // xP
  bool drop_cognitive = false;      // xC
  bool drop_demonstration = false;  // xD, overrides the others
};

struct SimulationConfig {
  PriorMode prior_mode = PriorMode::kCognitivePriors;
  Ablation ablation;
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 2048;
  std::uint64_t seed = 0;
  /// Correction re-prompts after an unparseable reply.
  int max_parse_retries = 2;
};

/// Per-agent seed: the run seed XOR the agent index.
[[nodiscard]] constexpr std::uint64_t agent_seed(std::uint64_t run_seed, std::size_t agent_index) {
  return run_seed ^ static_cast<std::uint64_t>(agent_index);
}

// ---- memory -----------------------------------------------------------------

/// Layers recorded for the most recent completed slide.
struct SlideMemory {
  Slide material;
  std::vector<MaybeAoi> gaze;
  std::vector<MaybeAoi> motor;
  std::vector<CognitiveStateVector> cognitive;
};

/// Few-shot memory: the static persona text plus the layers of exactly one past slide.
class MemoryStore {
 public:
  explicit MemoryStore(std::string persona_text = {}) : persona_text_(std::move(persona_text)) {}

  /// Replaces the remembered slide. Throws ValidationError when the behaviors
  /// do not line up with the slide's transcripts.
  void remember(const Slide& slide, std::span<const BehaviorRecord> behaviors);
  void clear() { last_.reset(); }

  [[nodiscard]] const std::optional<SlideMemory>& last() const { return last_; }
  [[nodiscard]] const std::string& persona_text() const { return persona_text_; }
  /// Component-wise mean of the cognitive layer; 0.5 everywhere when empty.
  [[nodiscard]] CognitiveStateVector mean_cognitive() const;

 private:
  std::string persona_text_;
  std::optional<SlideMemory> last_;
};

// ---- prompting --------------------------------------------------------------

inline constexpr std::string_view kPersonaHeader = "[PERSONA]";
inline constexpr std::string_view kSlideHeader = "[CURRENT SLIDE]";
inline constexpr std::string_view kDemonstrationHeader = "[DEMONSTRATION]";
inline constexpr std::string_view kPriorsHeader = "[PRIORS]";
inline constexpr std::string_view kReflectHeader = "[REFLECT FIRST]";
inline constexpr std::string_view kSchemaHeader = "[OUTPUT SCHEMA]";
inline constexpr std::string_view kCorrectionHeader = "[CORRECTION]";

/// The demonstration block alone (header included), or empty when it is
/// omitted: first slide, or the xD ablation.
[[nodiscard]] std::string build_demonstration(const MemoryStore& memory, const Ablation& ablation,
                                              const PromptTemplates& templates);

/// Assembles the step prompt: persona, current slide, demonstration, then in
/// cognitive-priors mode the priors and reflection blocks, and finally the
/// output schema.
[[nodiscard]] llm::ChatRequest build_prompt(const std::optional<PersonaProfile>& persona, const Slide& slide,
                                            std::size_t slide_count, const MemoryStore& memory,
                                            const SimulationConfig& config, const PromptTemplates& templates);

// ---- simulation -------------------------------------------------------------

struct StepAccounting {
  int llm_calls = 0;
  int provider_attempts = 0;
  int parse_failures = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;

  StepAccounting& operator+=(const StepAccounting& o);
};

/// One prompt/reply pair, kept for the run logs.
struct PromptExchange {
  int slide_index = 0;
  int parse_attempt = 0;
  std::string system_text;
  std::string user_text;
  std::string response;
};

struct StepOutput {
  int slide_index = 0;
  std::vector<BehaviorRecord> behaviors;
  std::vector<AnswerRecord> answers;
  std::string reflection_text;
  std::string raw_response;
  bool fallback = false;
  StepAccounting accounting;
  std::vector<PromptExchange> exchanges;
};

/// Provider failure inside a step; carries what was spent before it.
class StepError : public std::runtime_error {
 public:
  StepError(int slide_index, StepAccounting partial, std::vector<PromptExchange> exchanges, const std::string& what);
  [[nodiscard]] int slide_index() const { return slide_index_; }
  [[nodiscard]] const StepAccounting& partial() const { return partial_; }
  [[nodiscard]] const std::vector<PromptExchange>& exchanges() const { return exchanges_; }

 private:
  int slide_index_;
  StepAccounting partial_;
  std::vector<PromptExchange> exchanges_;
};

struct AgentState {
  std::string agent_id;
  std::size_t agent_index = 0;
  std::uint64_t seed = 0;
  std::optional<PersonaProfile> persona;
  MemoryStore memory;
};

[[nodiscard]] AgentState make_agent(std::string agent_id, std::size_t agent_index, std::uint64_t seed,
                                    std::optional<PersonaProfile> persona);

/// Fallback for an unusable reply: pace AOI for gaze and motor, the memory's
/// mean cognitive state, choice A; everything flagged.
[[nodiscard]] StepOutput fallback_step(const Slide& slide, const MemoryStore& memory);

/// Prompts, calls the provider, and parses the reply, re-prompting with a
/// correction up to `config.max_parse_retries` times before falling back.
/// Does not touch the agent's memory. Throws StepError on provider failure.
[[nodiscard]] StepOutput run_slide_step(const AgentState& agent, const Slide& slide, std::size_t slide_count,
                                        const SimulationConfig& config, llm::Provider& provider,
                                        const PromptTemplates& templates);

struct AgentRun {
  std::string agent_id;
  std::size_t agent_index = 0;
  std::uint64_t seed = 0;
  std::optional<PersonaProfile> persona;
  std::vector<StepOutput> steps;
  std::optional<std::string> error;
  /// Exchanges of the failing step, if any.
  std::vector<PromptExchange> failed_exchanges;
  StepAccounting totals;

  [[nodiscard]] bool ok() const { return !error.has_value(); }
  [[nodiscard]] std::size_t fallback_steps() const;
  /// Simulated behaviors as a student record (only meaningful when ok()).
  [[nodiscard]] StudentRecord record() const;
};

struct ExperimentResult {
  std::vector<AgentRun> runs;  // agent order, independent of completion order

  [[nodiscard]] std::size_t failures() const;
  /// Records of the agents that completed every slide.
  [[nodiscard]] std::vector<StudentRecord> cohort() const;
};

/// Replay mode: one agent per real student; before slide k the agent's memory
/// holds that student's real slide k-1 behaviors.
/// Throws ValidationError if a record does not match the lecture.
[[nodiscard]] ExperimentResult run_experiment1(const Lecture& lecture, std::span<const StudentRecord> real_records,
                                               const SimulationConfig& config, llm::Provider& provider,
                                               const PromptTemplates& templates, std::size_t workers = 4);

/// Generative mode: `cohort_size` agents with seeded personas, each remembering
/// its own previous slide. Agent failures are recorded, not thrown.
[[nodiscard]] ExperimentResult run_experiment2(const Lecture& lecture, std::size_t cohort_size,
                                               const SimulationConfig& config, llm::Provider& provider,
                                               const PromptTemplates& templates, std::size_t workers = 4);

/// Runs fn(i) for i in [0, n) on at most `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace studentsim
