#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "studentsim/core_model.hpp"
#include "studentsim/dataset.hpp"

namespace studentsim::metrics {

/// Distance charged when exactly one side of a pair has no AOI.
inline constexpr double kMissingAoiPenalty = 0.5;

/// Thrown when two streams or vectors do not line up.
class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- replay fidelity --------------------------------------------------------

/// Center distance of two AOIs of `slide`. Two NONEs are distance 0; a single
/// NONE costs kMissingAoiPenalty.
[[nodiscard]] double pair_distance(const MaybeAoi& a, const MaybeAoi& b, const Slide& slide);

struct AoiDistances {
  double gaze = 0.0;
  double motor = 0.0;
};

/// Mean gaze and motor distances over streams aligned on (slide, transcript).
[[nodiscard]] AoiDistances gaze_motor_distance(std::span<const BehaviorRecord> agent,
                                               std::span<const BehaviorRecord> truth, const Lecture& lecture);

struct CognitiveMae {
  std::array<double, kCognitiveDims> components{};
  double overall = 0.0;  // mean of the six components
};

[[nodiscard]] CognitiveMae cognitive_mae(std::span<const BehaviorRecord> agent, std::span<const BehaviorRecord> truth);

/// 1 when both picked the same label.
[[nodiscard]] int choice_similarity(const AnswerRecord& agent, const AnswerRecord& truth);
/// 1 when both were right or both were wrong.
[[nodiscard]] int accuracy_similarity(const AnswerRecord& agent, const AnswerRecord& truth);

struct ReplayScores {
  double gaze_aoi_distance = 0.0;
  double motor_aoi_distance = 0.0;
  CognitiveMae cognitive;
  /// Absent when the lecture has no questions.
  std::optional<double> choice_similarity;
  std::optional<double> accuracy_similarity;
};

/// Scores one simulated record against the real one for the same student.
[[nodiscard]] ReplayScores replay_scores(const StudentRecord& agent, const StudentRecord& truth, const Lecture& lecture);

struct AgentScores {
  std::string agent_id;
  ReplayScores scores;
};

/// Pairs agents with truth records by id. Throws AlignmentError for an agent
/// without a truth record.
[[nodiscard]] std::vector<AgentScores> score_cohort(std::span<const StudentRecord> agents,
                                                    std::span<const StudentRecord> truth, const Lecture& lecture);

/// Component-wise mean; optional components average over the agents that have them.
[[nodiscard]] ReplayScores mean_scores(std::span<const AgentScores> scores);

// ---- behavior encoders ------------------------------------------------------

/// Base-2 entropy of the AOI frequencies; NONE entries are dropped.
[[nodiscard]] double sequence_entropy(std::span<const MaybeAoi> sequence);
/// Fraction of positions where the AOI equals the pace AOI. NONE never matches.
[[nodiscard]] double following_rate(std::span<const MaybeAoi> sequence, std::span<const AoiId> pace);
/// Fraction of positions 2..n equal to their predecessor. NONE never matches.
/// Throws std::invalid_argument for fewer than two entries.
[[nodiscard]] double fixing_rate(std::span<const MaybeAoi> sequence);

/// Pearson r; std::nullopt when either side is constant.
/// Throws AlignmentError on unequal lengths or fewer than two values.
[[nodiscard]] std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Per-slide or per-student behavior measures.
struct BehaviorSummary {
  double gaze_entropy = 0.0;
  double motor_entropy = 0.0;
  double gaze_following = 0.0;
  double motor_following = 0.0;
  /// Undefined on single-transcript slides.
  std::optional<double> gaze_fixing;
  std::optional<double> motor_fixing;
  std::array<double, kCognitiveDims> cognitive{};
  /// Undefined on slides without questions.
  std::optional<double> question_accuracy;
};

/// Measures of one simulation step. `answers` may hold answers of other slides;
/// only those for questions of `slide` count.
[[nodiscard]] BehaviorSummary summarize_slide(std::span<const BehaviorRecord> behaviors,
                                              std::span<const AnswerRecord> answers, const Slide& slide);

struct StudentSummary {
  std::string student_id;
  BehaviorSummary summary;  // mean of the slide summaries, optionals over defined slides
};

[[nodiscard]] StudentSummary summarize_student(const StudentRecord& record, const Lecture& lecture);

// ---- correlation ------------------------------------------------------------

struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> r;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view label) const;
  [[nodiscard]] std::optional<double> at(std::string_view a, std::string_view b) const;
};

struct CorrelationOptions {
  /// Gender is rendered in prompts but left out of the matrix unless asked for.
  bool include_gender = false;
};

/// Column labels in matrix order: persona_<item>..., persona_aggregate, then the
/// behavior measures (gaze_entropy ... question_accuracy, <state>_state).
[[nodiscard]] std::vector<std::string> correlation_labels(const CorrelationOptions& options = {});

/// Stacks encoded personas and student summaries and correlates every column
/// pair over the students where both are defined. Throws std::invalid_argument
/// for fewer than two students or a student without persona.
[[nodiscard]] CorrelationMatrix correlation_matrix(std::span<const StudentRecord> cohort, const Lecture& lecture,
                                                   const CorrelationOptions& options = {});

// ---- CSV --------------------------------------------------------------------

/// Names of the per-agent score metrics, in row order.
[[nodiscard]] std::vector<std::string> score_metric_names();
/// Values of `s` in score_metric_names() order.
[[nodiscard]] std::vector<std::optional<double>> score_values(const ReplayScores& s);

/// agent,metric,value; missing values as NA.
void write_scores_csv(std::ostream& out, std::span<const AgentScores> scores);
/// label column followed by one column per label; missing entries as NA.
void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m);
/// One row per student.
void write_summary_csv(std::ostream& out, std::span<const StudentSummary> rows);

/// Shortest round-trip decimal form used by the CSV writers; NA when absent.
[[nodiscard]] std::string format_value(const std::optional<double>& v);

}  // namespace studentsim::metrics
