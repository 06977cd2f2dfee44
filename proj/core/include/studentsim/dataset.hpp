#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "studentsim/core_model.hpp"
#include "studentsim/persona.hpp"

namespace studentsim {

/// A malformed input file. `line()` is 1-based; 0 when the failure is not tied to a line.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RawSecondSample {
  long timestamp_s = 0;
  std::optional<Point> gaze_point;
  std::optional<Point> mouse_point;
  bool face_detected = true;
  bool confusion_click = false;
};

/// One student's behaviors over a lecture: `slides[k]` holds the per-transcript
/// records of slide k+1.
struct StudentRecord {
  std::string student_id;
  std::optional<PersonaProfile> persona;
  std::vector<std::vector<BehaviorRecord>> slides;
  std::vector<AnswerRecord> answers;

  friend bool operator==(const StudentRecord&, const StudentRecord&) = default;
};

/// Unprocessed per-second recording of one real student.
struct RawRecording {
  std::string student_id;
  std::optional<PersonaProfile> persona;
  std::vector<RawSecondSample> samples;  // sorted by timestamp
  std::vector<std::pair<std::string, Choice>> answers;
};

[[nodiscard]] Lecture parse_lecture(std::istream& in, const std::string& source = "<stream>");
[[nodiscard]] Lecture load_lecture(const std::filesystem::path& path);
void save_lecture(const Lecture& lecture, const std::filesystem::path& path);

/// Collapses a window of per-second samples into the six cognitive states.
///
/// Binary per-second states (valid focus, course following, engagement,
/// confusion) are averaged over the samples in the window. Workload is the
/// base-2 entropy of the gaze-AOI distribution divided by log2(K), curiosity
/// the entropy of consecutive AOI-transition pairs divided by log2(K^2), where
/// K is the slide's AOI count; the divisors are the maximum entropies, which
/// puts both in [0,1]. Seconds without an AOI drop out of both entropies.
///
/// Throws std::invalid_argument if no sample falls inside the window.
[[nodiscard]] CognitiveStateVector derive_cognitive_states(std::span<const RawSecondSample> samples,
                                                           const Slide& slide, SecondWindow window,
                                                           AoiId pace_aoi);

/// Most frequent AOI among the points; ties go to the lowest id.
[[nodiscard]] MaybeAoi dominant_aoi(std::span<const MaybeAoi> aois);

/// Reduces a raw recording to per-transcript behaviors using the lecture's
/// transcript windows. Every transcript must carry a window.
[[nodiscard]] StudentRecord derive_student_record(const RawRecording& recording, const Lecture& lecture);

[[nodiscard]] std::vector<RawRecording> load_raw_recordings(const std::filesystem::path& path);

nlohmann::json student_record_to_json(const StudentRecord& record);
[[nodiscard]] StudentRecord student_record_from_json(const nlohmann::json& j);

/// Structural check of a record against the lecture it claims to cover.
void validate_record(const StudentRecord& record, const Lecture& lecture);

void write_cohort(const std::vector<StudentRecord>& records, std::ostream& out);
/// One record per line; the file is replaced atomically.
void export_cohort(const std::vector<StudentRecord>& records, const std::filesystem::path& path);
/// Reads a cohort file; when `lecture` is given every record is validated against it.
[[nodiscard]] std::vector<StudentRecord> parse_cohort(std::istream& in, const Lecture* lecture = nullptr,
                                                      const std::string& source = "<stream>");
[[nodiscard]] std::vector<StudentRecord> load_cohort(const std::filesystem::path& path,
                                                     const Lecture* lecture = nullptr);

}  // namespace studentsim
