#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace studentsim {

/// AOI ids are 1-based and unique within a slide.
using AoiId = int;
/// An AOI reference that may be absent (off-AOI gaze, missing mouse, ...).
using MaybeAoi = std::optional<AoiId>;

/// Raised when a domain object breaks one of its invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned box in normalized screen units.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1.0;
  double y_max = 1.0;

  [[nodiscard]] double area() const { return (x_max - x_min) * (y_max - y_min); }
  [[nodiscard]] Point center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }
  [[nodiscard]] bool contains(Point p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  [[nodiscard]] bool valid() const;
};

struct Aoi {
  AoiId id = 1;
  BBox bbox;
  std::string label;
};

/// Half-open range of lecture seconds [start_s, end_s).
struct SecondWindow {
  long start_s = 0;
  long end_s = 0;

  [[nodiscard]] bool empty() const { return end_s <= start_s; }
  [[nodiscard]] bool contains(long t) const { return t >= start_s && t < end_s; }
};

struct Transcript {
  int index = 1;
  std::string text;
  AoiId pace_aoi = 1;
  /// Alignment with raw per-second recordings; only needed for ingestion.
  std::optional<SecondWindow> window;
};

enum class Choice : char { A = 'A', B = 'B', C = 'C', D = 'D' };

inline constexpr std::array<Choice, 4> kAllChoices{Choice::A, Choice::B, Choice::C, Choice::D};

[[nodiscard]] char to_char(Choice c);
[[nodiscard]] std::optional<Choice> choice_from_string(std::string_view s);

struct Question {
  std::string id;
  std::string stem;
  std::array<std::string, 4> choices;  // indexed A..D
  Choice correct = Choice::A;
  int slide_index = 1;
};

struct Slide {
  int index = 1;
  std::vector<Aoi> aois;
  std::vector<Transcript> transcripts;
  std::vector<Question> questions;

  [[nodiscard]] const Aoi* find_aoi(AoiId id) const;
  [[nodiscard]] bool has_aoi(AoiId id) const { return find_aoi(id) != nullptr; }
};

struct Lecture {
  std::string title;
  std::vector<Slide> slides;

  [[nodiscard]] const Slide* find_slide(int index) const;
  [[nodiscard]] const Question* find_question(std::string_view id) const;
  [[nodiscard]] std::size_t transcript_count() const;
};

/// Dimensions of the cognitive-state vector, in canonical order.
enum class CognitiveDim : std::size_t {
  kWorkload = 0,
  kCuriosity,
  kValidFocus,
  kCourseFollowing,
  kEngagement,
  kConfusion,
};

inline constexpr std::size_t kCognitiveDims = 6;
inline constexpr std::array<std::string_view, kCognitiveDims> kCognitiveNames{
    "workload", "curiosity", "valid_focus", "course_following", "engagement", "confusion"};

struct CognitiveStateVector {
  std::array<double, kCognitiveDims> values{};

  [[nodiscard]] double operator[](CognitiveDim d) const { return values[static_cast<std::size_t>(d)]; }
  double& operator[](CognitiveDim d) { return values[static_cast<std::size_t>(d)]; }

  [[nodiscard]] double workload() const { return (*this)[CognitiveDim::kWorkload]; }
  [[nodiscard]] double curiosity() const { return (*this)[CognitiveDim::kCuriosity]; }
  [[nodiscard]] double valid_focus() const { return (*this)[CognitiveDim::kValidFocus]; }
  [[nodiscard]] double course_following() const { return (*this)[CognitiveDim::kCourseFollowing]; }
  [[nodiscard]] double engagement() const { return (*this)[CognitiveDim::kEngagement]; }
  [[nodiscard]] double confusion() const { return (*this)[CognitiveDim::kConfusion]; }

  [[nodiscard]] bool in_unit_range() const;
  static CognitiveStateVector filled(double v);

  friend bool operator==(const CognitiveStateVector&, const CognitiveStateVector&) = default;
};

struct BehaviorRecord {
  int slide_index = 1;
  int transcript_index = 1;
  MaybeAoi gaze_aoi;
  MaybeAoi motor_aoi;
  CognitiveStateVector cognitive;
  bool fallback = false;

  friend bool operator==(const BehaviorRecord&, const BehaviorRecord&) = default;
};

struct AnswerRecord {
  std::string question_id;
  Choice chosen = Choice::A;
  bool is_correct = false;
  bool fallback = false;

  friend bool operator==(const AnswerRecord&, const AnswerRecord&) = default;
};

[[nodiscard]] AnswerRecord make_answer(const Question& q, Choice chosen);

/// Returns the AOI containing `p`. Overlaps resolve to the smallest box,
/// then the lowest id. Points outside every AOI map to no AOI.
[[nodiscard]] MaybeAoi map_point_to_aoi(Point p, const Slide& slide);

/// Euclidean distance between the two box centers.
[[nodiscard]] double aoi_center_distance(const Aoi& a, const Aoi& b);

void validate_slide(const Slide& slide);
/// Checks every slide plus contiguity of slide indices.
void validate_lecture(const Lecture& lecture);
/// Checks that the record's AOI references and indices exist on the slide.
void validate_behavior(const BehaviorRecord& record, const Slide& slide);

}  // namespace studentsim
