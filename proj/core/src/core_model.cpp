#include "studentsim/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "text_util.hpp"

namespace studentsim {

using detail::cat;

bool BBox::valid() const {
  return x_min >= 0.0 && x_min < x_max && x_max <= 1.0 && y_min >= 0.0 && y_min < y_max && y_max <= 1.0;
}

char to_char(Choice c) { return static_cast<char>(c); }

std::optional<Choice> choice_from_string(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  switch (s[0]) {
    case 'A': return Choice::A;
    case 'B': return Choice::B;
    case 'C': return Choice::C;
    case 'D': return Choice::D;
    default: return std::nullopt;
  }
}

const Aoi* Slide::find_aoi(AoiId id) const {
  auto it = std::find_if(aois.begin(), aois.end(), [id](const Aoi& a) { return a.id == id; });
  return it == aois.end() ? nullptr : &*it;
}

const Slide* Lecture::find_slide(int index) const {
  if (index < 1 || static_cast<std::size_t>(index) > slides.size()) return nullptr;
  const Slide& s = slides[static_cast<std::size_t>(index - 1)];
  return s.index == index ? &s : nullptr;
}

const Question* Lecture::find_question(std::string_view id) const {
  for (const auto& s : slides) {
    for (const auto& q : s.questions) {
      if (q.id == id) return &q;
    }
  }
  return nullptr;
}

std::size_t Lecture::transcript_count() const {
  std::size_t n = 0;
  for (const auto& s : slides) n += s.transcripts.size();
  return n;
}

bool CognitiveStateVector::in_unit_range() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

CognitiveStateVector CognitiveStateVector::filled(double v) {
  CognitiveStateVector c;
  c.values.fill(v);
  return c;
}

AnswerRecord make_answer(const Question& q, Choice chosen) {
  return AnswerRecord{q.id, chosen, chosen == q.correct, false};
}

MaybeAoi map_point_to_aoi(Point p, const Slide& slide) {
  const Aoi* best = nullptr;
  for (const auto& aoi : slide.aois) {
    if (!aoi.bbox.contains(p)) continue;
    if (best == nullptr) {
      best = &aoi;
      continue;
    }
    const double a = aoi.bbox.area();
    const double b = best->bbox.area();
    if (a < b || (a == b && aoi.id < best->id)) best = &aoi;
  }
  if (best == nullptr) return std::nullopt;
  return best->id;
}

double aoi_center_distance(const Aoi& a, const Aoi& b) {
  const Point ca = a.bbox.center();
  const Point cb = b.bbox.center();
  return std::hypot(ca.x - cb.x, ca.y - cb.y);
}

void validate_slide(const Slide& slide) {
  const auto where = cat("slide ", slide.index);
  if (slide.aois.empty()) throw ValidationError(where + ": no AOIs");
  if (slide.transcripts.empty()) throw ValidationError(where + ": no transcripts");

  std::set<AoiId> ids;
  for (const auto& aoi : slide.aois) {
    if (!aoi.bbox.valid()) throw ValidationError(cat(where, ": AOI ", aoi.id, " has an invalid bbox"));
    if (!ids.insert(aoi.id).second) throw ValidationError(cat(where, ": duplicate AOI id ", aoi.id));
  }
  if (*ids.begin() != 1 || *ids.rbegin() != static_cast<AoiId>(ids.size())) {
    throw ValidationError(where + ": AOI ids must be contiguous from 1");
  }

  for (std::size_t i = 0; i < slide.transcripts.size(); ++i) {
    const auto& t = slide.transcripts[i];
    if (t.index != static_cast<int>(i + 1)) {
      throw ValidationError(cat(where, ": transcript ", i + 1, " has index ", t.index));
    }
    if (t.text.empty()) throw ValidationError(cat(where, ": transcript ", t.index, " has empty text"));
    if (!slide.has_aoi(t.pace_aoi)) {
      throw ValidationError(
          cat(where, ": transcript ", t.index, " references pace_aoi ", t.pace_aoi, " which is not on the slide"));
    }
    if (t.window && t.window->empty()) {
      throw ValidationError(cat(where, ": transcript ", t.index, " has an empty second window"));
    }
  }

  for (const auto& q : slide.questions) {
    if (q.id.empty()) throw ValidationError(where + ": question with empty id");
    if (q.slide_index != slide.index) {
      throw ValidationError(cat(where, ": question ", q.id, " names slide ", q.slide_index));
    }
  }
}

void validate_lecture(const Lecture& lecture) {
  if (lecture.slides.empty()) throw ValidationError("lecture has no slides");
  std::set<std::string> question_ids;
  for (std::size_t i = 0; i < lecture.slides.size(); ++i) {
    const auto& s = lecture.slides[i];
    if (s.index != static_cast<int>(i + 1)) {
      throw ValidationError(cat("slide indices must be contiguous from 1; position ", i + 1, " has ", s.index));
    }
    validate_slide(s);
    for (const auto& q : s.questions) {
      if (!question_ids.insert(q.id).second) throw ValidationError(cat("duplicate question id ", q.id));
    }
  }
}

void validate_behavior(const BehaviorRecord& record, const Slide& slide) {
  const auto where = cat("behavior (slide ", record.slide_index, ", transcript ", record.transcript_index, ")");
  if (record.slide_index != slide.index) throw ValidationError(where + ": slide index mismatch");
  if (record.transcript_index < 1 || static_cast<std::size_t>(record.transcript_index) > slide.transcripts.size()) {
    throw ValidationError(where + ": transcript index out of range");
  }
  if (record.gaze_aoi && !slide.has_aoi(*record.gaze_aoi)) {
    throw ValidationError(cat(where, ": gaze_aoi ", *record.gaze_aoi, " not on slide"));
  }
  if (record.motor_aoi && !slide.has_aoi(*record.motor_aoi)) {
    throw ValidationError(cat(where, ": motor_aoi ", *record.motor_aoi, " not on slide"));
  }
  for (std::size_t d = 0; d < kCognitiveDims; ++d) {
    const double v = record.cognitive.values[d];
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(cat(where, ": ", kCognitiveNames[d], " outside [0,1]"));
  }
}

}  // namespace studentsim
