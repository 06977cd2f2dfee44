#include "studentsim/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "entropy.hpp"
#include "studentsim/json_io.hpp"
#include "text_util.hpp"

namespace studentsim {

using nlohmann::json;
using detail::cat;

namespace {

std::string describe(const std::string& source, std::size_t line, const std::string& what) {
  if (line == 0) return cat(source, ": ", what);
  return cat(source, ":", line, ": ", what);
}

/// Calls `fn(json, line_no)` for every non-blank line, attaching the line number to failures.
void for_each_jsonl(std::istream& in, const std::string& source, const std::function<void(const json&)>& fn) {
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      const json j = json::parse(text);
      check_version(j);
      fn(j);
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(source, line_no, e.what());
    }
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open file");
  return in;
}

std::optional<Point> point_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 2) throw ValidationError("points must be [x, y] or null");
  Point p{j[0].get<double>(), j[1].get<double>()};
  if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
    throw ValidationError("point coordinates must lie in [0,1]");
  }
  return p;
}

double unit_clamp(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

FormatError::FormatError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(describe(source, line, what)), line_(line) {}

Lecture parse_lecture(std::istream& in, const std::string& source) {
  Lecture lecture;
  lecture.title = std::filesystem::path(source).stem().string();
  std::vector<std::size_t> line_of_slide;
  std::size_t line_no = 0;
  std::string text;
  while (std::getline(in, text)) {
    ++line_no;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      const json j = json::parse(text);
      check_version(j);
      lecture.slides.push_back(j.get<Slide>());
      line_of_slide.push_back(line_no);
      validate_slide(lecture.slides.back());
    } catch (const std::exception& e) {
      throw FormatError(source, line_no, e.what());
    }
  }
  for (std::size_t i = 0; i < lecture.slides.size(); ++i) {
    if (lecture.slides[i].index != static_cast<int>(i) + 1) {
      throw FormatError(source, line_of_slide[i],
                        cat("slide index ", lecture.slides[i].index, " out of order, expected ", i + 1));
    }
  }
  try {
    validate_lecture(lecture);
  } catch (const ValidationError& e) {
    throw FormatError(source, 0, e.what());
  }
  return lecture;
}

Lecture load_lecture(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_lecture(in, path.string());
}

void save_lecture(const Lecture& lecture, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& s : lecture.slides) out << json(s).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

MaybeAoi dominant_aoi(std::span<const MaybeAoi> aois) {
  std::map<AoiId, std::size_t> counts;
  for (const auto& a : aois) {
    if (a) ++counts[*a];
  }
  MaybeAoi best;
  std::size_t best_n = 0;
  for (const auto& [id, n] : counts) {  // ascending id, so ties keep the lowest
    if (n > best_n) {
      best = id;
      best_n = n;
    }
  }
  return best;
}

CognitiveStateVector derive_cognitive_states(std::span<const RawSecondSample> samples, const Slide& slide,
                                             SecondWindow window, AoiId pace_aoi) {
  std::vector<MaybeAoi> gaze;
  double focus = 0.0, following = 0.0, engagement = 0.0, confusion = 0.0;
  for (const auto& s : samples) {
    if (!window.contains(s.timestamp_s)) continue;
    const MaybeAoi a = s.gaze_point ? map_point_to_aoi(*s.gaze_point, slide) : std::nullopt;
    gaze.push_back(a);
    focus += a ? 1.0 : 0.0;
    following += (a && *a == pace_aoi) ? 1.0 : 0.0;
    engagement += s.face_detected ? 1.0 : 0.0;
    confusion += s.confusion_click ? 1.0 : 0.0;
  }
  if (gaze.empty()) {
    throw std::invalid_argument(cat("empty window [", window.start_s, ", ", window.end_s, ") on slide ", slide.index));
  }

  std::map<AoiId, std::size_t> stationary;
  for (const auto& a : gaze) {
    if (a) ++stationary[*a];
  }
  std::map<std::pair<AoiId, AoiId>, std::size_t> transitions;
  for (std::size_t i = 1; i < gaze.size(); ++i) {
    if (gaze[i - 1] && gaze[i]) ++transitions[{*gaze[i - 1], *gaze[i]}];
  }

  const double k = static_cast<double>(slide.aois.size());
  const double max_stationary = std::log2(k);
  const double max_transition = 2.0 * std::log2(k);

  const double n = static_cast<double>(gaze.size());
  CognitiveStateVector c;
  c[CognitiveDim::kWorkload] = max_stationary > 0.0 ? detail::entropy_bits(stationary) / max_stationary : 0.0;
  c[CognitiveDim::kCuriosity] = max_transition > 0.0 ? detail::entropy_bits(transitions) / max_transition : 0.0;
  c[CognitiveDim::kValidFocus] = focus / n;
  c[CognitiveDim::kCourseFollowing] = following / n;
  c[CognitiveDim::kEngagement] = engagement / n;
  c[CognitiveDim::kConfusion] = confusion / n;
  for (auto& v : c.values) v = unit_clamp(v);
  return c;
}

StudentRecord derive_student_record(const RawRecording& recording, const Lecture& lecture) {
  StudentRecord record;
  record.student_id = recording.student_id;
  record.persona = recording.persona;

  for (const auto& slide : lecture.slides) {
    auto& out = record.slides.emplace_back();
    for (const auto& t : slide.transcripts) {
      if (!t.window) {
        throw ValidationError(cat("slide ", slide.index, " transcript ", t.index, " has no second window"));
      }
      std::vector<MaybeAoi> gaze, motor;
      for (const auto& s : recording.samples) {
        if (!t.window->contains(s.timestamp_s)) continue;
        gaze.push_back(s.gaze_point ? map_point_to_aoi(*s.gaze_point, slide) : std::nullopt);
        motor.push_back(s.mouse_point ? map_point_to_aoi(*s.mouse_point, slide) : std::nullopt);
      }
      BehaviorRecord b;
      b.slide_index = slide.index;
      b.transcript_index = t.index;
      b.gaze_aoi = dominant_aoi(gaze);
      b.motor_aoi = dominant_aoi(motor);
      try {
        b.cognitive = derive_cognitive_states(recording.samples, slide, *t.window, t.pace_aoi);
      } catch (const std::invalid_argument& e) {
        throw ValidationError(cat("student ", recording.student_id, ": ", e.what()));
      }
      out.push_back(b);
    }
  }

  for (const auto& [qid, chosen] : recording.answers) {
    const Question* q = lecture.find_question(qid);
    if (q == nullptr) throw ValidationError(cat("student ", recording.student_id, " answers unknown question ", qid));
    record.answers.push_back(make_answer(*q, chosen));
  }
  return record;
}

std::vector<RawRecording> load_raw_recordings(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<RawRecording> out;
  std::map<std::string, std::size_t> slot;
  auto recording_for = [&](const std::string& id) -> RawRecording& {
    auto [it, inserted] = slot.try_emplace(id, out.size());
    if (inserted) out.push_back(RawRecording{id, std::nullopt, {}, {}});
    return out[it->second];
  };

  for_each_jsonl(in, path.string(), [&](const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    auto& rec = recording_for(j.at("student_id").get<std::string>());
    if (kind == "sample") {
      RawSecondSample s;
      s.timestamp_s = j.at("timestamp_s").get<long>();
      s.gaze_point = point_from_json(j.at("gaze_point"));
      s.mouse_point = point_from_json(j.at("mouse_point"));
      s.face_detected = j.at("face_detected").get<bool>();
      s.confusion_click = j.at("confusion_click").get<bool>();
      rec.samples.push_back(s);
    } else if (kind == "answer") {
      const auto chosen = choice_from_string(j.at("chosen").get<std::string>());
      if (!chosen) throw ValidationError("answer 'chosen' must be one of A, B, C, D");
      rec.answers.emplace_back(j.at("question_id").get<std::string>(), *chosen);
    } else if (kind == "persona") {
      rec.persona = j.at("persona").get<PersonaProfile>();
    } else {
      throw ValidationError("unknown line kind '" + kind + "'");
    }
  });

  for (auto& rec : out) {
    std::stable_sort(rec.samples.begin(), rec.samples.end(),
                     [](const RawSecondSample& a, const RawSecondSample& b) { return a.timestamp_s < b.timestamp_s; });
  }
  return out;
}

json student_record_to_json(const StudentRecord& record) {
  json slides = json::array();
  for (std::size_t k = 0; k < record.slides.size(); ++k) {
    slides.push_back(json{{"slide_index", static_cast<int>(k + 1)}, {"behaviors", record.slides[k]}});
  }
  return json{{"version", kFormatVersion},
              {"student_id", record.student_id},
              {"persona", record.persona ? json(*record.persona) : json(nullptr)},
              {"slides", std::move(slides)},
              {"answers", record.answers}};
}

StudentRecord student_record_from_json(const json& j) {
  check_version(j);
  StudentRecord r;
  r.student_id = j.at("student_id").get<std::string>();
  if (const auto& p = j.at("persona"); !p.is_null()) r.persona = p.get<PersonaProfile>();
  const auto& slides = j.at("slides");
  if (!slides.is_array()) throw ValidationError("'slides' must be an array");
  for (std::size_t k = 0; k < slides.size(); ++k) {
    if (slides[k].at("slide_index").get<int>() != static_cast<int>(k + 1)) {
      throw ValidationError(cat("slides must be listed in order; entry ", k + 1, " is out of place"));
    }
    r.slides.push_back(slides[k].at("behaviors").get<std::vector<BehaviorRecord>>());
  }
  r.answers = j.at("answers").get<std::vector<AnswerRecord>>();
  return r;
}

void validate_record(const StudentRecord& record, const Lecture& lecture) {
  const auto who = "student " + record.student_id;
  if (record.slides.size() != lecture.slides.size()) {
    throw ValidationError(cat(who, ": covers ", record.slides.size(), " slides, lecture has ", lecture.slides.size()));
  }
  for (std::size_t k = 0; k < lecture.slides.size(); ++k) {
    const Slide& slide = lecture.slides[k];
    const auto& behaviors = record.slides[k];
    if (behaviors.size() != slide.transcripts.size()) {
      throw ValidationError(cat(who, ": slide ", slide.index, " has ", behaviors.size(), " behaviors for ",
                                slide.transcripts.size(), " transcripts"));
    }
    for (std::size_t t = 0; t < behaviors.size(); ++t) {
      if (behaviors[t].transcript_index != static_cast<int>(t + 1)) {
        throw ValidationError(cat(who, ": slide ", slide.index, " behaviors out of transcript order"));
      }
      try {
        validate_behavior(behaviors[t], slide);
      } catch (const ValidationError& e) {
        throw ValidationError(who + ": " + e.what());
      }
    }
  }
  std::set<std::string> answered;
  for (const auto& a : record.answers) {
    if (!answered.insert(a.question_id).second) {
      throw ValidationError(cat(who, ": question ", a.question_id, " answered twice"));
    }
    const Question* q = lecture.find_question(a.question_id);
    if (q == nullptr) throw ValidationError(cat(who, ": answer to unknown question ", a.question_id));
    if (a.is_correct != (a.chosen == q->correct)) {
      throw ValidationError(cat(who, ": answer to ", a.question_id, " has inconsistent is_correct"));
    }
  }
}

void write_cohort(const std::vector<StudentRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << student_record_to_json(r).dump() << '\n';
}

void export_cohort(const std::vector<StudentRecord>& records, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    write_cohort(records, out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<StudentRecord> parse_cohort(std::istream& in, const Lecture* lecture, const std::string& source) {
  std::vector<StudentRecord> out;
  std::set<std::string> ids;
  for_each_jsonl(in, source, [&](const json& j) {
    auto r = student_record_from_json(j);
    if (!ids.insert(r.student_id).second) throw ValidationError("duplicate student_id " + r.student_id);
    if (lecture != nullptr) validate_record(r, *lecture);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<StudentRecord> load_cohort(const std::filesystem::path& path, const Lecture* lecture) {
  auto in = open_input(path);
  return parse_cohort(in, lecture, path.string());
}

}  // namespace studentsim
