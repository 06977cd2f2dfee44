#include "studentsim/json_io.hpp"

#include "text_util.hpp"

namespace studentsim {

using nlohmann::json;

namespace {

Choice choice_field(const json& j, const char* key) {
  const auto s = j.at(key).get<std::string>();
  auto c = choice_from_string(s);
  if (!c) throw ValidationError(detail::cat("field '", key, "' must be one of A, B, C, D (got '", s, "')"));
  return *c;
}

}  // namespace

json aoi_to_json(const MaybeAoi& a) { return a ? json(*a) : json(nullptr); }

MaybeAoi aoi_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number_integer()) throw ValidationError("AOI reference must be an integer or null");
  return j.get<AoiId>();
}

void check_version(const json& j) {
  if (!j.is_object()) throw ValidationError("line is not a JSON object");
  auto it = j.find("version");
  if (it == j.end()) throw ValidationError("missing 'version' field");
  if (!it->is_number_integer() || it->get<int>() != kFormatVersion) {
    throw ValidationError(detail::cat("unsupported version ", it->dump(), " (expected ", kFormatVersion, ")"));
  }
}

void to_json(json& j, const BBox& b) { j = json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

void from_json(const json& j, BBox& b) {
  if (!j.is_array() || j.size() != 4) throw ValidationError("bbox must be [x_min, y_min, x_max, y_max]");
  b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(json& j, const Aoi& a) { j = json{{"id", a.id}, {"bbox", a.bbox}, {"label", a.label}}; }

void from_json(const json& j, Aoi& a) {
  a.id = j.at("id").get<AoiId>();
  a.bbox = j.at("bbox").get<BBox>();
  a.label = j.at("label").get<std::string>();
}

void to_json(json& j, const Transcript& t) {
  j = json{{"index", t.index}, {"text", t.text}, {"pace_aoi", t.pace_aoi}};
  if (t.window) j["window"] = json::array({t.window->start_s, t.window->end_s});
}

void from_json(const json& j, Transcript& t) {
  t.index = j.at("index").get<int>();
  t.text = j.at("text").get<std::string>();
  t.pace_aoi = j.at("pace_aoi").get<AoiId>();
  t.window.reset();
  if (auto it = j.find("window"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2) throw ValidationError("window must be [start_s, end_s]");
    t.window = SecondWindow{(*it)[0].get<long>(), (*it)[1].get<long>()};
  }
}

void to_json(json& j, const Question& q) {
  j = json{{"id", q.id},
           {"stem", q.stem},
           {"choices", {{"A", q.choices[0]}, {"B", q.choices[1]}, {"C", q.choices[2]}, {"D", q.choices[3]}}},
           {"correct", std::string(1, to_char(q.correct))},
           {"slide_index", q.slide_index}};
}

void from_json(const json& j, Question& q) {
  q.id = j.at("id").get<std::string>();
  q.stem = j.at("stem").get<std::string>();
  const auto& choices = j.at("choices");
  if (!choices.is_object() || choices.size() != 4) {
    throw ValidationError(detail::cat("question ", q.id, ": exactly 4 choices A-D are required"));
  }
  for (auto c : kAllChoices) {
    const std::string key(1, to_char(c));
    if (!choices.contains(key)) throw ValidationError(detail::cat("question ", q.id, ": missing choice ", key));
    q.choices[static_cast<std::size_t>(to_char(c) - 'A')] = choices.at(key).get<std::string>();
  }
  q.correct = choice_field(j, "correct");
  q.slide_index = j.at("slide_index").get<int>();
}

void to_json(json& j, const Slide& s) {
  j = json{{"version", kFormatVersion},
           {"index", s.index},
           {"aois", s.aois},
           {"transcripts", s.transcripts},
           {"questions", s.questions}};
}

void from_json(const json& j, Slide& s) {
  s.index = j.at("index").get<int>();
  s.aois = j.at("aois").get<std::vector<Aoi>>();
  s.transcripts = j.at("transcripts").get<std::vector<Transcript>>();
  s.questions.clear();
  if (auto it = j.find("questions"); it != j.end()) s.questions = it->get<std::vector<Question>>();
}

void to_json(json& j, const CognitiveStateVector& c) {
  j = json::object();
  for (std::size_t d = 0; d < kCognitiveDims; ++d) j[std::string(kCognitiveNames[d])] = c.values[d];
}

void from_json(const json& j, CognitiveStateVector& c) {
  for (std::size_t d = 0; d < kCognitiveDims; ++d) c.values[d] = j.at(std::string(kCognitiveNames[d])).get<double>();
}

void to_json(json& j, const BehaviorRecord& r) {
  j = json{{"slide_index", r.slide_index},
           {"transcript_index", r.transcript_index},
           {"gaze_aoi", aoi_to_json(r.gaze_aoi)},
           {"motor_aoi", aoi_to_json(r.motor_aoi)},
           {"cognitive", r.cognitive}};
  if (r.fallback) j["fallback"] = true;
}

void from_json(const json& j, BehaviorRecord& r) {
  r.slide_index = j.at("slide_index").get<int>();
  r.transcript_index = j.at("transcript_index").get<int>();
  r.gaze_aoi = aoi_from_json(j.at("gaze_aoi"));
  r.motor_aoi = aoi_from_json(j.at("motor_aoi"));
  r.cognitive = j.at("cognitive").get<CognitiveStateVector>();
  r.fallback = j.value("fallback", false);
}

void to_json(json& j, const AnswerRecord& a) {
  j = json{{"question_id", a.question_id}, {"chosen", std::string(1, to_char(a.chosen))}, {"is_correct", a.is_correct}};
  if (a.fallback) j["fallback"] = true;
}

void from_json(const json& j, AnswerRecord& a) {
  a.question_id = j.at("question_id").get<std::string>();
  a.chosen = choice_field(j, "chosen");
  a.is_correct = j.at("is_correct").get<bool>();
  a.fallback = j.value("fallback", false);
}

void to_json(json& j, const PersonaProfile& p) {
  j = json{{"age", p.age}, {"gender", p.gender}, {"major", p.major}, {"education", p.education}};
  for (std::size_t i = 0; i < kTraitCount; ++i) j[std::string(kTraitNames[i])] = static_cast<int>(p.traits[i]);
}

void from_json(const json& j, PersonaProfile& p) {
  p.age = j.at("age").get<int>();
  p.gender = j.at("gender").get<int>();
  p.major = j.at("major").get<int>();
  p.education = j.at("education").get<int>();
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    const int v = j.at(std::string(kTraitNames[i])).get<int>();
    if (v != 0 && v != 1) throw ValidationError(detail::cat("persona field ", kTraitNames[i], " must be 0 or 1"));
    p.traits[i] = static_cast<std::uint8_t>(v);
  }
  if (!p.valid()) throw ValidationError("persona category out of range");
}

}  // namespace studentsim
