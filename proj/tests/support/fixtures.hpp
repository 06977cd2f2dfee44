#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "studentsim/core_model.hpp"
#include "studentsim/dataset.hpp"
#include "studentsim/persona.hpp"

namespace studentsim::testing {

inline Aoi make_aoi(AoiId id, double x0, double y0, double x1, double y1, std::string label = {}) {
  return Aoi{id, BBox{x0, y0, x1, y1}, label.empty() ? "block " + std::to_string(id) : std::move(label)};
}

/// A slide with `aois` side-by-side columns and `transcripts` sentences whose
/// pace AOI cycles through the columns. Sentences carry a marker "S<k>T<i>" and
/// AOI labels "S<k>A<j>" so prompts can be searched for slide content.
inline Slide make_slide(int index, int aois, int transcripts, int questions = 0, long window_start = 0) {
  Slide s;
  s.index = index;
  const double w = 1.0 / aois;
  for (int j = 1; j <= aois; ++j) {
    s.aois.push_back(make_aoi(j, (j - 1) * w, 0.1, j * w, 0.9, "S" + std::to_string(index) + "A" + std::to_string(j)));
  }
  for (int i = 1; i <= transcripts; ++i) {
    Transcript t;
    t.index = i;
    t.text = "sentence S" + std::to_string(index) + "T" + std::to_string(i);
    t.pace_aoi = (i - 1) % aois + 1;
    t.window = SecondWindow{window_start + (i - 1) * 5, window_start + i * 5};
    s.transcripts.push_back(t);
  }
  for (int q = 1; q <= questions; ++q) {
    Question question;
    question.id = "s" + std::to_string(index) + "q" + std::to_string(q);
    question.stem = "question " + question.id;
    question.choices = {"first", "second", "third", "fourth"};
    question.correct = kAllChoices[static_cast<std::size_t>(q % 4)];
    question.slide_index = index;
    s.questions.push_back(question);
  }
  return s;
}

/// `slides` slides; slide k has 2 + k % 3 AOIs, 2 + k % 2 transcripts and one
/// question on every even slide. Transcript windows tile the timeline.
inline Lecture make_lecture(int slides) {
  Lecture l;
  l.title = "fixture";
  long t = 0;
  for (int k = 1; k <= slides; ++k) {
    const int transcripts = 2 + k % 2;
    l.slides.push_back(make_slide(k, 2 + k % 3, transcripts, k % 2 == 0 ? 1 : 0, t));
    t += transcripts * 5;
  }
  return l;
}

inline PersonaProfile random_persona(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(0, persona_space_size() - 1);
  return persona_from_index(d(rng));
}

inline CognitiveStateVector random_cognitive(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CognitiveStateVector c;
  for (auto& v : c.values) v = u(rng);
  return c;
}

/// A structurally valid record for `lecture`; about 10% of AOIs are NONE when `allow_none`.
inline StudentRecord random_record(const Lecture& lecture, std::mt19937_64& rng, std::string id, bool persona = true,
                                   bool allow_none = true) {
  StudentRecord r;
  r.student_id = std::move(id);
  if (persona) r.persona = random_persona(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& s : lecture.slides) {
    std::uniform_int_distribution<int> aoi(1, static_cast<int>(s.aois.size()));
    auto pick = [&]() -> MaybeAoi {
      if (allow_none && u(rng) < 0.1) return std::nullopt;
      return aoi(rng);
    };
    std::vector<BehaviorRecord> behaviors;
    for (const auto& t : s.transcripts) {
      behaviors.push_back(BehaviorRecord{s.index, t.index, pick(), pick(), random_cognitive(rng), false});
    }
    r.slides.push_back(std::move(behaviors));
    for (const auto& q : s.questions) {
      r.answers.push_back(make_answer(q, kAllChoices[static_cast<std::size_t>(rng() % 4)]));
    }
  }
  return r;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "studentsim") {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path sample_lecture_path() { return std::filesystem::path(STUDENTSIM_DATA_DIR) / "sample_lecture.jsonl"; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace studentsim::testing
