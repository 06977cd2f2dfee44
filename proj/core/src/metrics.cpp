#include "studentsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "entropy.hpp"
#include "text_util.hpp"

namespace studentsim::metrics {

using detail::cat;

namespace {

void check_aligned(std::span<const BehaviorRecord> agent, std::span<const BehaviorRecord> truth) {
  if (agent.size() != truth.size()) {
    throw AlignmentError(cat("streams differ in length: ", agent.size(), " vs ", truth.size()));
  }
  for (std::size_t i = 0; i < agent.size(); ++i) {
    if (agent[i].slide_index != truth[i].slide_index || agent[i].transcript_index != truth[i].transcript_index) {
      throw AlignmentError(cat("streams misaligned at position ", i, ": slide ", agent[i].slide_index, " transcript ",
                               agent[i].transcript_index, " vs slide ", truth[i].slide_index, " transcript ",
                               truth[i].transcript_index));
    }
  }
}

void check_same_question(const AnswerRecord& a, const AnswerRecord& b) {
  if (a.question_id != b.question_id) {
    throw AlignmentError(cat("answers to different questions: ", a.question_id, " vs ", b.question_id));
  }
}

std::vector<BehaviorRecord> flatten(const StudentRecord& r) {
  std::vector<BehaviorRecord> out;
  for (const auto& s : r.slides) out.insert(out.end(), s.begin(), s.end());
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

// ---- replay fidelity --------------------------------------------------------

double pair_distance(const MaybeAoi& a, const MaybeAoi& b, const Slide& slide) {
  if (!a && !b) return 0.0;
  if (!a || !b) return kMissingAoiPenalty;
  const Aoi* x = slide.find_aoi(*a);
  const Aoi* y = slide.find_aoi(*b);
  if (x == nullptr || y == nullptr) {
    throw AlignmentError(cat("AOI ", x == nullptr ? *a : *b, " is not on slide ", slide.index));
  }
  return aoi_center_distance(*x, *y);
}

AoiDistances gaze_motor_distance(std::span<const BehaviorRecord> agent, std::span<const BehaviorRecord> truth,
                                 const Lecture& lecture) {
  check_aligned(agent, truth);
  AoiDistances d;
  if (agent.empty()) return d;
  for (std::size_t i = 0; i < agent.size(); ++i) {
    const Slide* slide = lecture.find_slide(agent[i].slide_index);
    if (slide == nullptr) throw AlignmentError(cat("slide ", agent[i].slide_index, " is not in the lecture"));
    d.gaze += pair_distance(agent[i].gaze_aoi, truth[i].gaze_aoi, *slide);
    d.motor += pair_distance(agent[i].motor_aoi, truth[i].motor_aoi, *slide);
  }
  d.gaze /= static_cast<double>(agent.size());
  d.motor /= static_cast<double>(agent.size());
  return d;
}

CognitiveMae cognitive_mae(std::span<const BehaviorRecord> agent, std::span<const BehaviorRecord> truth) {
  check_aligned(agent, truth);
  CognitiveMae m;
  if (agent.empty()) return m;
  for (std::size_t i = 0; i < agent.size(); ++i) {
    for (std::size_t d = 0; d < kCognitiveDims; ++d) {
      m.components[d] += std::abs(agent[i].cognitive.values[d] - truth[i].cognitive.values[d]);
    }
  }
  for (auto& c : m.components) c /= static_cast<double>(agent.size());
  m.overall = std::accumulate(m.components.begin(), m.components.end(), 0.0) / static_cast<double>(kCognitiveDims);
  return m;
}

int choice_similarity(const AnswerRecord& agent, const AnswerRecord& truth) {
  check_same_question(agent, truth);
  return agent.chosen == truth.chosen ? 1 : 0;
}

int accuracy_similarity(const AnswerRecord& agent, const AnswerRecord& truth) {
  check_same_question(agent, truth);
  return agent.is_correct == truth.is_correct ? 1 : 0;
}

ReplayScores replay_scores(const StudentRecord& agent, const StudentRecord& truth, const Lecture& lecture) {
  const auto a = flatten(agent);
  const auto t = flatten(truth);
  ReplayScores s;
  const auto d = gaze_motor_distance(a, t, lecture);
  s.gaze_aoi_distance = d.gaze;
  s.motor_aoi_distance = d.motor;
  s.cognitive = cognitive_mae(a, t);

  std::map<std::string, const AnswerRecord*> truth_answers;
  for (const auto& ans : truth.answers) truth_answers[ans.question_id] = &ans;
  std::vector<double> choice, accuracy;
  for (const auto& ans : agent.answers) {
    auto it = truth_answers.find(ans.question_id);
    if (it == truth_answers.end()) {
      throw AlignmentError(cat("no real answer to question ", ans.question_id, " for ", truth.student_id));
    }
    choice.push_back(choice_similarity(ans, *it->second));
    accuracy.push_back(accuracy_similarity(ans, *it->second));
  }
  if (agent.answers.size() != truth.answers.size()) {
    throw AlignmentError(cat(agent.student_id, " answered ", agent.answers.size(), " questions, the real student ",
                             truth.answers.size()));
  }
  if (!choice.empty()) {
    s.choice_similarity = mean_of(choice);
    s.accuracy_similarity = mean_of(accuracy);
  }
  return s;
}

std::vector<AgentScores> score_cohort(std::span<const StudentRecord> agents, std::span<const StudentRecord> truth,
                                      const Lecture& lecture) {
  std::map<std::string, const StudentRecord*> by_id;
  for (const auto& t : truth) by_id[t.student_id] = &t;
  std::vector<AgentScores> out;
  out.reserve(agents.size());
  for (const auto& a : agents) {
    auto it = by_id.find(a.student_id);
    if (it == by_id.end()) throw AlignmentError(cat("no real record for ", a.student_id));
    out.push_back(AgentScores{a.student_id, replay_scores(a, *it->second, lecture)});
  }
  return out;
}

ReplayScores mean_scores(std::span<const AgentScores> scores) {
  ReplayScores m;
  if (scores.empty()) return m;
  const auto n = static_cast<double>(scores.size());
  std::vector<std::optional<double>> choice, accuracy;
  for (const auto& s : scores) {
    m.gaze_aoi_distance += s.scores.gaze_aoi_distance / n;
    m.motor_aoi_distance += s.scores.motor_aoi_distance / n;
    for (std::size_t d = 0; d < kCognitiveDims; ++d) m.cognitive.components[d] += s.scores.cognitive.components[d] / n;
    m.cognitive.overall += s.scores.cognitive.overall / n;
    choice.push_back(s.scores.choice_similarity);
    accuracy.push_back(s.scores.accuracy_similarity);
  }
  m.choice_similarity = mean_defined(choice);
  m.accuracy_similarity = mean_defined(accuracy);
  return m;
}

// ---- behavior encoders ------------------------------------------------------

double sequence_entropy(std::span<const MaybeAoi> sequence) {
  std::map<AoiId, std::size_t> counts;
  for (const auto& a : sequence) {
    if (a) ++counts[*a];
  }
  return detail::entropy_bits(counts);
}

double following_rate(std::span<const MaybeAoi> sequence, std::span<const AoiId> pace) {
  if (sequence.size() != pace.size()) {
    throw AlignmentError(cat("sequence has ", sequence.size(), " entries, pace ", pace.size()));
  }
  if (sequence.empty()) throw std::invalid_argument("following rate of an empty sequence");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (sequence[i] && *sequence[i] == pace[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sequence.size());
}

double fixing_rate(std::span<const MaybeAoi> sequence) {
  if (sequence.size() < 2) throw std::invalid_argument("fixing rate needs at least two entries");
  std::size_t same = 0;
  for (std::size_t i = 1; i < sequence.size(); ++i) {
    if (sequence[i] && sequence[i - 1] && *sequence[i] == *sequence[i - 1]) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(sequence.size() - 1);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw AlignmentError(cat("pearson inputs differ in length: ", x.size(), " vs ", y.size()));
  if (x.size() < 2) throw AlignmentError("pearson needs at least two observations");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&v](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;

  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

BehaviorSummary summarize_slide(std::span<const BehaviorRecord> behaviors, std::span<const AnswerRecord> answers,
                                const Slide& slide) {
  if (behaviors.size() != slide.transcripts.size()) {
    throw AlignmentError(cat("slide ", slide.index, " has ", slide.transcripts.size(), " transcripts, got ",
                             behaviors.size(), " behaviors"));
  }
  if (behaviors.empty()) throw std::invalid_argument(cat("slide ", slide.index, " has no transcripts"));
  std::vector<MaybeAoi> gaze, motor;
  std::vector<AoiId> pace;
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    gaze.push_back(behaviors[i].gaze_aoi);
    motor.push_back(behaviors[i].motor_aoi);
    pace.push_back(slide.transcripts[i].pace_aoi);
  }

  BehaviorSummary s;
  s.gaze_entropy = sequence_entropy(gaze);
  s.motor_entropy = sequence_entropy(motor);
  s.gaze_following = following_rate(gaze, pace);
  s.motor_following = following_rate(motor, pace);
  if (behaviors.size() >= 2) {
    s.gaze_fixing = fixing_rate(gaze);
    s.motor_fixing = fixing_rate(motor);
  }
  for (const auto& b : behaviors) {
    for (std::size_t d = 0; d < kCognitiveDims; ++d) s.cognitive[d] += b.cognitive.values[d];
  }
  for (auto& c : s.cognitive) c /= static_cast<double>(behaviors.size());

  std::size_t asked = 0, correct = 0;
  for (const auto& a : answers) {
    const bool on_slide = std::any_of(slide.questions.begin(), slide.questions.end(),
                                      [&a](const Question& q) { return q.id == a.question_id; });
    if (!on_slide) continue;
    ++asked;
    if (a.is_correct) ++correct;
  }
  if (asked > 0) s.question_accuracy = static_cast<double>(correct) / static_cast<double>(asked);
  return s;
}

StudentSummary summarize_student(const StudentRecord& record, const Lecture& lecture) {
  if (record.slides.size() != lecture.slides.size()) {
    throw AlignmentError(cat(record.student_id, " covers ", record.slides.size(), " slides, the lecture has ",
                             lecture.slides.size()));
  }
  std::vector<BehaviorSummary> per_slide;
  for (std::size_t k = 0; k < lecture.slides.size(); ++k) {
    per_slide.push_back(summarize_slide(record.slides[k], record.answers, lecture.slides[k]));
  }

  StudentSummary out;
  out.student_id = record.student_id;
  auto& s = out.summary;
  const auto n = static_cast<double>(per_slide.size());
  std::vector<std::optional<double>> gfix, mfix, acc;
  for (const auto& p : per_slide) {
    s.gaze_entropy += p.gaze_entropy / n;
    s.motor_entropy += p.motor_entropy / n;
    s.gaze_following += p.gaze_following / n;
    s.motor_following += p.motor_following / n;
    for (std::size_t d = 0; d < kCognitiveDims; ++d) s.cognitive[d] += p.cognitive[d] / n;
    gfix.push_back(p.gaze_fixing);
    mfix.push_back(p.motor_fixing);
    acc.push_back(p.question_accuracy);
  }
  s.gaze_fixing = mean_defined(gfix);
  s.motor_fixing = mean_defined(mfix);
  s.question_accuracy = mean_defined(acc);
  return out;
}

// ---- correlation ------------------------------------------------------------

namespace {

const std::array<std::string, 7> kBehaviorLabels{"gaze_entropy",   "motor_entropy", "gaze_following",
                                                 "motor_following", "gaze_fixing",   "motor_fixing",
                                                 "question_accuracy"};

std::vector<std::optional<double>> summary_columns(const BehaviorSummary& s) {
  std::vector<std::optional<double>> v{s.gaze_entropy,   s.motor_entropy, s.gaze_following,   s.motor_following,
                                       s.gaze_fixing,    s.motor_fixing,  s.question_accuracy};
  for (double c : s.cognitive) v.emplace_back(c);
  return v;
}

}  // namespace

std::optional<std::size_t> CorrelationMatrix::index_of(std::string_view label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

std::optional<double> CorrelationMatrix::at(std::string_view a, std::string_view b) const {
  const auto i = index_of(a);
  const auto j = index_of(b);
  if (!i || !j) throw std::out_of_range(cat("no correlation column ", !i ? a : b));
  return r[*i][*j];
}

std::vector<std::string> correlation_labels(const CorrelationOptions& options) {
  std::vector<std::string> labels;
  for (auto item : kPersonaItemNames) {
    if (item == "gender" && !options.include_gender) continue;
    labels.push_back(cat("persona_", item));
  }
  labels.emplace_back("persona_aggregate");
  for (const auto& l : kBehaviorLabels) labels.push_back(l);
  for (auto name : kCognitiveNames) labels.push_back(cat(name, "_state"));
  return labels;
}

CorrelationMatrix correlation_matrix(std::span<const StudentRecord> cohort, const Lecture& lecture,
                                     const CorrelationOptions& options) {
  if (cohort.size() < 2) throw std::invalid_argument("correlation needs at least two students");
  CorrelationMatrix m;
  m.labels = correlation_labels(options);
  const std::size_t cols = m.labels.size();

  // columns[c][s]: value of column c for student s
  std::vector<std::vector<std::optional<double>>> columns(cols, std::vector<std::optional<double>>(cohort.size()));
  for (std::size_t s = 0; s < cohort.size(); ++s) {
    const auto& rec = cohort[s];
    if (!rec.persona) throw std::invalid_argument(cat("student ", rec.student_id, " has no persona"));
    const auto enc = encode_persona(*rec.persona);
    std::size_t c = 0;
    for (std::size_t item = 0; item < kPersonaItems; ++item) {
      if (kPersonaItemNames[item] == "gender" && !options.include_gender) continue;
      columns[c++][s] = enc.items[item];
    }
    columns[c++][s] = enc.aggregate;
    for (const auto& v : summary_columns(summarize_student(rec, lecture).summary)) columns[c++][s] = v;
  }

  m.r.assign(cols, std::vector<std::optional<double>>(cols));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = i; j < cols; ++j) {
      x.clear();
      y.clear();
      for (std::size_t s = 0; s < cohort.size(); ++s) {
        if (columns[i][s] && columns[j][s]) {
          x.push_back(*columns[i][s]);
          y.push_back(*columns[j][s]);
        }
      }
      std::optional<double> r;
      if (x.size() >= 2) r = pearson(x, y);
      if (i == j && r) r = 1.0;
      m.r[i][j] = r;
      m.r[j][i] = r;
    }
  }
  return m;
}

// ---- CSV --------------------------------------------------------------------

std::string format_value(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, end);
}

std::vector<std::string> score_metric_names() {
  std::vector<std::string> names{"gaze_aoi_distance", "motor_aoi_distance"};
  for (auto name : kCognitiveNames) names.push_back(cat("mae_", name));
  names.emplace_back("mae_overall");
  names.emplace_back("choice_similarity");
  names.emplace_back("accuracy_similarity");
  return names;
}

std::vector<std::optional<double>> score_values(const ReplayScores& s) {
  std::vector<std::optional<double>> v{s.gaze_aoi_distance, s.motor_aoi_distance};
  for (double c : s.cognitive.components) v.emplace_back(c);
  v.emplace_back(s.cognitive.overall);
  v.push_back(s.choice_similarity);
  v.push_back(s.accuracy_similarity);
  return v;
}

void write_scores_csv(std::ostream& out, std::span<const AgentScores> scores) {
  const auto names = score_metric_names();
  out << "agent,metric,value\n";
  for (const auto& a : scores) {
    const auto values = score_values(a.scores);
    for (std::size_t i = 0; i < names.size(); ++i) out << a.agent_id << ',' << names[i] << ',' << format_value(values[i]) << '\n';
  }
}

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m) {
  out << "label";
  for (const auto& l : m.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.labels[i];
    for (std::size_t j = 0; j < m.size(); ++j) out << ',' << format_value(m.r[i][j]);
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const StudentSummary> rows) {
  out << "student";
  for (const auto& l : kBehaviorLabels) out << ',' << l;
  for (auto name : kCognitiveNames) out << ',' << name << "_state";
  out << '\n';
  for (const auto& row : rows) {
    out << row.student_id;
    for (const auto& v : summary_columns(row.summary)) out << ',' << format_value(v);
    out << '\n';
  }
}

}  // namespace studentsim::metrics
