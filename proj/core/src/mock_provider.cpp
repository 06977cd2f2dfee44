#include "studentsim/mock_provider.hpp"

#include <algorithm>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "studentsim/hashing.hpp"

namespace studentsim {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace studentsim

namespace studentsim::llm {

using nlohmann::json;

namespace {

/// Counter-based stream of uniforms keyed by a base hash.
class Draws {
 public:
  explicit Draws(std::uint64_t base) : base_(base) {}
  double next() { return unit_from_hash(splitmix64(base_ + 0x9e3779b97f4a7c15ULL * ++counter_)); }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

double trait_value(const std::optional<PersonaProfile>& p, Trait t) {
  if (!p) return 0.5;
  return p->trait(t) ? 1.0 : 0.0;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

AoiId pick(const std::vector<Aoi>& aois, double u) {
  const auto i = std::min(aois.size() - 1, static_cast<std::size_t>(u * static_cast<double>(aois.size())));
  return aois[i].id;
}

// Emitted values are rounded so replies look like model output.
double round3(double v) { return static_cast<double>(static_cast<long long>(v * 1000.0 + 0.5)) / 1000.0; }

}  // namespace

MockPolicy MockPolicy::standard() {
  MockPolicy p;
  using enum CognitiveDim;
  p.rules = {
      {kWorkload, 0.75, {{Trait::kSmartness, -0.35}, {Trait::kPriorKnowledge, -0.2}}, 0.05},
      {kCuriosity, 0.05, {{Trait::kCuriosity, 0.9}}, 0.05},
      {kValidFocus, 0.35, {{Trait::kFocus, 0.5}}, 0.05},
      {kCourseFollowing, 0.25, {{Trait::kCompliance, 0.35}, {Trait::kFocus, 0.2}}, 0.05},
      {kEngagement, 0.3, {{Trait::kAttitude, 0.3}, {Trait::kInterest, 0.3}}, 0.05},
      {kConfusion, 0.6, {{Trait::kSmartness, -0.3}, {Trait::kPriorKnowledge, -0.2}}, 0.05},
  };
  return p;
}

std::string mock_reply(const MockPolicy& policy, const ChatRequest& request) {
  if (!request.context) return "mock reply " + hex64(fnv1a64(request.user_text));
  const StepContext& ctx = *request.context;
  const Slide& slide = ctx.slide;
  const auto& persona = ctx.persona;
  auto x = [&persona](Trait t) { return trait_value(persona, t); };

  Draws draws(ctx.agent_seed ^ splitmix64(static_cast<std::uint64_t>(slide.index)) ^ fnv1a64(request.user_text));

  const double attentive =
      std::clamp(0.25 + 0.25 * x(Trait::kFocus) + 0.2 * x(Trait::kCompliance) + 0.15 * x(Trait::kInterest), 0.0, 0.95);

  json transcripts = json::array();
  std::optional<AoiId> previous_gaze;
  for (const auto& t : slide.transcripts) {
    AoiId gaze = 0;
    const double u0 = draws.next(), u1 = draws.next(), u2 = draws.next();
    if (u0 < attentive) {
      gaze = t.pace_aoi;
    } else if (previous_gaze && u1 < 0.5) {
      gaze = *previous_gaze;
    } else {
      gaze = pick(slide.aois, u2);
    }
    previous_gaze = gaze;

    AoiId motor = 0;
    const double u3 = draws.next(), u4 = draws.next(), u5 = draws.next();
    if (u3 < 0.6) {
      motor = gaze;
    } else if (u4 < 0.3 + 0.3 * x(Trait::kCompliance)) {
      motor = t.pace_aoi;
    } else {
      motor = pick(slide.aois, u5);
    }

    json entry{{"transcript", t.index}, {"gaze_aoi", gaze}, {"motor_aoi", motor}};
    for (std::size_t d = 0; d < kCognitiveDims; ++d) {
      const CognitiveRule* rule = nullptr;
      for (const auto& r : policy.rules) {
        if (static_cast<std::size_t>(r.target) == d) rule = &r;
      }
      double v = 0.5;
      double noise = 0.05;
      if (rule != nullptr) {
        v = rule->intercept;
        for (const auto& [trait, w] : rule->weights) v += w * x(trait);
        noise = rule->noise;
      }
      v += noise * (2.0 * draws.next() - 1.0);
      entry[std::string(kCognitiveNames[d])] = round3(clamp01(v));
    }
    transcripts.push_back(std::move(entry));
  }

  const double p_correct = std::clamp(0.25 + 0.3 * x(Trait::kExamPerformance) + 0.2 * x(Trait::kSmartness) +
                                          0.1 * x(Trait::kPriorKnowledge) + 0.1 * x(Trait::kAttitude),
                                      0.0, 0.95);
  json answers = json::array();
  for (const auto& q : slide.questions) {
    Choice c = q.correct;
    if (draws.next() >= p_correct) {
      std::vector<Choice> wrong;
      for (auto option : kAllChoices) {
        if (option != q.correct) wrong.push_back(option);
      }
      c = wrong[std::min<std::size_t>(2, static_cast<std::size_t>(draws.next() * 3.0))];
    }
    answers.push_back(json{{"question_id", q.id}, {"choice", std::string(1, to_char(c))}});
  }

  std::string reasoning = "Given my persona";
  if (persona) {
    reasoning += persona->trait(Trait::kCuriosity) ? ", I explore the slide widely" : ", I stay with what is asked";
    reasoning += persona->trait(Trait::kSmartness) ? " and pick up the material quickly" : " and need more effort";
  }
  reasoning += "; my past gaze and engagement suggest how closely I follow the teacher.";

  const json reply{{"reasoning", reasoning}, {"transcripts", std::move(transcripts)}, {"answers", std::move(answers)}};
  return "Reflection first, then the simulated actions.\n" + reply.dump();
}

MockTransport::MockTransport(MockPolicy policy) : policy_(std::move(policy)) {}

TransportResult MockTransport::send(const ChatRequest& request, int attempt) {
  const auto& faults = policy_.faults;
  if (request.context && faults.failing_agents.count(request.context->agent_index)) {
    return {TransportStatus::kTransient, {}, "injected permanent failure", {}};
  }
  if (attempt <= faults.transient_failures) return {TransportStatus::kTransient, {}, "injected transient failure", {}};

  std::string text;
  if (request.context && request.context->parse_attempt < faults.invalid_replies) {
    text = "I would rather describe my feelings in prose.";
  } else if (policy_.script) {
    text = policy_.script(request, attempt);
  } else {
    text = mock_reply(policy_, request);
  }
  const Usage usage{static_cast<long>((request.system_text.size() + request.user_text.size()) / 4),
                    static_cast<long>(text.size() / 4)};
  return {TransportStatus::kOk, std::move(text), {}, usage};
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config, MockPolicy mock, std::shared_ptr<Clock> clock) {
  if (config.kind == "mock") {
    // Mock runs never wait on wall time; backoff and rate limits advance a simulated clock.
    if (!clock) clock = std::make_shared<SimulatedClock>();
    return std::make_unique<Provider>(std::make_unique<MockTransport>(std::move(mock)), config.retry,
                                      config.requests_per_minute, std::move(clock));
  }
  if (config.kind == "remote") {
    if (!clock) clock = std::make_shared<SteadyClock>();
    return std::make_unique<Provider>(std::make_unique<HttpTransport>(config), config.retry,
                                      config.requests_per_minute, std::move(clock));
  }
  throw std::invalid_argument("provider.kind must be 'remote' or 'mock', got '" + config.kind + "'");
}

}  // namespace studentsim::llm
