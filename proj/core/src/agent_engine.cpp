#include "studentsim/agent_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "text_util.hpp"

namespace studentsim {

using detail::cat;
using detail::fixed;

// ---- memory -----------------------------------------------------------------

void MemoryStore::remember(const Slide& slide, std::span<const BehaviorRecord> behaviors) {
  if (behaviors.size() != slide.transcripts.size()) {
    throw ValidationError(cat("memory for slide ", slide.index, " needs ", slide.transcripts.size(),
                              " behaviors, got ", behaviors.size()));
  }
  SlideMemory m;
  m.material = slide;
  for (const auto& b : behaviors) {
    if (b.slide_index != slide.index) throw ValidationError(cat("behavior of slide ", b.slide_index, " filed under slide ", slide.index));
    m.gaze.push_back(b.gaze_aoi);
    m.motor.push_back(b.motor_aoi);
    m.cognitive.push_back(b.cognitive);
  }
  last_ = std::move(m);
}

CognitiveStateVector MemoryStore::mean_cognitive() const {
  if (!last_ || last_->cognitive.empty()) return CognitiveStateVector::filled(0.5);
  CognitiveStateVector sum;
  for (const auto& c : last_->cognitive) {
    for (std::size_t d = 0; d < kCognitiveDims; ++d) sum.values[d] += c.values[d];
  }
  for (auto& v : sum.values) v /= static_cast<double>(last_->cognitive.size());
  return sum;
}

// ---- prompting --------------------------------------------------------------

namespace {

std::string aoi_text(const MaybeAoi& a) { return a ? cat("AOI ", *a) : std::string("none (off the slide)"); }

std::string aoi_lines(const Slide& slide) {
  std::string out;
  for (const auto& a : slide.aois) out += cat("  AOI ", a.id, ": ", a.label, "\n");
  return out;
}

std::string transcript_lines(const Slide& slide) {
  std::string out;
  for (const auto& t : slide.transcripts) out += cat("  Transcript ", t.index, " (teacher on AOI ", t.pace_aoi, "): ", t.text, "\n");
  return out;
}

std::string question_lines(const Slide& slide) {
  if (slide.questions.empty()) return "There are no questions on this slide.\n";
  std::string out = "Questions on this slide:\n";
  for (const auto& q : slide.questions) {
    out += cat("  Question ", q.id, ": ", q.stem, "\n");
    for (auto c : kAllChoices) out += cat("    ", to_char(c), ". ", q.choices[static_cast<std::size_t>(to_char(c) - 'A')], "\n");
  }
  return out;
}

std::string cognitive_text(const CognitiveStateVector& c) {
  std::string out;
  for (std::size_t d = 0; d < kCognitiveDims; ++d) {
    if (d > 0) out += ' ';
    out += cat(kCognitiveNames[d], "=", fixed(c.values[d], 2));
  }
  return out;
}

std::string skeleton(const Slide& slide, bool with_reasoning) {
  std::string out = "{";
  if (with_reasoning) out += "\"reasoning\": \"<your reflection>\", ";
  out += "\"transcripts\": [{\"transcript\": 1, \"gaze_aoi\": <AOI id>, \"motor_aoi\": <AOI id>";
  for (auto name : kCognitiveNames) out += cat(", \"", name, "\": <0..1>");
  out += "}";
  if (slide.transcripts.size() > 1) out += ", ... one entry per transcript";
  out += "], \"answers\": [";
  for (std::size_t i = 0; i < slide.questions.size(); ++i) {
    if (i > 0) out += ", ";
    out += cat("{\"question_id\": \"", slide.questions[i].id, "\", \"choice\": \"<A|B|C|D>\"}");
  }
  out += "]}";
  return out;
}

std::string aoi_id_list(const Slide& slide) {
  std::string out;
  for (std::size_t i = 0; i < slide.aois.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(slide.aois[i].id);
  }
  return out;
}

std::string block(std::string_view header, const std::string& body) {
  std::string out(header);
  out += '\n';
  out += body;
  while (!out.empty() && out.back() == '\n') out.pop_back();
  out += '\n';
  return out;
}

}  // namespace

std::string build_demonstration(const MemoryStore& memory, const Ablation& ablation, const PromptTemplates& templates) {
  if (ablation.drop_demonstration || !memory.last()) return {};
  const SlideMemory& m = *memory.last();
  const int k = m.material.index;

  std::string body = render_template(templates.get("demonstration"), {{"previous_slide_index", std::to_string(k)}});
  if (!body.empty() && body.back() != '\n') body += '\n';
  body += cat("Material of slide ", k, ":\n");
  body += aoi_lines(m.material);
  body += transcript_lines(m.material);
  body += cat("Your behaviors on slide ", k, ":\n");
  for (std::size_t i = 0; i < m.material.transcripts.size(); ++i) {
    const int t = m.material.transcripts[i].index;
    if (!ablation.drop_gaze) body += cat("  Transcript ", t, " gaze: ", aoi_text(m.gaze[i]), "\n");
    if (!ablation.drop_motor) body += cat("  Transcript ", t, " motor: ", aoi_text(m.motor[i]), "\n");
    if (!ablation.drop_cognitive) body += cat("  Transcript ", t, " cognitive: ", cognitive_text(m.cognitive[i]), "\n");
  }
  return block(kDemonstrationHeader, body);
}

llm::ChatRequest build_prompt(const std::optional<PersonaProfile>& persona, const Slide& slide, std::size_t slide_count,
                              const MemoryStore& memory, const SimulationConfig& config,
                              const PromptTemplates& templates) {
  const bool priors = config.prior_mode == PriorMode::kCognitivePriors;
  std::string persona_text = memory.persona_text();
  if (persona_text.empty()) {
    persona_text = persona ? render_persona_text(*persona)
                           : "No profile is known for this student; infer their habits from the remembered behaviors.\n";
  }

  std::string user;
  user += block(kPersonaHeader, render_template(templates.get("persona"), {{"persona", persona_text}}));
  user += '\n';
  user += block(kSlideHeader, render_template(templates.get("slide"), {{"slide_index", std::to_string(slide.index)},
                                                                       {"slide_count", std::to_string(slide_count)},
                                                                       {"aois", aoi_lines(slide)},
                                                                       {"transcripts", transcript_lines(slide)},
                                                                       {"questions", question_lines(slide)}}));
  if (auto demo = build_demonstration(memory, config.ablation, templates); !demo.empty()) {
    user += '\n';
    user += demo;
  }
  if (priors) {
    user += '\n';
    user += block(kPriorsHeader, templates.get("priors"));
    user += '\n';
    user += block(kReflectHeader, templates.get("reflect"));
  }
  user += '\n';
  user += block(kSchemaHeader, render_template(templates.get(priors ? "schema_cognitive" : "schema_standard"),
                                               {{"skeleton", skeleton(slide, priors)},
                                                {"transcript_count", std::to_string(slide.transcripts.size())},
                                                {"aoi_ids", aoi_id_list(slide)}}));

  llm::ChatRequest req;
  req.system_text = templates.get("system");
  req.user_text = std::move(user);
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  req.model_name = config.model_name;
  return req;
}

// ---- simulation -------------------------------------------------------------

StepAccounting& StepAccounting::operator+=(const StepAccounting& o) {
  llm_calls += o.llm_calls;
  provider_attempts += o.provider_attempts;
  parse_failures += o.parse_failures;
  prompt_tokens += o.prompt_tokens;
  completion_tokens += o.completion_tokens;
  return *this;
}

StepError::StepError(int slide_index, StepAccounting partial, std::vector<PromptExchange> exchanges,
                     const std::string& what)
    : std::runtime_error(what), slide_index_(slide_index), partial_(partial), exchanges_(std::move(exchanges)) {}

AgentState make_agent(std::string agent_id, std::size_t agent_index, std::uint64_t seed,
                      std::optional<PersonaProfile> persona) {
  AgentState a;
  a.agent_id = std::move(agent_id);
  a.agent_index = agent_index;
  a.seed = seed;
  a.persona = persona;
  a.memory = MemoryStore(persona ? render_persona_text(*persona) : std::string());
  return a;
}

StepOutput fallback_step(const Slide& slide, const MemoryStore& memory) {
  StepOutput out;
  out.slide_index = slide.index;
  out.fallback = true;
  const auto cognitive = memory.mean_cognitive();
  for (const auto& t : slide.transcripts) {
    out.behaviors.push_back(BehaviorRecord{slide.index, t.index, t.pace_aoi, t.pace_aoi, cognitive, true});
  }
  for (const auto& q : slide.questions) {
    auto a = make_answer(q, Choice::A);
    a.fallback = true;
    out.answers.push_back(a);
  }
  return out;
}

StepOutput run_slide_step(const AgentState& agent, const Slide& slide, std::size_t slide_count,
                          const SimulationConfig& config, llm::Provider& provider, const PromptTemplates& templates) {
  llm::ChatRequest base = build_prompt(agent.persona, slide, slide_count, agent.memory, config, templates);
  base.context = llm::StepContext{agent.agent_index, agent.seed, agent.persona, slide, 0};
  const auto schema = llm::schema_for(slide);

  StepAccounting acc;
  std::vector<PromptExchange> exchanges;
  std::string last_response;
  std::string error;

  for (int attempt = 0; attempt <= config.max_parse_retries; ++attempt) {
    llm::ChatRequest req = base;
    if (attempt > 0) {
      req.user_text += '\n';
      req.user_text += block(kCorrectionHeader, render_template(templates.get("correction"), {{"error", error}}));
      req.context->parse_attempt = attempt;
    }

    llm::Completion completion;
    try {
      completion = provider.complete(req);
    } catch (const llm::ProviderError& e) {
      acc.provider_attempts += e.attempts();
      throw StepError(slide.index, acc, std::move(exchanges), cat("slide ", slide.index, ": ", e.what()));
    }
    acc.llm_calls += 1;
    acc.provider_attempts += completion.attempts;
    if (completion.usage) {
      acc.prompt_tokens += completion.usage->prompt_tokens;
      acc.completion_tokens += completion.usage->completion_tokens;
    }
    exchanges.push_back(PromptExchange{slide.index, attempt, req.system_text, req.user_text, completion.text});
    last_response = completion.text;

    auto parsed = llm::parse_structured(completion.text, schema);
    if (auto* action = std::get_if<llm::SlideAction>(&parsed)) {
      StepOutput out;
      out.slide_index = slide.index;
      for (std::size_t i = 0; i < action->transcripts.size(); ++i) {
        const auto& t = action->transcripts[i];
        out.behaviors.push_back(
            BehaviorRecord{slide.index, slide.transcripts[i].index, t.gaze_aoi, t.motor_aoi, t.cognitive, false});
      }
      for (const auto& [qid, choice] : action->answers) {
        auto q = std::find_if(slide.questions.begin(), slide.questions.end(),
                              [&qid](const Question& x) { return x.id == qid; });
        out.answers.push_back(make_answer(*q, choice));
      }
      out.reflection_text = std::move(action->reasoning);
      out.raw_response = std::move(last_response);
      out.accounting = acc;
      out.exchanges = std::move(exchanges);
      return out;
    }
    acc.parse_failures += 1;
    error = std::get<llm::ParseFailure>(parsed).message;
  }

  StepOutput out = fallback_step(slide, agent.memory);
  out.raw_response = std::move(last_response);
  out.accounting = acc;
  out.exchanges = std::move(exchanges);
  return out;
}

std::size_t AgentRun::fallback_steps() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const StepOutput& s) { return s.fallback; }));
}

StudentRecord AgentRun::record() const {
  StudentRecord r;
  r.student_id = agent_id;
  r.persona = persona;
  for (const auto& s : steps) {
    r.slides.push_back(s.behaviors);
    r.answers.insert(r.answers.end(), s.answers.begin(), s.answers.end());
  }
  return r;
}

std::size_t ExperimentResult::failures() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const AgentRun& r) { return !r.ok(); }));
}

std::vector<StudentRecord> ExperimentResult::cohort() const {
  std::vector<StudentRecord> out;
  for (const auto& r : runs) {
    if (r.ok()) out.push_back(r.record());
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

enum class MemorySource { kRealRecord, kOwnOutput };

AgentRun run_agent(AgentState agent, const Lecture& lecture, const StudentRecord* real, const SimulationConfig& config,
                   llm::Provider& provider, const PromptTemplates& templates) {
  AgentRun run;
  run.agent_id = agent.agent_id;
  run.agent_index = agent.agent_index;
  run.seed = agent.seed;
  run.persona = agent.persona;

  for (std::size_t k = 0; k < lecture.slides.size(); ++k) {
    const Slide& slide = lecture.slides[k];
    if (k > 0) {
      const Slide& previous = lecture.slides[k - 1];
      if (real != nullptr) {
        agent.memory.remember(previous, real->slides[k - 1]);
      } else {
        agent.memory.remember(previous, run.steps.back().behaviors);
      }
    }
    try {
      run.steps.push_back(run_slide_step(agent, slide, lecture.slides.size(), config, provider, templates));
      run.totals += run.steps.back().accounting;
    } catch (const StepError& e) {
      run.error = e.what();
      run.totals += e.partial();
      run.failed_exchanges = e.exchanges();
      break;
    }
  }
  return run;
}

std::string agent_label(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "agent_%04zu", index);
  return buf;
}

}  // namespace

ExperimentResult run_experiment1(const Lecture& lecture, std::span<const StudentRecord> real_records,
                                 const SimulationConfig& config, llm::Provider& provider,
                                 const PromptTemplates& templates, std::size_t workers) {
  for (const auto& r : real_records) validate_record(r, lecture);
  ExperimentResult result;
  result.runs.resize(real_records.size());
  parallel_for(real_records.size(), workers, [&](std::size_t i) {
    const auto& real = real_records[i];
    result.runs[i] = run_agent(make_agent(real.student_id, i, agent_seed(config.seed, i), real.persona), lecture,
                               &real, config, provider, templates);
  });
  return result;
}

ExperimentResult run_experiment2(const Lecture& lecture, std::size_t cohort_size, const SimulationConfig& config,
                                 llm::Provider& provider, const PromptTemplates& templates, std::size_t workers) {
  if (cohort_size < 1) throw std::invalid_argument("cohort size must be at least 1");
  ExperimentResult result;
  result.runs.resize(cohort_size);
  parallel_for(cohort_size, workers, [&](std::size_t i) {
    const auto seed = agent_seed(config.seed, i);
    result.runs[i] =
        run_agent(make_agent(agent_label(i), i, seed, sample_persona(seed)), lecture, nullptr, config, provider, templates);
  });
  return result;
}

}  // namespace studentsim
