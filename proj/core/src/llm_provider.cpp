#include "studentsim/llm_provider.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <map>
#include <set>
#include <thread>

#include "text_util.hpp"

namespace studentsim::llm {

using nlohmann::json;
using detail::cat;

void validate_request(const ChatRequest& request) {
  if (request.system_text.empty()) throw std::invalid_argument("chat request has empty system text");
  if (request.user_text.empty()) throw std::invalid_argument("chat request has empty user text");
  if (!(request.temperature >= 0.0)) throw std::invalid_argument("chat request temperature must be >= 0");
  if (request.max_tokens <= 0) throw std::invalid_argument("chat request max_tokens must be positive");
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kRetriesExhausted: return "retries_exhausted";
    case ErrorKind::kAuthentication: return "authentication";
    case ErrorKind::kMalformedReply: return "malformed_reply";
    case ErrorKind::kRejected: return "rejected";
    case ErrorKind::kNetworkDisabled: return "network_disabled";
  }
  return "unknown";
}

ProviderError::ProviderError(ErrorKind kind, int attempts, const std::string& what)
    : std::runtime_error(cat(to_string(kind), " after ", attempts, " attempt(s): ", what)),
      kind_(kind),
      attempts_(attempts) {}

// ---- clocks -------------------------------------------------------------

Clock::time_point SteadyClock::now() { return std::chrono::steady_clock::now(); }
void SteadyClock::sleep_for(duration d) { std::this_thread::sleep_for(d); }

Clock::time_point SimulatedClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void SimulatedClock::sleep_for(duration d) {
  std::lock_guard lock(mu_);
  if (d > duration::zero()) {
    now_ += d;
    slept_ += d;
  }
}

void SimulatedClock::advance(duration d) {
  std::lock_guard lock(mu_);
  now_ += d;
}

Clock::duration SimulatedClock::total_slept() const {
  std::lock_guard lock(mu_);
  return slept_;
}

// ---- rate limiting ----------------------------------------------------------

RateLimiter::RateLimiter(int per_minute, std::shared_ptr<Clock> clock)
    : per_minute_(per_minute), clock_(std::move(clock)) {
  if (per_minute_ < 0) throw std::invalid_argument("requests per minute must be >= 0");
}

void RateLimiter::acquire() {
  if (per_minute_ == 0) return;
  constexpr auto kWindow = std::chrono::seconds(60);
  for (;;) {
    Clock::duration wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = clock_->now();
      while (!recent_.empty() && now - recent_.front() >= kWindow) recent_.pop_front();
      if (recent_.size() < static_cast<std::size_t>(per_minute_)) {
        recent_.push_back(now);
        return;
      }
      wait = recent_.front() + kWindow - now;
    }
    clock_->sleep_for(wait);
  }
}

// ---- provider ---------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::backoff_after(int failed_attempt) const {
  const double scaled = static_cast<double>(base_backoff.count()) * std::pow(multiplier, failed_attempt - 1);
  const double capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

Provider::Provider(std::unique_ptr<Transport> transport, RetryPolicy retry, int requests_per_minute,
                   std::shared_ptr<Clock> clock)
    : transport_(std::move(transport)),
      retry_(retry),
      clock_(std::move(clock)),
      limiter_(requests_per_minute, clock_) {
  if (!transport_) throw std::invalid_argument("provider needs a transport");
  if (retry_.max_attempts < 1) throw std::invalid_argument("retry policy needs max_attempts >= 1");
}

Completion Provider::complete(const ChatRequest& request) {
  validate_request(request);
  std::string last_detail;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    limiter_.acquire();
    TransportResult r = transport_->send(request, attempt);
    switch (r.status) {
      case TransportStatus::kOk: return Completion{std::move(r.text), attempt, r.usage};
      case TransportStatus::kTransient:
        last_detail = r.detail;
        if (attempt < retry_.max_attempts) clock_->sleep_for(retry_.backoff_after(attempt));
        break;
      case TransportStatus::kAuthFailure: throw ProviderError(ErrorKind::kAuthentication, attempt, r.detail);
      case TransportStatus::kMalformed: throw ProviderError(ErrorKind::kMalformedReply, attempt, r.detail);
      case TransportStatus::kRejected: throw ProviderError(ErrorKind::kRejected, attempt, r.detail);
      case TransportStatus::kNetworkDisabled: throw ProviderError(ErrorKind::kNetworkDisabled, attempt, r.detail);
    }
  }
  throw ProviderError(ErrorKind::kRetriesExhausted, retry_.max_attempts, last_detail);
}

// ---- structured output ------------------------------------------------------

ActionSchema schema_for(const Slide& slide) {
  ActionSchema s;
  s.transcript_count = slide.transcripts.size();
  for (const auto& a : slide.aois) s.aoi_ids.push_back(a.id);
  for (const auto& q : slide.questions) s.question_ids.push_back(q.id);
  return s;
}

namespace {

/// Index one past the brace matching `text[open]`, or npos.
std::size_t matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

struct FieldError {
  std::string message;
};

AoiId aoi_field(const json& obj, const std::string& path, const char* key, const std::set<AoiId>& allowed) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FieldError{cat(path, key, ": missing")};
  if (!it->is_number_integer()) throw FieldError{cat(path, key, ": AOI id must be an integer")};
  const auto id = it->get<long long>();
  if (!allowed.count(static_cast<AoiId>(id)) || id != static_cast<AoiId>(id)) {
    throw FieldError{cat(path, key, ": AOI ", id, " is not on this slide")};
  }
  return static_cast<AoiId>(id);
}

double unit_field(const json& obj, const std::string& path, std::string_view key) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) throw FieldError{cat(path, key, ": missing")};
  if (!it->is_number()) throw FieldError{cat(path, key, ": must be a number")};
  const double v = it->get<double>();
  if (!(v >= 0.0 && v <= 1.0)) throw FieldError{cat(path, key, ": value ", it->dump(), " outside [0,1]")};
  return v;
}

TranscriptAction transcript_action(const json& obj, const std::string& path, std::size_t position,
                                   const std::set<AoiId>& allowed) {
  if (!obj.is_object()) throw FieldError{path + ": must be an object"};
  if (auto it = obj.find("transcript"); it != obj.end()) {
    if (!it->is_number_integer() || it->get<long long>() != static_cast<long long>(position + 1)) {
      throw FieldError{cat(path, "transcript: expected ", position + 1)};
    }
  }
  TranscriptAction a;
  a.gaze_aoi = aoi_field(obj, path, "gaze_aoi", allowed);
  a.motor_aoi = aoi_field(obj, path, "motor_aoi", allowed);
  for (std::size_t d = 0; d < kCognitiveDims; ++d) a.cognitive.values[d] = unit_field(obj, path, kCognitiveNames[d]);
  return a;
}

SlideAction slide_action(const json& root, const ActionSchema& schema) {
  const std::set<AoiId> allowed(schema.aoi_ids.begin(), schema.aoi_ids.end());
  SlideAction out;
  if (auto it = root.find("reasoning"); it != root.end()) {
    if (!it->is_string()) throw FieldError{"reasoning: must be a string"};
    out.reasoning = it->get<std::string>();
  }

  auto tr = root.find("transcripts");
  if (tr == root.end() && schema.transcript_count == 1 && root.contains("gaze_aoi")) {
    // Single-transcript slides sometimes come back as one flat object.
    out.transcripts.push_back(transcript_action(root, "", 0, allowed));
  } else {
    if (tr == root.end()) throw FieldError{"transcripts: missing"};
    if (!tr->is_array()) throw FieldError{"transcripts: must be an array"};
    if (tr->size() != schema.transcript_count) {
      throw FieldError{cat("transcripts: expected ", schema.transcript_count, " entries, got ", tr->size())};
    }
    for (std::size_t i = 0; i < tr->size(); ++i) {
      out.transcripts.push_back(transcript_action((*tr)[i], cat("transcripts[", i, "].", ""), i, allowed));
    }
  }

  std::map<std::string, Choice> chosen;
  if (auto an = root.find("answers"); an != root.end()) {
    if (!an->is_array()) throw FieldError{"answers: must be an array"};
    for (std::size_t i = 0; i < an->size(); ++i) {
      const auto& a = (*an)[i];
      const auto path = cat("answers[", i, "].");
      if (!a.is_object()) throw FieldError{path + ": must be an object"};
      auto qid = a.find("question_id");
      if (qid == a.end() || !qid->is_string()) throw FieldError{path + "question_id: missing"};
      const auto id = qid->get<std::string>();
      if (std::find(schema.question_ids.begin(), schema.question_ids.end(), id) == schema.question_ids.end()) {
        throw FieldError{cat(path, "question_id: unknown question '", id, "'")};
      }
      auto ch = a.find("choice");
      if (ch == a.end() || !ch->is_string()) throw FieldError{path + "choice: missing"};
      auto c = choice_from_string(ch->get<std::string>());
      if (!c) throw FieldError{cat(path, "choice: must be one of A, B, C, D (got ", ch->dump(), ")")};
      if (!chosen.emplace(id, *c).second) throw FieldError{cat(path, "question_id: '", id, "' answered twice")};
    }
  }
  for (const auto& id : schema.question_ids) {
    auto it = chosen.find(id);
    if (it == chosen.end()) throw FieldError{cat("answers: no choice for question '", id, "'")};
    out.answers.emplace_back(id, it->second);
  }
  return out;
}

}  // namespace

std::optional<std::string_view> extract_first_json_object(std::string_view text) {
  for (std::size_t open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const std::size_t end = matching_brace(text, open);
    if (end == std::string_view::npos) continue;
    const auto candidate = text.substr(open, end - open);
    const json j = json::parse(candidate, nullptr, /*allow_exceptions=*/false);
    if (!j.is_discarded() && j.is_object()) return candidate;
  }
  return std::nullopt;
}

ParseResult parse_structured(std::string_view response, const ActionSchema& schema) {
  try {
    const auto object = extract_first_json_object(response);
    if (!object) return ParseFailure{"no JSON object found in the reply"};
    const json root = json::parse(*object);
    return slide_action(root, schema);
  } catch (const FieldError& e) {
    return ParseFailure{e.message};
  } catch (const std::exception& e) {
    return ParseFailure{cat("unreadable reply: ", e.what())};
  }
}

}  // namespace studentsim::llm
