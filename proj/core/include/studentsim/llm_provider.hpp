#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "studentsim/core_model.hpp"
#include "studentsim/persona.hpp"

namespace studentsim::llm {

/// Simulation metadata riding along with a request. Remote transports ignore
/// it; the mock provider derives its replies from it.
struct StepContext {
  std::size_t agent_index = 0;
  std::uint64_t agent_seed = 0;
  std::optional<PersonaProfile> persona;
  Slide slide;
  /// 0 for the first prompt of a step, n for the n-th correction re-prompt.
  int parse_attempt = 0;
};

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string model_name;
  std::optional<StepContext> context;
};

/// Throws std::invalid_argument on empty texts or a negative temperature.
void validate_request(const ChatRequest& request);

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct Completion {
  std::string text;
  int attempts = 1;
  std::optional<Usage> usage;
};

enum class ErrorKind {
  kRetriesExhausted,
  kAuthentication,
  kMalformedReply,
  kRejected,
  kNetworkDisabled,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind);

class ProviderError : public std::runtime_error {
 public:
  ProviderError(ErrorKind kind, int attempts, const std::string& what);
  [[nodiscard]] ErrorKind kind() const { return kind_; }
  [[nodiscard]] int attempts() const { return attempts_; }

 private:
  ErrorKind kind_;
  int attempts_;
};

/// Outcome of a single wire exchange, before any retry decision.
enum class TransportStatus {
  kOk,
  kTransient,  // timeout, 429, 5xx
  kAuthFailure,
  kMalformed,
  kRejected,  // other 4xx
  kNetworkDisabled,
};

struct TransportResult {
  TransportStatus status = TransportStatus::kOk;
  std::string text;
  std::string detail;
  std::optional<Usage> usage;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// `attempt` is 1-based within one Provider::complete call.
  virtual TransportResult send(const ChatRequest& request, int attempt) = 0;
  [[nodiscard]] virtual std::string identity() const = 0;
};

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  using duration = std::chrono::steady_clock::duration;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(duration d) = 0;
};

class SteadyClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
};

/// Time only moves when someone sleeps.
class SimulatedClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
  void advance(duration d);
  [[nodiscard]] duration total_slept() const;

 private:
  mutable std::mutex mu_;
  time_point now_{};
  duration slept_{};
};

/// Sliding-window limiter: no half-open 60 s window ever holds more than
/// `per_minute` acquisitions. Zero disables limiting.
class RateLimiter {
 public:
  RateLimiter(int per_minute, std::shared_ptr<Clock> clock);
  void acquire();
  [[nodiscard]] int per_minute() const { return per_minute_; }

 private:
  int per_minute_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::deque<Clock::time_point> recent_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30'000};

  [[nodiscard]] std::chrono::milliseconds backoff_after(int failed_attempt) const;
};

struct ProviderConfig {
  std::string kind = "mock";  // "remote" | "mock"
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string credential_env = "OPENAI_API_KEY";
  int requests_per_minute = 60;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
};

/// Retrying, rate-limited front end over a transport. Safe to share across threads.
class Provider {
 public:
  Provider(std::unique_ptr<Transport> transport, RetryPolicy retry, int requests_per_minute,
           std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>());

  /// Throws ProviderError; transient failures are retried with exponential backoff.
  Completion complete(const ChatRequest& request);
  [[nodiscard]] std::string identity() const { return transport_->identity(); }
  [[nodiscard]] const RetryPolicy& retry_policy() const { return retry_; }

 private:
  std::unique_ptr<Transport> transport_;
  RetryPolicy retry_;
  std::shared_ptr<Clock> clock_;
  RateLimiter limiter_;
};

/// OpenAI-compatible chat-completions client. Reads the credential from the
/// environment on every send; refuses to send when NO_NETWORK=1.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(ProviderConfig config);
  TransportResult send(const ChatRequest& request, int attempt) override;
  [[nodiscard]] std::string identity() const override;

  /// Request body for the wire; exposed for tests.
  [[nodiscard]] static std::string request_body(const ChatRequest& request);
  /// Maps an HTTP status and body to a transport result.
  [[nodiscard]] static TransportResult interpret_reply(int status, const std::string& body);

 private:
  ProviderConfig config_;
};

[[nodiscard]] bool network_disabled();

// ---- structured output ------------------------------------------------------

/// What a slide step must return.
struct ActionSchema {
  std::size_t transcript_count = 0;
  std::vector<AoiId> aoi_ids;
  std::vector<std::string> question_ids;
};

[[nodiscard]] ActionSchema schema_for(const Slide& slide);

struct TranscriptAction {
  AoiId gaze_aoi = 1;
  AoiId motor_aoi = 1;
  CognitiveStateVector cognitive;
};

struct SlideAction {
  std::string reasoning;
  std::vector<TranscriptAction> transcripts;
  std::vector<std::pair<std::string, Choice>> answers;  // schema question order
};

struct ParseFailure {
  std::string message;
};

using ParseResult = std::variant<SlideAction, ParseFailure>;

/// First balanced `{...}` span that parses as a JSON object, skipping braces
/// inside string literals.
[[nodiscard]] std::optional<std::string_view> extract_first_json_object(std::string_view text);

/// Extracts and validates the first JSON object of a reply. Never throws;
/// failures name the first violated field.
[[nodiscard]] ParseResult parse_structured(std::string_view response, const ActionSchema& schema);

}  // namespace studentsim::llm
