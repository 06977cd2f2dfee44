#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "studentsim/llm_provider.hpp"

namespace studentsim::llm {

/// Linear link from persona traits to one emitted cognitive state:
/// value = clamp(intercept + sum(weight * trait) + noise * u), u uniform in [-1, 1].
/// Traits read as 0.5 when the agent has no persona.
struct CognitiveRule {
  CognitiveDim target = CognitiveDim::kWorkload;
  double intercept = 0.5;
  std::vector<std::pair<Trait, double>> weights;
  double noise = 0.05;
};

struct FaultInjection {
  /// Agents whose every request fails transiently, exhausting retries.
  std::set<std::size_t> failing_agents;
  /// Transient failures before the first success of every request.
  int transient_failures = 0;
  /// Unparseable replies for the first N prompts of every step.
  int invalid_replies = 0;
};

/// Deterministic reply rule of the mock provider. The reply is a pure function
/// of (agent seed, persona, slide, transcript position, prompt hash, attempt).
struct MockPolicy {
  std::vector<CognitiveRule> rules;
  FaultInjection faults;
  /// Replaces the built-in rule when set. Receives the request and the transport attempt.
  std::function<std::string(const ChatRequest&, int)> script;

  /// Persona-coupled defaults: curiosity tracks the curiosity trait, workload
  /// falls with smartness and prior knowledge, focus and engagement follow
  /// focus, attitude and interest.
  static MockPolicy standard();
};

/// Builds the reply the standard rule would give to a request with a step context.
[[nodiscard]] std::string mock_reply(const MockPolicy& policy, const ChatRequest& request);

class MockTransport final : public Transport {
 public:
  explicit MockTransport(MockPolicy policy = MockPolicy::standard());
  TransportResult send(const ChatRequest& request, int attempt) override;
  [[nodiscard]] std::string identity() const override { return "mock"; }
  [[nodiscard]] const MockPolicy& policy() const { return policy_; }

 private:
  MockPolicy policy_;
};

/// Provider factory for the two configured kinds. `mock` is consulted only for
/// kind "mock". Without an explicit clock, mock providers run on a simulated
/// clock and remote providers on the steady clock.
[[nodiscard]] std::unique_ptr<Provider> make_provider(const ProviderConfig& config,
                                                      MockPolicy mock = MockPolicy::standard(),
                                                      std::shared_ptr<Clock> clock = nullptr);

}  // namespace studentsim::llm
