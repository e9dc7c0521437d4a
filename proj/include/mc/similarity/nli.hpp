// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_SIMILARITY_NLI_HPP_
#define MC_SIMILARITY_NLI_HPP_

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace mc::similarity {

struct NliResponse {
  double entailment = 0.0;
  double neutral = 0.0;
  double contradiction = 0.0;
};

// One request/response exchange. Implementations throw ProviderUnavailable
// for transport failures (retried by nli_entailment) and MalformedResponse
// for replies that cannot be parsed (not retried).
class NliProvider {
 public:
  virtual ~NliProvider() = default;
  virtual NliResponse classify(std::string_view premise, std::string_view hypothesis) const = 0;
};

inline constexpr const char* kNliEndpointEnv = "MORPHOCIRCUIT_NLI_ENDPOINT";

// POST {endpoint}/nli with {premise, hypothesis}; expects
// {entailment, neutral, contradiction}. At most `max_in_flight` requests run
// concurrently across threads sharing the provider.
class HttpNliProvider : public NliProvider {
 public:
  explicit HttpNliProvider(std::string endpoint, int max_in_flight = 4,
                           std::chrono::milliseconds timeout = std::chrono::seconds(10));

  // Reads the endpoint from kNliEndpointEnv; nullopt when unset or empty.
  static std::optional<std::string> endpoint_from_env();

  NliResponse classify(std::string_view premise, std::string_view hypothesis) const override;

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

// Deterministic stand-in. By default entailment is the ROUGE-L F1 of the pair
// and the remainder is split evenly; a fixed response can be set instead.
// The first `failures` calls throw ProviderUnavailable.
class MockNliProvider : public NliProvider {
 public:
  MockNliProvider() = default;
  explicit MockNliProvider(NliResponse fixed) : fixed_(fixed) {}

  void fail_first(int failures) { failures_left_ = failures; }
  int calls() const;

  NliResponse classify(std::string_view premise, std::string_view hypothesis) const override;

 private:
  std::optional<NliResponse> fixed_;
  mutable std::mutex mu_;
  mutable int failures_left_ = 0;
  mutable int calls_ = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};  // doubled after each failure
};

// Entailment probability. Retries transport failures with exponential
// backoff, then throws ProviderUnavailable carrying the attempt log. Throws
// MalformedResponse when the three probabilities do not sum to 1 +- 1e-3 or
// fall outside [0, 1].
double nli_entailment(const NliProvider& provider, std::string_view premise,
                      std::string_view hypothesis, const RetryPolicy& retry = {});

}  // namespace mc::similarity

#endif  // MC_SIMILARITY_NLI_HPP_
