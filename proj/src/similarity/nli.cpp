// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/similarity/nli.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "mc/error.hpp"
#include "mc/similarity/rouge.hpp"

namespace mc::similarity {

namespace {

struct SlotGuard {
  explicit SlotGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
  std::counting_semaphore<>& sem;
};

NliResponse parse_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return {j.at("entailment").get<double>(), j.at("neutral").get<double>(),
            j.at("contradiction").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("NLI response: ") + e.what());
  }
}

}  // namespace

HttpNliProvider::HttpNliProvider(std::string endpoint, int max_in_flight,
                                 std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)),
      timeout_(timeout),
      slots_(std::make_unique<std::counting_semaphore<>>(std::max(1, max_in_flight))) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  if (endpoint_.rfind("http://", 0) != 0) {
    throw InputError("NLI endpoint must start with http:// (got '" + endpoint_ + "')");
  }
}

std::optional<std::string> HttpNliProvider::endpoint_from_env() {
  const char* v = std::getenv(kNliEndpointEnv);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

NliResponse HttpNliProvider::classify(std::string_view premise,
                                      std::string_view hypothesis) const {
  const std::size_t host_start = std::string("http://").size();
  const std::size_t slash = endpoint_.find('/', host_start);
  const std::string base = endpoint_.substr(0, slash);
  const std::string prefix = slash == std::string::npos ? "" : endpoint_.substr(slash);

  SlotGuard guard(*slots_);
  httplib::Client client(base);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  const nlohmann::json body{{"premise", premise}, {"hypothesis", hypothesis}};
  auto res = client.Post(prefix + "/nli", body.dump(), "application/json");
  if (!res) throw ProviderUnavailable("NLI request failed: " + httplib::to_string(res.error()));
  if (res->status >= 500) {
    throw ProviderUnavailable("NLI provider returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw MalformedResponse("NLI provider returned HTTP " + std::to_string(res->status));
  }
  return parse_response(res->body);
}

int MockNliProvider::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

NliResponse MockNliProvider::classify(std::string_view premise,
                                      std::string_view hypothesis) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    if (failures_left_ > 0) {
      --failures_left_;
      throw ProviderUnavailable("mock provider: simulated timeout");
    }
  }
  if (fixed_) return *fixed_;
  const double e = rouge(premise, hypothesis, RougeVariant::RL);
  return {e, (1.0 - e) / 2.0, (1.0 - e) / 2.0};
}

double nli_entailment(const NliProvider& provider, std::string_view premise,
                      std::string_view hypothesis, const RetryPolicy& retry) {
  std::string log;
  auto backoff = retry.initial_backoff;
  const int attempts = std::max(1, retry.attempts);
  for (int a = 1; a <= attempts; ++a) {
    try {
      const NliResponse r = provider.classify(premise, hypothesis);
      const double sum = r.entailment + r.neutral + r.contradiction;
      const bool in_range = r.entailment >= 0.0 && r.entailment <= 1.0 && r.neutral >= 0.0 &&
                            r.neutral <= 1.0 && r.contradiction >= 0.0 &&
                            r.contradiction <= 1.0;
      if (!std::isfinite(sum) || std::abs(sum - 1.0) > 1e-3 || !in_range) {
        throw MalformedResponse("NLI probabilities sum to " + std::to_string(sum));
      }
      return r.entailment;
    } catch (const ProviderUnavailable& e) {
      log += "attempt " + std::to_string(a) + ": " + e.what() + "; ";
      if (a < attempts) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
    }
  }
  throw ProviderUnavailable("NLI provider unavailable after " + std::to_string(attempts) +
                            " attempts (" + log.substr(0, log.size() - 2) + ")");
}

}  // namespace mc::similarity
