#pragma once

#include "structrag/errors.hpp"

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace structrag {

// Closed set of pipeline stages; every model call is labelled with one.
enum class Stage { router, structurize, decompose, extract, infer, synthesize, simulate, judge };

inline constexpr std::size_t kStageCount = 8;

std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;

struct ChatRequest {
    std::string model;
    std::string system;
    std::string user;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    Stage tag = Stage::infer;
    // Deterministic position of this call within its stage (document index,
    // sub-question index, ...). Scripted fixtures are keyed on it.
    std::size_t ordinal = 0;

    // Throws ConfigError when an invariant does not hold.
    void validate() const;
};

// Model name and decoding parameters used for one pipeline stage.
struct ModelSettings {
    std::string model = "default";
    double temperature = 0.0;
    int max_output_tokens = 1024;

    ChatRequest request(Stage tag, std::size_t ordinal, std::string user, std::string system = {}) const;
    bool operator==(const ModelSettings&) const = default;
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t output_tokens = 0;
};

struct ChatResponse {
    std::string text;
    Usage usage;
    double latency_ms = 0.0;
};

class GatewayError : public Error {
public:
    using Error::Error;
};

class BackendUnavailable : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class RateLimited : public GatewayError {
public:
    RateLimited(int attempts, const std::string& detail)
        : GatewayError("rate limited after " + std::to_string(attempts) + " attempts: " + detail),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class MalformedResponse : public GatewayError {
public:
    using GatewayError::GatewayError;
};

// Thrown by backends for failures worth retrying. The gateway converts it
// into BackendUnavailable / RateLimited once attempts are exhausted.
class TransientError : public GatewayError {
public:
    enum class Kind { network, rate_limited, server };

    TransientError(Kind kind, const std::string& detail) : GatewayError(detail), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Must be safe to call concurrently.
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Millisecond time source. Live runs use the steady clock; scripted runs use
// a virtual clock advanced only by simulated model latency, which keeps
// recorded stage timings reproducible.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now_ms() const = 0;
};

class SteadyClock final : public Clock {
public:
    double now_ms() const override;
};

// Counts whole microseconds so that concurrent advances sum exactly,
// whatever their order.
class VirtualClock final : public Clock {
public:
    double now_ms() const override;
    void advance(double ms);

private:
    mutable std::mutex mutex_;
    long long now_us_ = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{30'000};

    // Delay after the given failed attempt (1-based). Non-decreasing in
    // `attempt`.
    std::chrono::milliseconds delay_after(int attempt) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct GatewayOptions {
    RetryPolicy retry;
    std::size_t max_in_flight = 4;
    Sleeper sleeper;  // defaults to std::this_thread::sleep_for
};

// Single seam between pipeline stages and a chat model. Shareable across
// threads; bounds concurrent requests and applies the retry policy.
class ModelGateway {
public:
    ModelGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options = {},
                 std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>());

    ChatResponse complete(const ChatRequest& request);

    const Clock& clock() const noexcept { return *clock_; }
    std::size_t max_in_flight() const noexcept { return options_.max_in_flight; }

private:
    void acquire();
    void release();

    std::shared_ptr<ChatBackend> backend_;
    GatewayOptions options_;
    std::shared_ptr<Clock> clock_;

    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    std::size_t in_flight_ = 0;
};

}  // namespace structrag
