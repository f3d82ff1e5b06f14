#include "structrag/gateway.hpp"

#include "structrag/corpus.hpp"
#include "structrag/text_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>

namespace structrag {

namespace {

constexpr std::array<std::string_view, kStageCount> kStageNames{
    "router", "structurize", "decompose", "extract", "infer", "synthesize", "simulate", "judge"};

}  // namespace

std::string_view to_string(Stage s) noexcept { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> parse_stage(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kStageNames.size(); ++i) {
        if (kStageNames[i] == name) return static_cast<Stage>(i);
    }
    return std::nullopt;
}

ChatRequest ModelSettings::request(Stage tag, std::size_t ordinal, std::string user, std::string system) const {
    ChatRequest r;
    r.model = model;
    r.system = std::move(system);
    r.user = std::move(user);
    r.temperature = temperature;
    r.max_output_tokens = max_output_tokens;
    r.tag = tag;
    r.ordinal = ordinal;
    return r;
}

void ChatRequest::validate() const {
    if (text::trim(user).empty()) throw ConfigError("request.user", "user message is empty");
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw ConfigError("request.temperature", "must be within [0, 2]");
    }
    if (max_output_tokens <= 0) throw ConfigError("request.max_output_tokens", "must be positive");
}

double SteadyClock::now_ms() const {
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

double VirtualClock::now_ms() const {
    std::lock_guard lock(mutex_);
    return static_cast<double>(now_us_) / 1000.0;
}

void VirtualClock::advance(double ms) {
    std::lock_guard lock(mutex_);
    now_us_ += std::llround(std::max(0.0, ms) * 1000.0);
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
    double factor = std::pow(std::max(1.0, multiplier), std::max(0, attempt - 1));
    double ms = static_cast<double>(base_delay.count()) * factor;
    ms = std::min(ms, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

ModelGateway::ModelGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options, std::shared_ptr<Clock> clock)
    : backend_(std::move(backend)), options_(std::move(options)), clock_(std::move(clock)) {
    if (!backend_) throw ConfigError("backend", "no backend configured");
    if (options_.max_in_flight == 0) throw ConfigError("backend.max_in_flight", "must be positive");
    if (options_.retry.max_attempts < 1) throw ConfigError("backend.retry_attempts", "must be at least 1");
    if (!options_.sleeper) options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

void ModelGateway::acquire() {
    std::unique_lock lock(slots_mutex_);
    slots_cv_.wait(lock, [this] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
}

void ModelGateway::release() {
    {
        std::lock_guard lock(slots_mutex_);
        --in_flight_;
    }
    slots_cv_.notify_one();
}

ChatResponse ModelGateway::complete(const ChatRequest& request) {
    request.validate();
    const double start = clock_->now_ms();

    for (int attempt = 1;; ++attempt) {
        acquire();
        try {
            ChatResponse response = backend_->complete(request);
            release();
            if (response.usage.prompt_tokens == 0) {
                response.usage.prompt_tokens = estimate_tokens(request.system) + estimate_tokens(request.user);
            }
            if (response.usage.output_tokens == 0) response.usage.output_tokens = estimate_tokens(response.text);
            response.latency_ms = std::max(0.0, clock_->now_ms() - start);
            return response;
        } catch (const TransientError& e) {
            release();
            if (attempt >= options_.retry.max_attempts) {
                if (e.kind() == TransientError::Kind::rate_limited) throw RateLimited(attempt, e.what());
                throw BackendUnavailable("backend unavailable after " + std::to_string(attempt) +
                                         " attempts: " + e.what());
            }
            options_.sleeper(options_.retry.delay_after(attempt));
        } catch (...) {
            release();
            throw;
        }
    }
}

}  // namespace structrag
