#pragma once

// Request plumbing shared by the GitHub, embeddings and chat clients:
// a swappable transport, an injectable clock, the shared rate budget and
// the retry policy.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace repofind {

using Headers = std::multimap<std::string, std::string>;

struct HttpRequest {
    std::string method = "GET";
    std::string target;  // path plus encoded query, relative to the transport's base URL
    std::string body;
    Headers headers;

    /// Case-insensitive header lookup; empty when absent.
    std::string header(std::string_view name) const;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    Headers headers;

    /// Case-insensitive header lookup; empty when absent.
    std::string header(std::string_view name) const;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// Throws NetworkError when no response could be obtained.
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Real network transport over cpp-httplib (http and https).
class HttplibTransport final : public HttpTransport {
public:
    /// `bearer_token` is attached as an Authorization header and never logged.
    explicit HttplibTransport(std::string base_url, std::string bearer_token = {},
                              std::chrono::seconds timeout = std::chrono::seconds(60));
    ~HttplibTransport() override;

    HttpResponse send(const HttpRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------

class Clock {
public:
    using time_point = std::chrono::system_clock::time_point;
    virtual ~Clock() = default;
    virtual time_point now() = 0;
    virtual void sleep_until(time_point t) = 0;
};

class SystemClock final : public Clock {
public:
    time_point now() override;
    void sleep_until(time_point t) override;
};

/// Virtual time for tests: sleeping advances the clock instantly.
class ManualClock final : public Clock {
public:
    explicit ManualClock(time_point start = time_point{std::chrono::seconds(1'700'000'000)});
    time_point now() override;
    void sleep_until(time_point t) override;
    void advance(std::chrono::milliseconds d);
    std::chrono::milliseconds total_slept() const;

private:
    mutable std::mutex mu_;
    time_point now_;
    std::chrono::milliseconds slept_{0};
};

SystemClock& system_clock();

// ---------------------------------------------------------------------------

/// Single arbiter for request permission. All workers of a run share one
/// budget; acquire() blocks until a request may be issued.
class RateBudget {
public:
    struct Config {
        int limit_per_window = 5000;
        std::chrono::milliseconds window{std::chrono::hours(1)};
        std::chrono::milliseconds min_interval{0};
    };

    RateBudget(Clock& clock, Config config);

    void acquire();
    /// Feeds X-RateLimit-Remaining / X-RateLimit-Reset style observations back in.
    void observe(int remaining, Clock::time_point reset_at);

    int remaining() const;
    Clock::time_point reset_at() const;
    std::chrono::milliseconds min_interval() const { return config_.min_interval; }
    Clock& clock() { return clock_; }

private:
    Clock& clock_;
    Config config_;
    mutable std::mutex mu_;
    int remaining_;
    Clock::time_point reset_at_;
    std::optional<Clock::time_point> last_issue_;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{2000};
};

// ---------------------------------------------------------------------------

/// Structured run log: one JSON object per line. Warnings are also kept in
/// memory for the run summary.
class RunLog {
public:
    RunLog() = default;
    explicit RunLog(std::ostream* sink) : sink_(sink) {}

    void event(std::string_view kind, nlohmann::json fields = nlohmann::json::object());
    void warning(std::string_view kind, const std::string& message, nlohmann::json fields = nlohmann::json::object());

    std::vector<std::string> warnings() const;
    std::vector<nlohmann::json> entries() const;

private:
    mutable std::mutex mu_;
    std::ostream* sink_ = nullptr;
    std::vector<nlohmann::json> entries_;
    std::vector<std::string> warnings_;
};

/// Transport wrapper that draws from the rate budget before every request and
/// retries 403/429/5xx and transport failures with exponential backoff,
/// honoring Retry-After and X-RateLimit-Reset. Returns the final response for
/// any other status; throws RateLimitError / NetworkError when retries run out.
class ApiClient {
public:
    ApiClient(HttpTransport& transport, RateBudget& budget, RetryPolicy retry = {}, RunLog* log = nullptr);

    HttpResponse get(const std::string& target);
    HttpResponse post_json(const std::string& target, const nlohmann::json& body);
    HttpResponse send(HttpRequest request);

    RateBudget& budget() { return budget_; }
    RunLog* log() { return log_; }

private:
    HttpTransport& transport_;
    RateBudget& budget_;
    RetryPolicy retry_;
    RunLog* log_;
};

/// Transport that dispatches to a handler function, for in-process fakes.
class FunctionTransport final : public HttpTransport {
public:
    using Handler = std::function<HttpResponse(const HttpRequest&)>;
    explicit FunctionTransport(Handler handler) : handler_(std::move(handler)) {}
    HttpResponse send(const HttpRequest& request) override { return handler_(request); }

private:
    Handler handler_;
};

/// Splits "path?a=1&b=2" into path and decoded parameters.
struct ParsedTarget {
    std::string path;
    std::map<std::string, std::string> params;
};
ParsedTarget parse_target(std::string_view target);

}  // namespace repofind
