#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "repofind/http.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include "repofind/core.hpp"
#include "repofind/text.hpp"

namespace repofind {

namespace {

std::string find_header(const Headers& headers, std::string_view name) {
    for (const auto& [k, v] : headers) {
        if (k.size() == name.size() &&
            std::equal(k.begin(), k.end(), name.begin(), [](char a, char b) {
                return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
            }))
            return v;
    }
    return {};
}

}  // namespace

std::string HttpRequest::header(std::string_view name) const { return find_header(headers, name); }
std::string HttpResponse::header(std::string_view name) const { return find_header(headers, name); }

// ---------------------------------------------------------------------------

struct HttplibTransport::Impl {
    std::string base_path;  // path prefix of the base URL, without trailing slash
    std::string token;
    std::unique_ptr<httplib::Client> client;
    std::mutex mu;  // httplib::Client is not safe for concurrent use
};

HttplibTransport::HttplibTransport(std::string base_url, std::string bearer_token, std::chrono::seconds timeout)
    : impl_(std::make_unique<Impl>()) {
    // Split "scheme://host:port/prefix" into the client origin and a path prefix.
    std::string origin = base_url;
    const auto scheme_end = base_url.find("://");
    const auto path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        origin = base_url.substr(0, path_start);
        impl_->base_path = base_url.substr(path_start);
        while (!impl_->base_path.empty() && impl_->base_path.back() == '/') impl_->base_path.pop_back();
    }
    impl_->token = std::move(bearer_token);
    impl_->client = std::make_unique<httplib::Client>(origin);
    impl_->client->set_tcp_nodelay(true);
    impl_->client->set_connection_timeout(timeout);
    impl_->client->set_read_timeout(timeout);
    impl_->client->set_write_timeout(timeout);
    impl_->client->set_keep_alive(true);
}

HttplibTransport::~HttplibTransport() = default;

HttpResponse HttplibTransport::send(const HttpRequest& request) {
    httplib::Headers headers(request.headers.begin(), request.headers.end());
    if (!impl_->token.empty()) headers.emplace("Authorization", "Bearer " + impl_->token);
    if (!headers.count("User-Agent")) headers.emplace("User-Agent", "repofind");
    const std::string target = impl_->base_path + request.target;

    std::lock_guard lock(impl_->mu);
    httplib::Result res = request.method == "POST"
                              ? impl_->client->Post(target, headers, request.body, "application/json")
                              : impl_->client->Get(target, headers);
    if (!res) throw NetworkError(request.method + " " + request.target + ": " + httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    out.headers.insert(res->headers.begin(), res->headers.end());
    return out;
}

// ---------------------------------------------------------------------------

Clock::time_point SystemClock::now() { return std::chrono::system_clock::now(); }

void SystemClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

SystemClock& system_clock() {
    static SystemClock clock;
    return clock;
}

ManualClock::ManualClock(time_point start) : now_(start) {}

Clock::time_point ManualClock::now() {
    std::lock_guard lock(mu_);
    return now_;
}

void ManualClock::sleep_until(time_point t) {
    std::lock_guard lock(mu_);
    if (t > now_) {
        slept_ += std::chrono::duration_cast<std::chrono::milliseconds>(t - now_);
        now_ = t;
    }
}

void ManualClock::advance(std::chrono::milliseconds d) {
    std::lock_guard lock(mu_);
    now_ += d;
}

std::chrono::milliseconds ManualClock::total_slept() const {
    std::lock_guard lock(mu_);
    return slept_;
}

// ---------------------------------------------------------------------------

RateBudget::RateBudget(Clock& clock, Config config)
    : clock_(clock), config_(config), remaining_(config.limit_per_window), reset_at_(clock.now() + config.window) {
    if (config_.limit_per_window <= 0) throw ConfigError("rate budget limit must be positive");
}

void RateBudget::acquire() {
    std::lock_guard lock(mu_);
    for (;;) {
        auto now = clock_.now();
        if (now >= reset_at_) {
            remaining_ = config_.limit_per_window;
            reset_at_ = now + config_.window;
        }
        if (remaining_ == 0) {
            clock_.sleep_until(reset_at_);
            continue;
        }
        if (last_issue_ && now < *last_issue_ + config_.min_interval) {
            clock_.sleep_until(*last_issue_ + config_.min_interval);
            continue;
        }
        --remaining_;
        last_issue_ = now;
        return;
    }
}

void RateBudget::observe(int remaining, Clock::time_point reset_at) {
    std::lock_guard lock(mu_);
    if (reset_at <= clock_.now()) return;  // the reported window is already over
    remaining_ = std::max(0, std::min(remaining, remaining_));
    reset_at_ = reset_at;
}

int RateBudget::remaining() const {
    std::lock_guard lock(mu_);
    return remaining_;
}

Clock::time_point RateBudget::reset_at() const {
    std::lock_guard lock(mu_);
    return reset_at_;
}

// ---------------------------------------------------------------------------

void RunLog::event(std::string_view kind, nlohmann::json fields) {
    fields["event"] = kind;
    std::lock_guard lock(mu_);
    if (sink_) *sink_ << fields.dump() << '\n';
    entries_.push_back(std::move(fields));
}

void RunLog::warning(std::string_view kind, const std::string& message, nlohmann::json fields) {
    fields["level"] = "warning";
    fields["message"] = message;
    {
        std::lock_guard lock(mu_);
        warnings_.push_back(message);
    }
    event(kind, std::move(fields));
}

std::vector<std::string> RunLog::warnings() const {
    std::lock_guard lock(mu_);
    return warnings_;
}

std::vector<nlohmann::json> RunLog::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

// ---------------------------------------------------------------------------

ApiClient::ApiClient(HttpTransport& transport, RateBudget& budget, RetryPolicy retry, RunLog* log)
    : transport_(transport), budget_(budget), retry_(retry), log_(log) {}

HttpResponse ApiClient::get(const std::string& target) {
    HttpRequest req;
    req.target = target;
    req.headers.emplace("Accept", "application/json");
    return send(std::move(req));
}

HttpResponse ApiClient::post_json(const std::string& target, const nlohmann::json& body) {
    HttpRequest req;
    req.method = "POST";
    req.target = target;
    req.body = body.dump();
    req.headers.emplace("Content-Type", "application/json");
    return send(std::move(req));
}

namespace {

bool retryable(int status) { return status == 403 || status == 429 || status >= 500; }

std::optional<long long> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

}  // namespace

HttpResponse ApiClient::send(HttpRequest request) {
    Clock& clock = budget_.clock();
    std::string last_error;
    int last_status = 0;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        budget_.acquire();
        std::optional<HttpResponse> response;
        try {
            response = transport_.send(request);
        } catch (const NetworkError& e) {
            last_error = e.what();
            last_status = 0;
        }

        if (response) {
            const auto remaining = parse_int(response->header("X-RateLimit-Remaining"));
            const auto reset = parse_int(response->header("X-RateLimit-Reset"));
            if (remaining && reset)
                budget_.observe(static_cast<int>(*remaining), Clock::time_point{std::chrono::seconds(*reset)});
            if (log_)
                log_->event("request", {{"method", request.method}, {"target", request.target},
                                        {"status", response->status}, {"attempt", attempt}});
            if (!retryable(response->status)) return std::move(*response);
            last_status = response->status;
            last_error = "HTTP " + std::to_string(response->status);
        } else if (log_) {
            log_->event("request", {{"method", request.method}, {"target", request.target},
                                    {"error", last_error}, {"attempt", attempt}});
        }
        if (attempt == retry_.max_attempts) break;

        auto delay = retry_.base_delay * (1LL << (attempt - 1));
        Clock::time_point wake = clock.now() + std::chrono::duration_cast<std::chrono::milliseconds>(delay);
        if (response) {
            if (auto after = parse_int(response->header("Retry-After")))
                wake = std::max<Clock::time_point>(wake, clock.now() + std::chrono::seconds(*after));
            if (response->header("X-RateLimit-Remaining") == "0")
                if (auto reset = parse_int(response->header("X-RateLimit-Reset")))
                    wake = std::max<Clock::time_point>(wake, Clock::time_point{std::chrono::seconds(*reset)});
        }
        clock.sleep_until(wake);
    }
    const std::string what = request.method + " " + request.target + " failed after " +
                             std::to_string(retry_.max_attempts) + " attempts: " + last_error;
    if (last_status == 403 || last_status == 429) throw RateLimitError(what);
    throw NetworkError(what);
}

ParsedTarget parse_target(std::string_view target) {
    ParsedTarget out;
    const auto q = target.find('?');
    out.path = std::string(target.substr(0, q));
    if (q == std::string_view::npos) return out;
    for (const auto& pair : text::split(target.substr(q + 1), '&')) {
        if (pair.empty()) continue;
        const auto eq = pair.find('=');
        if (eq == std::string::npos) out.params[text::url_decode(pair)] = "";
        else out.params[text::url_decode(pair.substr(0, eq))] = text::url_decode(pair.substr(eq + 1));
    }
    return out;
}

}  // namespace repofind
