#pragma once

// Minimal HTTP server that forwards every request to a handler function.
// Used by the label service and by the mock services tool and tests.

#include <functional>
#include <memory>
#include <string>

#include "repofind/http.hpp"

namespace repofind {

class HttpServer {
public:
    using Handler = std::function<HttpResponse(const HttpRequest&)>;

    explicit HttpServer(Handler handler);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds `host:port` (port 0 picks a free port). Throws NetworkError when
    /// the address cannot be bound.
    void bind(const std::string& host, int port);
    /// Serves on a background thread until stop().
    void start();
    /// Serves on the calling thread until stop().
    void run();
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace repofind
