#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "repofind/http_server.hpp"

#include <thread>

#include "repofind/core.hpp"

namespace repofind {

struct HttpServer::Impl {
    httplib::Server server;
    std::thread thread;
    bool bound = false;
};

HttpServer::HttpServer(Handler handler) : impl_(std::make_unique<Impl>()) {
    auto dispatch = [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
        HttpRequest r;
        r.method = req.method;
        r.target = req.target;
        r.body = req.body;
        r.headers.insert(req.headers.begin(), req.headers.end());
        HttpResponse out;
        try {
            out = handler(r);
        } catch (const std::exception& e) {
            out.status = 500;
            out.body = nlohmann::json{{"error", e.what()}}.dump();
            out.headers.emplace("Content-Type", "application/json");
        }
        res.status = out.status;
        std::string type = out.header("Content-Type");
        for (const auto& [k, v] : out.headers)
            if (k != "Content-Type") res.set_header(k, v);
        res.set_content(out.body, type.empty() ? "text/plain" : type);
    };
    impl_->server.set_tcp_nodelay(true);
    // SO_REUSEADDR only: the default also sets SO_REUSEPORT, which lets a
    // second process bind a port that is already in use.
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });
    impl_->server.Get(".*", dispatch);
    impl_->server.Post(".*", dispatch);
    impl_->server.Put(".*", dispatch);
    impl_->server.Delete(".*", dispatch);
    impl_->server.Options(".*", dispatch);
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        if (port_ < 0) throw NetworkError("cannot bind " + host);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw NetworkError("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
        port_ = port;
    }
    impl_->bound = true;
}

void HttpServer::start() {
    if (!impl_->bound) throw NetworkError("server is not bound");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpServer::run() {
    if (!impl_->bound) throw NetworkError("server is not bound");
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace repofind
