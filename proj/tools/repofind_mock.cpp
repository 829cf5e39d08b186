// repofind-mock: serves the synthetic GitHub, embeddings and chat services
// on localhost so the CLI can run end to end without network access.

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "repofind/http_server.hpp"
#include "repofind/mock.hpp"

namespace rf = repofind;

int main(int argc, char** argv) {
    CLI::App app{"Mock GitHub, embeddings and chat services over a synthetic corpus"};
    std::string institution = "ucsc", config_path, host = "127.0.0.1";
    int port = 8080, result_cap = 1000, garble = 0;
    std::uint64_t seed = 7;
    std::size_t repos = 300, dim = 64;
    app.add_option("--institution", institution, "profile the corpus is planted for")->capture_default_str();
    app.add_option("--config", config_path, "institution profiles YAML (default: built-in)");
    app.add_option("--seed", seed)->capture_default_str();
    app.add_option("--repos", repos)->capture_default_str();
    app.add_option("--result-cap", result_cap)->capture_default_str();
    app.add_option("--dim", dim, "embedding dimension")->capture_default_str();
    app.add_option("--garble", garble, "first N chat replies omit the probability line")->capture_default_str();
    app.add_option("--host", host)->capture_default_str();
    app.add_option("--port", port, "0 picks a free port")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    try {
        const auto profiles = config_path.empty() ? rf::default_institution_profiles()
                                                  : rf::load_institution_profiles_file(config_path);
        rf::mock::GitHubOptions options;
        options.result_cap = result_cap;
        rf::mock::MockServices services(rf::mock::synthetic_corpus(rf::find_profile(profiles, institution), seed, repos),
                                        options, dim, garble);
        rf::HttpServer server([&](const rf::HttpRequest& r) { return services.handle(r); });
        server.bind(host, port);
        std::cout << "listening on http://" << host << ":" << server.port() << std::endl;

        std::atomic<bool> stopping{false};
        std::thread waiter([&] {
            int sig = 0;
            sigwait(&signals, &sig);
            stopping = true;
            server.stop();
        });
        server.run();
        if (!stopping) pthread_kill(waiter.native_handle(), SIGTERM);
        waiter.join();
        return 0;
    } catch (const rf::NetworkError& e) {
        std::cerr << "network error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
