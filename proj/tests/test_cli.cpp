#include <gtest/gtest.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>

#include "repofind/http_server.hpp"

extern char** environ;

namespace fs = std::filesystem;

namespace {

// Child process with stdout and stderr merged into one pipe.
class Process {
public:
    Process(const std::vector<std::string>& args, const std::map<std::string, std::string>& env_set,
            const std::vector<std::string>& env_unset = {}) {
        std::vector<std::string> env;
        for (char** e = environ; *e; ++e) {
            const std::string kv = *e;
            const auto name = kv.substr(0, kv.find('='));
            if (env_set.count(name) || std::find(env_unset.begin(), env_unset.end(), name) != env_unset.end()) continue;
            env.push_back(kv);
        }
        for (const auto& [k, v] : env_set) env.push_back(k + "=" + v);
        std::vector<char*> argv, envp;
        for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        for (const auto& e : env) envp.push_back(const_cast<char*>(e.c_str()));
        envp.push_back(nullptr);

        int fds[2];
        if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, fds[1], 1);
        posix_spawn_file_actions_adddup2(&actions, fds[1], 2);
        posix_spawn_file_actions_addclose(&actions, fds[0]);
        posix_spawn_file_actions_addclose(&actions, fds[1]);
        if (posix_spawn(&pid_, argv[0], &actions, nullptr, argv.data(), envp.data()) != 0)
            throw std::runtime_error("spawn failed: " + args[0]);
        posix_spawn_file_actions_destroy(&actions);
        close(fds[1]);
        fd_ = fds[0];
    }
    ~Process() {
        if (pid_ > 0) {
            kill(pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
        }
        if (fd_ >= 0) close(fd_);
    }

    /// Reads until `needle` appears in the output or the timeout passes.
    bool wait_for(const std::string& needle, std::chrono::seconds timeout = std::chrono::seconds(20)) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (output_.find(needle) == std::string::npos) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0 || !read_some(static_cast<int>(left.count()))) return false;
        }
        return true;
    }

    int wait() {
        while (read_some(-1)) {
        }
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    }

    void signal(int sig) { kill(pid_, sig); }
    const std::string& output() const { return output_; }

private:
    bool read_some(int timeout_ms) {
        pollfd p{fd_, POLLIN, 0};
        if (poll(&p, 1, timeout_ms) <= 0) return false;
        char buf[4096];
        const auto n = read(fd_, buf, sizeof buf);
        if (n <= 0) return false;
        output_.append(buf, static_cast<std::size_t>(n));
        return true;
    }

    pid_t pid_ = -1;
    int fd_ = -1;
    std::string output_;
};

struct Run {
    int code;
    std::string output;
};

Run run(std::vector<std::string> args, const std::map<std::string, std::string>& env = {},
        const std::vector<std::string>& unset = {}) {
    args.insert(args.begin(), REPOFIND_CLI);
    Process p(args, env, unset);
    const int code = p.wait();
    return {code, p.output()};
}

struct TempDir {
    TempDir() : path(fs::temp_directory_path() / ("repofind-cli-" + std::to_string(getpid()) + "-" + std::to_string(n++))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    fs::path path;
    static inline int n = 0;
};

int port_from(const std::string& output) {
    const auto at = output.rfind(':', output.find('\n', output.find("listening on")));
    return std::stoi(output.substr(at + 1));
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.output.find("discover"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"classify", "--method", "magic", "--institution", "ucsc"}).code, 1);
}

TEST(Cli, MissingTokenNamesVariable) {
    TempDir dir;
    const auto r = run({"--store", dir.file("s.db"), "discover", "--institution", "ucsc"}, {}, {"GITHUB_TOKEN"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("GITHUB_TOKEN"), std::string::npos);
}

TEST(Cli, UnknownInstitutionExitsOne) {
    TempDir dir;
    const auto r = run({"--store", dir.file("s.db"), "discover", "--institution", "mit"}, {{"GITHUB_TOKEN", "x"}});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("mit"), std::string::npos);
}

TEST(Cli, MissingModelFileNamesPath) {
    TempDir dir;
    const auto model = dir.file("absent-model.json");
    const auto r = run({"--store", dir.file("s.db"), "classify", "--method", "svm", "--institution", "ucsc", "--model",
                        model},
                       {{"REPOFIND_EMBED_KEY", "k"}});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find(model), std::string::npos);
}

TEST(Cli, StoreThatCannotOpenExitsThree) {
    TempDir dir;
    const auto r = run({"--store", dir.path.string(), "export", "--table", "labels"});
    EXPECT_EQ(r.code, 3);
}

TEST(Cli, UnreachableServiceExitsTwo) {
    TempDir dir;
    const auto r = run({"--store", dir.file("s.db"), "discover", "--institution", "ucsc"},
                       {{"GITHUB_TOKEN", "x"}, {"REPOFIND_GITHUB_API", "http://127.0.0.1:1"}});
    EXPECT_EQ(r.code, 2);
}

TEST(Cli, BusyPortExitsTwo) {
    repofind::HttpServer holder([](const repofind::HttpRequest&) { return repofind::HttpResponse{200, "", {}}; });
    holder.bind("127.0.0.1", 0);
    TempDir dir;
    const auto r = run({"--store", dir.file("s.db"), "serve", "--port", std::to_string(holder.port())});
    EXPECT_EQ(r.code, 2);
}

TEST(Cli, ServeStopsCleanlyOnInterrupt) {
    TempDir dir;
    Process p({REPOFIND_CLI, "--store", dir.file("s.db"), "serve", "--port", "0"}, {});
    ASSERT_TRUE(p.wait_for("listening on")) << p.output();
    p.signal(SIGINT);
    EXPECT_EQ(p.wait(), 0);
    EXPECT_NE(p.output().find("stopped"), std::string::npos);
}

TEST(Cli, CostMatchesEstimator) {
    const auto r = run({"cost", "--model", "gpt-4o", "--avg-chars", "4500", "--output-tokens", "100", "--input-price",
                        "0.005", "--output-price", "0.02", "--n", "52000"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.output.find("1125"), std::string::npos);
    EXPECT_NE(r.output.find("396.50"), std::string::npos) << r.output;
}

TEST(Cli, PipelineAgainstMockServer) {
    Process mock({REPOFIND_MOCK, "--repos", "40", "--port", "0"}, {});
    ASSERT_TRUE(mock.wait_for("listening on")) << mock.output();
    const auto base = "http://127.0.0.1:" + std::to_string(port_from(mock.output()));
    TempDir dir;
    const std::map<std::string, std::string> env{{"GITHUB_TOKEN", "secret-token-value"},
                                                 {"REPOFIND_GITHUB_API", base},
                                                 {"REPOFIND_LLM_BASE", base},
                                                 {"REPOFIND_LLM_KEY", "k"}};
    const auto store = dir.file("s.db");
    const auto log = dir.file("run.jsonl");
    auto step = [&](std::vector<std::string> args) {
        args.insert(args.begin(), {"--store", store, "--log", log});
        const auto r = run(args, env);
        EXPECT_EQ(r.code, 0) << r.output;
        return r.output;
    };
    EXPECT_NE(step({"discover", "--institution", "ucsc"}).find("40"), std::string::npos);
    step({"enrich", "--phase", "contributors"});
    step({"enrich", "--phase", "orgs"});
    step({"classify", "--method", "sbc", "--institution", "ucsc"});
    EXPECT_NE(step({"classify", "--method", "llm", "--institution", "ucsc", "--limit", "5"}).find("tokens:"),
              std::string::npos);
    EXPECT_NE(step({"report", "--classifier", "sbc", "--format", "json"}).find("\"affiliation_rates\""),
              std::string::npos);
    step({"export", "--table", "predictions", "--out", dir.file("p.csv")});
    EXPECT_TRUE(fs::exists(dir.file("p.csv")));

    std::ifstream in(log);
    const std::string logged{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    EXPECT_FALSE(logged.empty());
    EXPECT_EQ(logged.find("secret-token-value"), std::string::npos);
    std::ifstream db(store, std::ios::binary);
    const std::string bytes{std::istreambuf_iterator<char>(db), std::istreambuf_iterator<char>()};
    EXPECT_EQ(bytes.find("secret-token-value"), std::string::npos);
}
