// repofind: discover, enrich, classify, label and report on institution-
// affiliated GitHub repositories. Subcommands share one SQLite store.
//
// Exit codes: 0 ok, 1 configuration/usage/data, 2 network, 3 store.

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "repofind/embedding.hpp"
#include "repofind/evaluation.hpp"
#include "repofind/http_server.hpp"
#include "repofind/ingest.hpp"
#include "repofind/label_service.hpp"
#include "repofind/llm.hpp"
#include "repofind/pipeline.hpp"
#include "repofind/sbc.hpp"
#include "repofind/store.hpp"
#include "repofind/svm.hpp"
#include "repofind/text.hpp"

namespace rf = repofind;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitNetwork = 2;
constexpr int kExitStore = 3;

std::string env(const char* name, const std::string& fallback = {}) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

std::string require_env(const char* name, const char* purpose) {
    auto v = env(name);
    if (v.empty()) throw rf::ConfigError(std::string("environment variable ") + name + " is not set (" + purpose + ")");
    return v;
}

struct Globals {
    std::string store_path;
    std::string config_path;
    std::string log_path;
    bool verbose = false;
};

struct Context {
    explicit Context(const Globals& g) : globals(g) {
        if (!g.log_path.empty()) {
            log_file.open(g.log_path, std::ios::app);
            if (!log_file) throw rf::IoError("cannot open log file " + g.log_path);
            log = std::make_unique<rf::RunLog>(&log_file);
        } else {
            log = std::make_unique<rf::RunLog>(g.verbose ? &std::cerr : nullptr);
        }
    }

    std::string config_document() const {
        if (globals.config_path.empty()) return std::string(rf::default_config_document());
        std::ifstream in(globals.config_path);
        if (!in) throw rf::ConfigError("cannot read config file " + globals.config_path);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
    std::vector<rf::InstitutionProfile> profiles() const { return rf::load_institution_profiles(config_document()); }

    rf::Store& store() {
        if (!store_) store_ = std::make_unique<rf::Store>(globals.store_path);
        return *store_;
    }

    Globals globals;
    std::ofstream log_file;
    std::unique_ptr<rf::RunLog> log;

private:
    std::unique_ptr<rf::Store> store_;
};

/// Transport, budget and API client for one external service.
struct Service {
    Service(const std::string& base, const std::string& token, rf::RateBudget::Config budget_config, rf::RunLog* log)
        : transport(base, token), budget(rf::system_clock(), budget_config), api(transport, budget, {}, log) {}

    rf::HttplibTransport transport;
    rf::RateBudget budget;
    rf::ApiClient api;
};

std::unique_ptr<Service> github_service(Context& ctx) {
    const auto token = require_env("GITHUB_TOKEN", "GitHub API token");
    return std::make_unique<Service>(env("REPOFIND_GITHUB_API", "https://api.github.com"), token,
                                     rf::RateBudget::Config{}, ctx.log.get());
}

std::unique_ptr<Service> embedding_service(Context& ctx) {
    const auto key = require_env("REPOFIND_EMBED_KEY", "embeddings API key");
    return std::make_unique<Service>(env("REPOFIND_EMBED_BASE", "https://api.openai.com"), key,
                                     rf::RateBudget::Config{}, ctx.log.get());
}

std::unique_ptr<Service> llm_service(Context& ctx) {
    const auto key = require_env("REPOFIND_LLM_KEY", "chat completions API key");
    return std::make_unique<Service>(env("REPOFIND_LLM_BASE", "https://api.openai.com"), key,
                                     rf::RateBudget::Config{}, ctx.log.get());
}

std::vector<rf::InstitutionProfile> select_profiles(const Context& ctx, const std::vector<std::string>& ids) {
    const auto all = ctx.profiles();
    if (ids.size() == 1 && ids.front() == "all") return all;
    std::vector<rf::InstitutionProfile> out;
    for (const auto& id : ids) out.push_back(rf::find_profile(all, id));
    return out;
}

void write_output(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw rf::IoError("cannot write " + path);
    out << body;
    if (!out) throw rf::IoError("cannot write " + path);
}

std::string default_model_path(const std::string& institution_id) { return "repofind-svm-" + institution_id + ".json"; }

void print_warnings(const rf::RunLog& log) {
    for (const auto& w : log.warnings()) std::cerr << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------

int serve(rf::Store& store, const std::string& host, int port, std::uint64_t seed) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    rf::LabelService service(store, {env("REPOFIND_LABEL_TOKEN"), seed});
    rf::HttpServer server([&](const rf::HttpRequest& r) { return service.handle(r); });
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
    std::cout << "stopped" << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Find and classify institution-affiliated GitHub repositories"};
    app.require_subcommand(1);
    Globals g;
    g.store_path = env("REPOFIND_STORE", "repofind.db");
    app.add_option("--store", g.store_path, "SQLite store path (env REPOFIND_STORE)");
    app.add_option("--config", g.config_path, "institution profiles YAML (default: built-in profiles)");
    app.add_option("--log", g.log_path, "append JSON-lines run log to this file");
    app.add_flag("-v,--verbose", g.verbose, "write the run log to stderr");

    // discover
    auto* discover = app.add_subcommand("discover", "search, enrich and store repositories");
    std::vector<std::string> d_inst;
    bool d_slicing = false;
    discover->add_option("--institution", d_inst, "institution id (repeatable, or 'all')")->required();
    discover->add_flag("--date-slicing", d_slicing, "split capped queries into created-date windows");

    // enrich
    auto* enrich = app.add_subcommand("enrich", "fetch contributors or owning organizations");
    std::string e_phase;
    std::optional<std::int64_t> e_limit;
    enrich->add_option("--phase", e_phase)->required()->check(CLI::IsMember({"contributors", "orgs"}));
    enrich->add_option("--limit", e_limit, "process at most this many items");

    // classify
    auto* classify = app.add_subcommand("classify", "write predictions for an institution");
    std::string c_method, c_inst, c_model, c_embed_model = "text-embedding-3-small";
    std::optional<std::int64_t> c_limit;
    classify->add_option("--method", c_method)->required()->check(CLI::IsMember({"sbc", "svm", "llm"}));
    classify->add_option("--institution", c_inst)->required();
    classify->add_option("--model", c_model, "svm: model file; llm: chat model name (default gpt-4o)");
    classify->add_option("--embedding-model", c_embed_model, "embedding model for svm");
    classify->add_option("--limit", c_limit, "classify at most this many repositories");

    // train
    auto* train = app.add_subcommand("train", "fit the embedding SVM on labeled repositories");
    std::string t_inst, t_out, t_embed_model = "text-embedding-3-small";
    std::size_t t_n = 200;
    std::uint64_t t_seed = 42;
    double t_c = 1.0;
    train->add_option("--institution", t_inst)->required();
    train->add_option("--n", t_n, "training sample size")->capture_default_str();
    train->add_option("--seed", t_seed)->capture_default_str();
    train->add_option("--C", t_c, "SVM regularization")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--embedding-model", t_embed_model)->capture_default_str();
    train->add_option("--out", t_out, "model file (default repofind-svm-<institution>.json)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a classifier on a balanced labeled test set");
    std::string v_inst, v_classifier, v_out, v_roc;
    std::uint64_t v_seed = 42;
    std::size_t v_n = 50;
    evaluate->add_option("--institution", v_inst)->required();
    evaluate->add_option("--classifier", v_classifier)->required()->check(CLI::IsMember({"sbc", "svm", "llm"}));
    evaluate->add_option("--seed", v_seed)->capture_default_str();
    evaluate->add_option("--n-per-class", v_n)->capture_default_str();
    evaluate->add_option("--out", v_out, "write the EvalReport JSON here");
    evaluate->add_option("--roc-csv", v_roc, "write ROC points as CSV here");

    // report
    auto* report = app.add_subcommand("report", "affiliation rates and repository insights");
    std::vector<std::string> r_inst;
    std::string r_classifier = "llm", r_format = "text", r_out;
    std::optional<double> r_threshold;
    report->add_option("--institution", r_inst, "institution ids (default: all in the store)");
    report->add_option("--classifier", r_classifier)->capture_default_str()->check(CLI::IsMember({"sbc", "svm", "llm"}));
    report->add_option("--threshold", r_threshold, "probability threshold (default: optimal from evaluate, else 0.5)")
        ->check(CLI::Range(0.0, 1.0));
    report->add_option("--format", r_format)->capture_default_str()->check(CLI::IsMember({"json", "text", "csv"}));
    report->add_option("--out", r_out);

    // cost
    auto* cost = app.add_subcommand("cost", "estimate classification cost for a number of repositories");
    std::string k_model;
    double k_chars = 0, k_in = 0, k_outp = 0;
    std::int64_t k_out_tokens = 0, k_n = 0;
    std::optional<double> k_seconds;
    cost->add_option("--model", k_model)->required();
    cost->add_option("--avg-chars", k_chars)->required()->check(CLI::NonNegativeNumber);
    cost->add_option("--output-tokens", k_out_tokens)->capture_default_str();
    cost->add_option("--input-price", k_in, "USD per 1k input tokens")->required();
    cost->add_option("--output-price", k_outp, "USD per 1k output tokens")->capture_default_str();
    cost->add_option("--n", k_n, "number of repositories")->required();
    cost->add_option("--seconds-per-item", k_seconds);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the labeling service");
    int s_port = 8765;
    std::string s_host = "127.0.0.1";
    std::uint64_t s_seed = 42;
    serve_cmd->add_option("--port", s_port, "0 picks a free port")->capture_default_str();
    serve_cmd->add_option("--host", s_host)->capture_default_str();
    serve_cmd->add_option("--seed", s_seed, "seed of the random review order")->capture_default_str();

    // export / import
    auto* exp = app.add_subcommand("export", "write a table as CSV or JSON lines");
    auto* imp = app.add_subcommand("import", "load a table exported by `export`");
    std::string x_table, x_format = "csv", x_path;
    for (auto* sub : {exp, imp}) {
        sub->add_option("--table", x_table)
            ->required()
            ->check(CLI::IsMember({"repos", "contributors", "orgs", "predictions", "labels"}));
        sub->add_option("--format", x_format)->capture_default_str()->check(CLI::IsMember({"csv", "jsonl"}));
    }
    exp->add_option("--out", x_path, "destination file (default stdout)");
    imp->add_option("--in", x_path, "source file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        Context ctx(g);
        if (discover->parsed()) {
            const auto profiles = select_profiles(ctx, d_inst);
            auto gh = github_service(ctx);
            rf::IngestOptions opts;
            opts.date_slicing = d_slicing;
            auto& store = ctx.store();
            rf::GitHubClient client(gh->api, opts, ctx.log.get(),
                                    [&](const std::string& key, const std::string& body) {
                                        store.archive_payload(key, body);
                                    });
            for (const auto& p : profiles) std::cout << rf::pipeline::to_text(rf::pipeline::discover(store, client, p, ctx.log.get()));
        } else if (enrich->parsed()) {
            auto& store = ctx.store();
            auto gh = github_service(ctx);
            rf::GitHubClient client(gh->api, {}, ctx.log.get());
            const auto s = e_phase == "contributors" ? rf::pipeline::enrich_contributors(store, client, e_limit, ctx.log.get())
                                                     : rf::pipeline::enrich_orgs(store, client, e_limit, ctx.log.get());
            std::cout << rf::pipeline::to_text(s);
        } else if (classify->parsed()) {
            const auto profile = rf::find_profile(ctx.profiles(), c_inst);
            rf::pipeline::ClassifySummary s;
            if (c_method == "sbc") {
                const auto weights = rf::sbc::ScoreWeightTable::from_config(ctx.config_document());
                s = rf::pipeline::classify_sbc(ctx.store(), profile, weights, c_limit);
            } else if (c_method == "svm") {
                const auto path = c_model.empty() ? default_model_path(c_inst) : c_model;
                const auto model = rf::svm::load_model(path);
                auto svc = embedding_service(ctx);
                rf::EmbeddingClient embeddings(svc->api, model.model_tag);
                s = rf::pipeline::classify_svm(ctx.store(), profile, model, embeddings, c_limit);
            } else {
                rf::llm::ChatParams params;
                if (!c_model.empty()) params.model = c_model;
                auto svc = llm_service(ctx);
                rf::llm::ChatClient chat(svc->api, params);
                s = rf::pipeline::classify_llm(ctx.store(), profile, chat, params, c_limit, ctx.log.get());
                std::cout << "tokens: " << chat.prompt_tokens() << " prompt, " << chat.completion_tokens()
                          << " completion\n";
            }
            std::cout << rf::pipeline::to_text(s);
        } else if (train->parsed()) {
            auto svc = embedding_service(ctx);
            rf::EmbeddingClient embeddings(svc->api, t_embed_model);
            rf::pipeline::TrainOptions opts;
            opts.n = t_n;
            opts.params.seed = t_seed;
            opts.params.C = t_c;
            const auto model = rf::pipeline::train(ctx.store(), t_inst, embeddings, opts);
            const auto path = t_out.empty() ? default_model_path(t_inst) : t_out;
            rf::svm::save_model(model, path);
            std::cout << "trained on " << model.manifest.n_pos + model.manifest.n_neg << " repositories ("
                      << model.manifest.n_pos << " affiliated, " << model.manifest.n_neg << " not), "
                      << model.manifest.folds << "-fold calibration A=" << model.calibration.A
                      << " B=" << model.calibration.B << "\nmodel written to " << path << '\n';
        } else if (evaluate->parsed()) {
            const auto r = rf::pipeline::evaluate(ctx.store(), v_inst, rf::classifier_from_string(v_classifier),
                                                  {v_n, v_seed});
            std::cout << rf::eval::metrics_table({r});
            if (!v_out.empty()) write_output(v_out, rf::eval::to_json(r).dump(2) + "\n");
            if (!v_roc.empty()) write_output(v_roc, rf::eval::roc_csv(r.roc));
        } else if (report->parsed()) {
            rf::pipeline::ReportOptions opts;
            opts.classifier = rf::classifier_from_string(r_classifier);
            opts.institutions = r_inst;
            opts.threshold = r_threshold;
            const auto r = rf::pipeline::report(ctx.store(), opts);
            const std::string body = r_format == "json"  ? rf::insights::to_json(r).dump(2) + "\n"
                                     : r_format == "csv" ? rf::insights::to_csv(r)
                                                         : rf::insights::to_text(r);
            write_output(r_out, body);
        } else if (cost->parsed()) {
            const auto e = rf::eval::estimate_cost(k_model, k_chars, k_out_tokens, {k_in, k_outp}, k_n, k_seconds);
            std::cout << rf::eval::cost_table({e});
        } else if (serve_cmd->parsed()) {
            return serve(ctx.store(), s_host, s_port, s_seed);
        } else if (exp->parsed()) {
            const auto table = rf::table_from_string(x_table);
            const auto format = rf::export_format_from_string(x_format);
            const auto n = x_path.empty() || x_path == "-" ? ctx.store().export_table(table, format, std::cout)
                                                           : ctx.store().export_table(table, format, x_path);
            std::cerr << "exported " << n << " rows\n";
        } else if (imp->parsed()) {
            std::ifstream in(x_path, std::ios::binary);
            if (!in) throw rf::IoError("cannot read " + x_path);
            const auto n = ctx.store().import_table(rf::table_from_string(x_table),
                                                    rf::export_format_from_string(x_format), in);
            std::cout << "imported " << n << " rows\n";
        }
        print_warnings(*ctx.log);
        return 0;
    } catch (const rf::StoreError& e) {
        std::cerr << "store error: " << e.what() << '\n';
        return kExitStore;
    } catch (const rf::NetworkError& e) {
        std::cerr << "network error: " << e.what() << '\n';
        return kExitNetwork;
    } catch (const rf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
