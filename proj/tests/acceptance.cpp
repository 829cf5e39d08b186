// Acceptance run: one PASS/FAIL line per primary criterion, tolerances fixed
// below. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "repofind/http_server.hpp"
#include "repofind/ingest.hpp"
#include "repofind/insights.hpp"
#include "repofind/label_service.hpp"
#include "repofind/llm.hpp"
#include "repofind/mock.hpp"
#include "repofind/pipeline.hpp"
#include "repofind/svm.hpp"

using namespace repofind;
using Wall = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(Wall::time_point start) {
    return std::chrono::duration<double>(Wall::now() - start).count();
}

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// -- criteria ---------------------------------------------------------------------

Outcome query_generator() {
    Outcome o;
    const auto start = Wall::now();
    const auto profiles = default_institution_profiles();
    o.require(profiles.size() == 10, "expected 10 default profiles, got " + std::to_string(profiles.size()));
    const SearchAttribute attrs[] = {SearchAttribute::name, SearchAttribute::description, SearchAttribute::readme,
                                     SearchAttribute::topics};
    for (const auto& p : profiles) {
        const auto qs = generate_queries(p);
        o.require(qs.size() == 17, p.id + ": " + std::to_string(qs.size()) + " queries");
        if (qs.size() != 17) continue;
        const std::string keywords[] = {p.name, p.acronym, p.domain, p.alternates.at(0)};
        std::set<std::pair<std::string, SearchAttribute>> want, got;
        for (const auto& k : keywords)
            for (auto a : attrs) want.insert({k, a});
        for (std::size_t i = 0; i < 16; ++i) got.insert({qs[i].keyword, qs[i].attribute});
        o.require(got == want, p.id + ": keyword x attribute grid differs");
        o.require(qs[16].attribute == SearchAttribute::email && qs[16].keyword == p.domain, p.id + ": email query");
    }
    const double t = seconds_since(start);
    o.require(t < 1.0, "took " + fmt(t) + " s");
    if (o.pass) o.detail = "10 profiles x 17 queries, " + fmt(t) + " s";
    return o;
}

Outcome sbc_oracle() {
    Outcome o;
    const auto start = Wall::now();
    const auto p = fixture::profile("ucsc");
    std::set<std::tuple<sbc::Component, std::string, sbc::Criterion>> covered;
    bool capped = false;
    for (const auto& f : oracle::fixture_set(200, 2024)) {
        const auto* org = f.org ? &*f.org : nullptr;
        const auto got = sbc::score_repository(f.repo, org, f.top2, p);
        const auto want = oracle::oracle_score(f.repo, org, f.top2, p);
        o.require(got.total == want.total(), f.repo.repo_id + ": total " + fmt(got.total, 6) + " vs " + fmt(want.total(), 6));
        o.require(oracle::hit_keys(got) == want.hits, f.repo.repo_id + ": hit sets differ");
        for (const auto& [c, a, k, rank] : want.hits) covered.insert({c, a, k});
        capped = capped || (want.hundredths > 100 && got.total == 1.0);
    }
    auto r = fixture::repo("o/cap");
    r.readme_text = "Developed at UC Santa Cruz";
    OrgRecord org;
    org.email = "info@ucsc.edu";
    const auto cap = sbc::score_repository(r, &org, {}, p);
    o.require(cap.total == 1.0 && std::abs(cap.raw_sum - 1.2) < 1e-12, "min(1.2, 1) case gave " + fmt(cap.total));
    o.require(covered.size() == oracle::table_cells().size(),
              "covered " + std::to_string(covered.size()) + " of " + std::to_string(oracle::table_cells().size()) + " cells");
    o.require(capped, "fixture has no capped repo");
    const double t = seconds_since(start);
    o.require(t < 5.0, "took " + fmt(t) + " s");
    if (o.pass) o.detail = "200 repos, " + std::to_string(covered.size()) + "/17 cells, cap 1.2 -> 1.0, " + fmt(t) + " s";
    return o;
}

Outcome auc_youden() {
    Outcome o;
    const auto start = Wall::now();
    std::mt19937_64 rng(12345);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto set = oracle::random_set(rng);
        const double auc = eval::roc_auc(set).auc;
        worst = std::max(worst, std::abs(auc - oracle::pair_count_auc(set)));
        const auto [t, j] = eval::optimal_threshold(set);
        const auto [want_t, want_j] = oracle::exhaustive_youden(set);
        o.require(t == want_t, "set " + std::to_string(i) + ": threshold " + fmt(t, 6) + " vs " + fmt(want_t, 6));
    }
    o.require(worst <= 1e-9, "AUC error " + std::to_string(worst));
    const double t = seconds_since(start);
    o.require(t < 30.0, "took " + fmt(t) + " s");
    if (o.pass) {
        std::ostringstream d;
        d << "1000 sets, max AUC error " << worst << ", thresholds exact, " << fmt(t) << " s";
        o.detail = d.str();
    }
    return o;
}

Outcome cost_rows() {
    Outcome o;
    const auto svm = eval::estimate_cost("svm", 2900, 0, {0.00002, 0.0}, 52000);
    const auto g35 = eval::estimate_cost("gpt-3.5", 4500, 100, {0.0005, 0.0015}, 52000);
    const auto g4o = eval::estimate_cost("gpt-4o", 4500, 100, {0.005, 0.02}, 52000);
    o.require(svm.input_tokens == 725, "2900 chars -> " + std::to_string(svm.input_tokens) + " tokens");
    o.require(std::abs(g35.input_cost_per_item - 0.00056) <= 0.000005,
              "gpt-3.5 input per item " + fmt(g35.input_cost_per_item, 7));
    o.require(std::abs(g35.total_cost - 36.92) <= 0.02 * 36.92, "gpt-3.5 total " + fmt(g35.total_cost, 2));
    o.require(std::abs(g4o.total_cost - 396.76) <= 0.01 * 396.76, "gpt-4o total " + fmt(g4o.total_cost, 2));
    o.require(std::abs(svm.total_cost - 0.754) <= 0.02 * 0.754, "svm total " + fmt(svm.total_cost, 4));
    if (o.pass)
        o.detail = "725 tokens; gpt-3.5 $" + fmt(g35.input_cost_per_item, 7) + "/item, $" + fmt(g35.total_cost, 2) +
                   "; gpt-4o $" + fmt(g4o.total_cost, 2) + "; svm $" + fmt(svm.total_cost, 4);
    return o;
}

/// Serves `handler` on a loopback port for the lifetime of the object.
struct LocalServer {
    explicit LocalServer(HttpServer::Handler handler) : server(std::move(handler)) {
        server.bind("127.0.0.1", 0);
        server.start();
    }
    ~LocalServer() { server.stop(); }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(server.port()); }
    HttpServer server;
};

eval::EvalReport end_to_end_run(const LocalServer& mock_server, const mock::Corpus& corpus, Outcome& o) {
    const auto profile = fixture::profile("ucsc");
    Store store(":memory:");
    HttplibTransport transport(mock_server.base(), "acceptance-token");
    RateBudget budget(system_clock(), {});
    RunLog log;
    ApiClient api(transport, budget, {}, &log);
    GitHubClient github(api, {}, &log);

    const auto found = pipeline::discover(store, github, profile, &log);
    o.require(found.unique_repos == 300, "discover stored " + std::to_string(found.unique_repos) + " repos");
    pipeline::enrich_contributors(store, github, {}, &log);
    pipeline::enrich_orgs(store, github, {}, &log);
    pipeline::classify_sbc(store, profile, sbc::ScoreWeightTable::defaults());

    // Scripted labeler: asks the label service for the next repo and answers with ground truth.
    std::map<std::string, int> truth;
    for (const auto& [id, label] : corpus.truth("ucsc")) truth[id] = label;
    LabelService labels(store);
    LocalServer label_server([&](const HttpRequest& r) { return labels.handle(r); });
    HttplibTransport ui(label_server.base());
    int posted = 0;
    for (;;) {
        const auto next = ui.send({"GET", "/api/next?institution=ucsc", "", {}});
        if (next.status == 204) break;
        if (next.status != 200) {
            o.require(false, "label service answered " + std::to_string(next.status));
            break;
        }
        const std::string id = nlohmann::json::parse(next.body)["repo"]["repo_id"];
        const nlohmann::json body{{"repo_id", id}, {"institution_id", "ucsc"}, {"label", truth.at(id)},
                                  {"labeler", "oracle"}};
        const auto r = ui.send({"POST", "/api/label", body.dump(), {{"Content-Type", "application/json"}}});
        o.require(r.status == 201, "label POST answered " + std::to_string(r.status));
        ++posted;
    }
    o.require(posted == 300, "labeled " + std::to_string(posted) + " repos");

    EmbeddingClient embeddings(api, "mock-embed");
    pipeline::TrainOptions train;
    train.n = 150;
    train.params.seed = 42;
    const auto model = pipeline::train(store, "ucsc", embeddings, train);
    pipeline::classify_svm(store, profile, model, embeddings);
    return pipeline::evaluate(store, "ucsc", ClassifierKind::svm, {50, 42});
}

Outcome end_to_end() {
    Outcome o;
    const auto start = Wall::now();
    try {
        const auto corpus = mock::synthetic_corpus(fixture::profile("ucsc"), 7, 300);
        mock::MockServices services(corpus, {}, 64);
        LocalServer mock_server([&](const HttpRequest& r) { return services.handle(r); });
        const auto a = end_to_end_run(mock_server, corpus, o);
        const auto b = end_to_end_run(mock_server, corpus, o);
        o.require(a.n_pos == 50 && a.n_neg == 50, "test set " + std::to_string(a.n_pos) + "/" + std::to_string(a.n_neg));
        o.require(a.auc >= 0.95, "AUC " + fmt(a.auc));
        o.require(a == b, "EvalReports differ between runs");
        const double t = seconds_since(start);
        o.require(t < 300.0, "took " + fmt(t, 1) + " s");
        if (o.pass) o.detail = "300 repos over HTTP, AUC " + fmt(a.auc) + ", two runs identical, " + fmt(t, 1) + " s";
    } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    return o;
}

Outcome llm_parser_and_cap() {
    Outcome o;
    for (int i = 0; i <= 100; ++i) {
        try {
            const auto v = llm::parse_verdict(llm::render_verdict(i / 100.0, "x"));
            o.require(fmt(v.probability, 2) == fmt(i / 100.0, 2), "grid value " + fmt(i / 100.0, 2));
        } catch (const std::exception& e) {
            o.require(false, "grid value " + fmt(i / 100.0, 2) + ": " + e.what());
        }
    }
    int crashes = 0, accepted = 0;
    for (const auto& s : oracle::fuzz_corpus(10000, 10000)) {
        try {
            const auto v = llm::parse_verdict(s);
            if (!(v.probability >= 0.0 && v.probability <= 1.0) || v.explanation.empty()) ++crashes;
            ++accepted;
        } catch (const llm::FormatError&) {
        } catch (...) {
            ++crashes;
        }
    }
    o.require(crashes == 0, std::to_string(crashes) + " fuzz cases crashed or broke the contract");

    mock::MockGitHub github(mock::keyword_corpus("capword", 1200));
    FunctionTransport transport([&](const HttpRequest& r) { return github.handle(r); });
    ManualClock clock;
    RateBudget budget(clock, {});
    RunLog log;
    ApiClient api(transport, budget, {}, &log);
    GitHubClient client(api, {}, &log);
    const auto result = client.run_search(
        {"cap", "capword", SearchAttribute::name, render_query(SearchAttribute::name, "capword")});
    std::set<std::string> unique;
    for (const auto& it : result.items) unique.insert(it.repo_id);
    o.require(result.items.size() == 1000 && unique.size() == 1000,
              "cap fixture recorded " + std::to_string(result.items.size()) + " results");
    const auto warnings = log.warnings();
    o.require(warnings.size() == 1 && result.truncated, std::to_string(warnings.size()) + " truncation warnings");
    o.require(!warnings.empty() && warnings.front().find("1200") != std::string::npos, "warning does not name the total");
    if (o.pass)
        o.detail = "101 grid values, 10000 fuzz cases (" + std::to_string(accepted) +
                   " accepted, 0 crashes), cap 1000 + 1 warning";
    return o;
}

Outcome svm_gradient_and_fit() {
    Outcome o;
    std::mt19937_64 rng(20);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<svm::LabeledVector> data;
    for (int i = 0; i < 20; ++i) data.push_back({"p" + std::to_string(i), {g(rng), g(rng), g(rng)}, i % 2});
    const double C = 0.7, h = 1e-6;
    double worst = 0.0;
    int points = 0;
    while (points < 10) {
        std::vector<double> w{g(rng), g(rng), g(rng)};
        const double b = g(rng);
        bool near_kink = false;
        for (const auto& x : data) {
            double f = b;
            for (int t = 0; t < 3; ++t) f += w[t] * x.values[t];
            near_kink = near_kink || std::abs(1.0 - (x.label ? 1 : -1) * f) < 1e-3;
        }
        if (near_kink) continue;
        ++points;
        const auto grad = svm::subgradient(w, b, data, C);
        for (int k = 0; k < 4; ++k) {
            auto wp = w, wm = w;
            double bp = b, bm = b;
            if (k < 3) wp[k] += h, wm[k] -= h;
            else bp += h, bm -= h;
            const double fd = (svm::objective(wp, bp, data, C) - svm::objective(wm, bm, data, C)) / (2 * h);
            worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
        }
    }
    o.require(worst <= 1e-5, "finite-difference relative error " + std::to_string(worst));

    const std::vector<svm::LabeledVector> toy{{"a", {1, 1}, 1}, {"b", {2, 2}, 1}, {"c", {-1, -1}, 0}, {"d", {-2, -2}, 0}};
    const auto model = svm::train(toy, {}, "toy");
    int correct = 0;
    for (const auto& x : toy) correct += (svm::decision_value(model, x.values) > 0) == (x.label == 1);
    o.require(correct == 4, "separable fixture " + std::to_string(correct) + "/4");
    if (o.pass) {
        std::ostringstream d;
        d << "20 points, 10 probes, max relative error " << worst << ", separable fixture 4/4";
        o.detail = d.str();
    }
    return o;
}

Outcome insight_tallies() {
    Outcome o;
    const auto repos = oracle::random_repos(500, 77);
    std::map<std::string, std::int64_t> langs, lics;
    for (const auto& r : repos) {
        ++langs[r.primary_language.empty() ? "none" : r.primary_language];
        ++lics[r.license_id.empty() ? "NONE" : r.license_id];
    }
    auto check = [&](const std::vector<insights::Bucket>& got, const std::map<std::string, std::int64_t>& tally,
                     const std::string& what) {
        std::vector<std::string> order;
        for (const auto& [k, v] : tally) order.push_back(k);
        std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) { return tally.at(a) > tally.at(b); });
        const auto pct = oracle::hamilton(tally, order);
        o.require(got.size() == order.size(), what + ": bucket count");
        for (std::size_t i = 0; i < std::min(got.size(), order.size()); ++i)
            o.require(got[i].key == order[i] && got[i].count == tally.at(order[i]) && got[i].percent == pct.at(order[i]),
                      what + ": bucket " + order[i]);
    };
    check(insights::language_distribution(repos), langs, "language");
    check(insights::license_distribution(repos), lics, "license");
    const auto flags = insights::community_standards_report(repos);
    const std::vector<bool CommunityFlags::*> fields{
        &CommunityFlags::has_readme,       &CommunityFlags::has_license,         &CommunityFlags::has_code_of_conduct,
        &CommunityFlags::has_contributing, &CommunityFlags::has_security_policy, &CommunityFlags::has_issue_template,
        &CommunityFlags::has_pr_template,  &CommunityFlags::has_description};
    o.require(flags.size() == fields.size(), "community rows");
    for (std::size_t i = 0; i < std::min(flags.size(), fields.size()); ++i) {
        std::int64_t n = 0;
        for (const auto& r : repos) n += r.community.*fields[i];
        o.require(flags[i].count == n && flags[i].percent == std::round(n * 1000.0 / 500.0) / 10.0,
                  "community flag " + flags[i].flag);
    }
    o.require(insights::rate_percent(39, 72) == 54.2, "72/39 -> " + insights::format_percent(insights::rate_percent(39, 72)));
    o.require(insights::rate_percent(3891, 7190) == 54.1, "7190/3891 rate");
    o.require(!insights::rate_percent(0, 0).has_value(), "0/0 rate");
    if (o.pass) o.detail = "500 repos: languages, licenses, 8 community flags exact; 39/72 -> 54.2%";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"query generator composition", query_generator},
        {"score-based classifier vs brute-force scorer", sbc_oracle},
        {"AUC vs pair counting, Youden vs exhaustive search", auc_youden},
        {"cost estimator rows", cost_rows},
        {"end-to-end on mock services", end_to_end},
        {"LLM reply parser and search result cap", llm_parser_and_cap},
        {"SVM subgradient and separable fit", svm_gradient_and_fit},
        {"insight report tallies", insight_tallies},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "/" << criteria.size() << "] " << criteria[i].first
                  << ": " << o.detail << std::endl;
    }
    return failed;
}
