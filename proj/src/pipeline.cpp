#include "repofind/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "repofind/text.hpp"

namespace repofind::pipeline {

namespace {

struct RepoContext {
    RepoRecord repo;
    std::optional<OrgRecord> org;
    std::vector<ContributorRecord> top2;

    const OrgRecord* org_ptr() const { return org ? &*org : nullptr; }
};

RepoContext load_context(const Store& store, const std::string& repo_id) {
    auto repo = store.repo(repo_id);
    if (!repo) throw NotFoundError("repository " + repo_id + " is not in the store");
    RepoContext c{std::move(*repo), std::nullopt, store.top_contributors(repo_id, 2)};
    if (c.repo.owner_kind == OwnerKind::organization) c.org = store.org(c.repo.owner_login);
    return c;
}

std::string count_line(const std::string& label, std::int64_t n) { return label + ": " + std::to_string(n) + "\n"; }

}  // namespace

// ---------------------------------------------------------------------------

DiscoverSummary discover(Store& store, GitHubClient& github, const InstitutionProfile& profile, RunLog* log) {
    store.register_institution(profile);
    DiscoverSummary summary;
    summary.institution_id = profile.id;

    std::map<std::string, RepoSummary> merged;
    for (const auto& query : generate_queries(profile)) {
        auto result = github.run_search(query);
        summary.queries.push_back({query, result.total_count, static_cast<std::int64_t>(result.items.size()),
                                   result.truncated, result.windows_searched});
        summary.raw_matches += static_cast<std::int64_t>(result.items.size());
        if (log)
            log->event("query", {{"institution_id", profile.id},
                                 {"q", query.rendered},
                                 {"total_count", result.total_count},
                                 {"retrieved", result.items.size()},
                                 {"truncated", result.truncated}});
        for (auto& item : result.items) {
            auto [it, fresh] = merged.try_emplace(item.repo_id, item);
            if (fresh) continue;
            for (auto& mq : item.matched_queries)
                if (std::find(it->second.matched_queries.begin(), it->second.matched_queries.end(), mq) ==
                    it->second.matched_queries.end())
                    it->second.matched_queries.push_back(mq);
        }
    }

    for (const auto& [repo_id, hit] : merged) {
        if (auto existing = store.repo(repo_id)) {
            existing->matched_queries = hit.matched_queries;
            store.upsert_repo(*existing);
            ++summary.refreshed_repos;
            continue;
        }
        try {
            auto record = github.enrich_repository(hit);
            if (!record) {
                ++summary.vanished;
                continue;
            }
            store.upsert_repo(*record);
            ++summary.new_repos;
        } catch (const NetworkError&) {
            throw;
        } catch (const Error& e) {
            ++summary.failed;
            if (log) log->warning("enrich_failed", repo_id + ": " + e.what(), {{"repo_id", repo_id}});
        }
    }
    summary.unique_repos = store.unique_count(profile.id);
    return summary;
}

std::string to_text(const DiscoverSummary& s) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& q : s.queries)
        rows.push_back({q.query.rendered, std::to_string(q.total_count), std::to_string(q.retrieved),
                        q.truncated ? "yes" : "", q.windows > 1 ? std::to_string(q.windows) : ""});
    std::string out = "Institution " + s.institution_id + ": " + std::to_string(s.queries.size()) + " queries\n";
    out += text::format_table({"Query", "Total", "Retrieved", "Truncated", "Windows"}, rows, {1, 2, 4});
    for (const auto& q : s.queries)
        if (q.truncated)
            out += "warning: query '" + q.query.rendered + "' hit the result cap; " +
                   std::to_string(q.total_count - q.retrieved) + " matches were not retrieved\n";
    out += count_line("raw matches", s.raw_matches);
    out += count_line("unique repositories", s.unique_repos);
    out += count_line("new", s.new_repos);
    out += count_line("refreshed", s.refreshed_repos);
    if (s.vanished) out += count_line("vanished", s.vanished);
    if (s.failed) out += count_line("failed", s.failed);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t cap(std::size_t n, std::optional<std::int64_t> limit) {
    const auto size = static_cast<std::int64_t>(n);
    return limit ? std::clamp<std::int64_t>(*limit, 0, size) : size;
}

}  // namespace

EnrichSummary enrich_contributors(Store& store, GitHubClient& github, std::optional<std::int64_t> limit,
                                  RunLog* log) {
    EnrichSummary s{"contributors"};
    const auto pending = store.repos_missing_contributors();
    s.pending = static_cast<std::int64_t>(pending.size());
    const auto n = cap(pending.size(), limit);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& repo_id = pending[static_cast<std::size_t>(i)];
        try {
            auto contributors = github.fetch_contributors(repo_id);
            store.put_contributors(repo_id, contributors);
            s.records += static_cast<std::int64_t>(contributors.size());
            ++s.done;
        } catch (const StoreError&) {
            throw;
        } catch (const Error& e) {
            ++s.failed;
            if (log) log->warning("contributors_failed", repo_id + ": " + e.what(), {{"repo_id", repo_id}});
        }
    }
    return s;
}

EnrichSummary enrich_orgs(Store& store, GitHubClient& github, std::optional<std::int64_t> limit, RunLog* log) {
    EnrichSummary s{"orgs"};
    const auto pending = store.owners_missing_org();
    s.pending = static_cast<std::int64_t>(pending.size());
    const auto n = cap(pending.size(), limit);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& login = pending[static_cast<std::size_t>(i)];
        try {
            if (auto org = github.fetch_organization(login)) {
                store.put_org(*org);
                ++s.records;
            }
            store.mark_owner_checked(login);
            ++s.done;
        } catch (const StoreError&) {
            throw;
        } catch (const Error& e) {
            ++s.failed;
            if (log) log->warning("org_failed", login + ": " + e.what(), {{"login", login}});
        }
    }
    return s;
}

std::string to_text(const EnrichSummary& s) {
    return "phase " + s.phase + ": " + std::to_string(s.pending) + " pending, " + std::to_string(s.done) +
           " done, " + std::to_string(s.failed) + " failed, " + std::to_string(s.records) + " records written\n";
}

// ---------------------------------------------------------------------------

std::size_t histogram_bin(double p) {
    if (!(p > 0.0)) return 0;
    return std::min<std::size_t>(9, static_cast<std::size_t>(p * 10.0));
}

std::string to_text(const ClassifySummary& s) {
    std::string out = std::string(to_string(s.classifier)) + " for " + s.institution_id + " (" + s.model_tag + ")\n";
    out += count_line("classified", s.classified);
    out += count_line("skipped (already predicted)", s.skipped);
    if (s.flagged) out += count_line("flagged for review", s.flagged);
    const auto peak = std::max<std::int64_t>(1, *std::max_element(s.histogram.begin(), s.histogram.end()));
    for (std::size_t b = 0; b < s.histogram.size(); ++b) {
        char label[32];
        std::snprintf(label, sizeof label, "[%.1f,%.1f%c %6lld ", static_cast<double>(b) / 10.0,
                      static_cast<double>(b + 1) / 10.0, b == 9 ? ']' : ')', static_cast<long long>(s.histogram[b]));
        out += label;
        out += std::string(static_cast<std::size_t>(s.histogram[b] * 40 / peak), '#');
        out += '\n';
    }
    return out;
}

std::string sbc_model_tag(const sbc::ScoreWeightTable& weights) {
    std::string canon;
    for (const auto& [key, w] : weights.entries()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "=%.6f;", w);
        canon += std::string(sbc::to_string(key.component)) + "." + key.attribute + "/" +
                 std::string(sbc::to_string(key.criterion)) + buf;
    }
    return "sbc;weights=" + text::sha256_hex(canon).substr(0, 12);
}

std::string svm_model_tag(const svm::Model& model) {
    return "svm;" + model.model_tag + ";data=" + model.manifest.data_hash.substr(0, 12);
}

std::vector<std::string> unpredicted_repos(const Store& store, const std::string& institution_id,
                                           ClassifierKind classifier, const std::string& model_tag,
                                           std::optional<std::int64_t> limit) {
    std::set<std::string> done;
    for (const auto& p : store.predictions(institution_id, classifier))
        if (p.model_tag == model_tag) done.insert(p.repo_id);
    std::vector<std::string> out;
    for (const auto& id : store.repo_ids(institution_id)) {
        if (limit && static_cast<std::int64_t>(out.size()) >= *limit) break;
        if (!done.count(id)) out.push_back(id);
    }
    return out;
}

namespace {

struct Work {
    ClassifySummary summary;
    std::vector<std::string> todo;
};

Work start(const Store& store, const InstitutionProfile& profile, ClassifierKind kind, std::string model_tag,
           std::optional<std::int64_t> limit) {
    if (!store.has_institution(profile.id))
        throw NotFoundError("institution " + profile.id + " has not been discovered in this store");
    Work w;
    w.summary.institution_id = profile.id;
    w.summary.classifier = kind;
    w.summary.model_tag = std::move(model_tag);
    w.todo = unpredicted_repos(store, profile.id, kind, w.summary.model_tag, {});
    w.summary.skipped = store.unique_count(profile.id) - static_cast<std::int64_t>(w.todo.size());
    w.todo.resize(static_cast<std::size_t>(cap(w.todo.size(), limit)));
    return w;
}

void record(Store& store, ClassifySummary& s, const std::string& repo_id, double p, std::string explanation) {
    store.put_prediction({repo_id, s.institution_id, s.classifier, s.model_tag, p, std::move(explanation),
                          utc_now_iso8601()});
    ++s.classified;
    ++s.histogram[histogram_bin(p)];
}

}  // namespace

ClassifySummary classify_sbc(Store& store, const InstitutionProfile& profile, const sbc::ScoreWeightTable& weights,
                             std::optional<std::int64_t> limit) {
    const auto tag = sbc_model_tag(weights);
    auto [s, todo] = start(store, profile, ClassifierKind::sbc, tag, limit);
    for (const auto& repo_id : todo) {
        const auto c = load_context(store, repo_id);
        const auto report = sbc::score_repository(c.repo, c.org_ptr(), c.top2, profile, weights);
        record(store, s, repo_id, report.total, sbc::explain(report));
    }
    return s;
}

ClassifySummary classify_svm(Store& store, const InstitutionProfile& profile, const svm::Model& model,
                             EmbeddingClient& embeddings, std::optional<std::int64_t> limit) {
    if (embeddings.model_tag() != model.model_tag)
        throw InputError("model was trained on embeddings from " + model.model_tag + ", client uses " +
                         embeddings.model_tag());
    const auto tag = svm_model_tag(model);
    auto [s, todo] = start(store, profile, ClassifierKind::svm, tag, limit);
    const std::size_t batch = std::max<std::size_t>(1, embeddings.batch_size());
    for (std::size_t start = 0; start < todo.size(); start += batch) {
        std::vector<AssembledText> texts;
        for (std::size_t i = start; i < std::min(todo.size(), start + batch); ++i) {
            const auto c = load_context(store, todo[i]);
            texts.push_back(assemble_text(c.repo, c.org_ptr(), c.top2));
        }
        for (const auto& v : embed(texts, embeddings, &store)) {
            const double f = svm::decision_value(model, v.values);
            char buf[48];
            std::snprintf(buf, sizeof buf, "decision value %.6f", f);
            record(store, s, v.repo_id, model.calibration(f), buf);
        }
    }
    return s;
}

ClassifySummary classify_llm(Store& store, const InstitutionProfile& profile, llm::ChatClient& chat,
                             const llm::ChatParams& params, std::optional<std::int64_t> limit, RunLog* log) {
    const auto tag = llm::model_tag(params);
    auto [s, todo] = start(store, profile, ClassifierKind::llm, tag, limit);
    for (const auto& repo_id : todo) {
        const auto c = load_context(store, repo_id);
        const auto prompt = llm::build_prompt(c.repo, c.org_ptr(), c.top2, profile, params);
        try {
            const auto result = llm::classify(prompt, chat, log);
            record(store, s, repo_id, result.verdict.probability, result.verdict.explanation);
        } catch (const llm::FormatError& e) {
            store.flag_for_review({repo_id, profile.id, ClassifierKind::llm, tag, e.what(), e.raw_response()});
            ++s.flagged;
            if (log) log->warning("llm_unparseable", e.what(), {{"repo_id", repo_id}});
        }
    }
    return s;
}

// ---------------------------------------------------------------------------

svm::Model train(Store& store, const std::string& institution_id, EmbeddingClient& embeddings,
                 const TrainOptions& options) {
    if (!store.has_institution(institution_id)) throw NotFoundError("unknown institution " + institution_id);
    const auto pool = eval::consolidate_labels(store.labels(institution_id));
    const auto sample = eval::sample_training_set(pool, institution_id, options.n, options.params.seed);
    std::vector<std::string> ids;
    std::vector<AssembledText> texts;
    for (const auto& l : sample) {
        ids.push_back(l.repo_id);
        const auto c = load_context(store, l.repo_id);
        texts.push_back(assemble_text(c.repo, c.org_ptr(), c.top2));
    }
    store.set_training_set(institution_id, ids);

    std::vector<svm::LabeledVector> data;
    const std::size_t batch = std::max<std::size_t>(1, embeddings.batch_size());
    for (std::size_t start = 0; start < texts.size(); start += batch) {
        std::vector<AssembledText> chunk(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                         texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), start + batch)));
        const auto vectors = embed(chunk, embeddings, &store);
        for (std::size_t i = 0; i < vectors.size(); ++i)
            data.push_back({vectors[i].repo_id, vectors[i].values, sample[start + i].label});
    }
    return svm::train(data, options.params, embeddings.model_tag());
}

std::string eval_report_key(const std::string& institution_id, ClassifierKind classifier) {
    return "eval/" + institution_id + "/" + std::string(to_string(classifier));
}

eval::EvalReport evaluate(Store& store, const std::string& institution_id, ClassifierKind classifier,
                          const EvaluateOptions& options) {
    if (!store.has_institution(institution_id)) throw NotFoundError("unknown institution " + institution_id);
    const auto pool = eval::consolidate_labels(store.labels(institution_id));
    const auto test = eval::build_balanced_test_set(pool, institution_id, options.n_per_class, options.seed,
                                                    store.training_set(institution_id));

    std::map<std::string, const Prediction*> latest;
    const auto predictions = store.predictions(institution_id, classifier);
    for (const auto& p : predictions) {
        auto& slot = latest[p.repo_id];
        if (!slot || std::tie(p.produced_at, p.model_tag) >= std::tie(slot->produced_at, slot->model_tag)) slot = &p;
    }

    eval::ScoredSet set;
    std::set<std::string> tags;
    std::vector<std::string> missing;
    for (const auto& l : test) {
        auto it = latest.find(l.repo_id);
        if (it == latest.end()) {
            missing.push_back(l.repo_id);
            continue;
        }
        set.push_back({l.repo_id, it->second->probability, l.label});
        tags.insert(it->second->model_tag);
    }
    if (!missing.empty())
        throw DataError(std::to_string(missing.size()) + " test repositories have no " +
                        std::string(to_string(classifier)) + " prediction (first: " + missing.front() +
                        "); run classify first");

    auto report = eval::evaluate(set);
    report.institution_id = institution_id;
    report.classifier = std::string(to_string(classifier));
    report.model_tag = text::join({tags.begin(), tags.end()}, ",");
    report.seed = options.seed;
    store.put_report(eval_report_key(institution_id, classifier), eval::to_json(report));
    return report;
}

// ---------------------------------------------------------------------------

insights::InsightReport report(const Store& store, const ReportOptions& options) {
    std::vector<std::string> institutions = options.institutions;
    if (institutions.empty())
        for (const auto& p : store.institutions()) institutions.push_back(p.id);

    insights::InsightReport r;
    r.classifier = std::string(to_string(options.classifier));
    r.threshold = options.threshold.value_or(options.fallback_threshold);
    r.rates.totals.institution_id = "total";

    std::set<std::string> affiliated;
    for (const auto& inst : institutions) {
        if (!store.has_institution(inst)) throw NotFoundError("unknown institution " + inst);
        double t = r.threshold;
        if (!options.threshold) {
            if (auto doc = store.report(eval_report_key(inst, options.classifier))) {
                t = eval::eval_report_from_json(*doc).optimal_threshold;
                r.thresholds[inst] = t;
            }
        }
        const auto preds = store.predictions(inst, options.classifier);
        const auto table = insights::affiliation_rates({{inst, store.unique_count(inst)}}, preds, t);
        r.rates.rows.push_back(table.rows.front());
        r.rates.totals.retrieved += table.rows.front().retrieved;
        r.rates.totals.predicted_affiliated += table.rows.front().predicted_affiliated;

        std::map<std::string, const Prediction*> latest;
        for (const auto& p : preds) {
            auto& slot = latest[p.repo_id];
            if (!slot || p.produced_at > slot->produced_at) slot = &p;
        }
        for (const auto& [repo_id, p] : latest)
            if (p->probability >= t) affiliated.insert(repo_id);
    }
    r.rates.totals.percent = insights::rate_percent(r.rates.totals.predicted_affiliated, r.rates.totals.retrieved);

    std::vector<RepoRecord> repos;
    for (const auto& id : affiliated)
        if (auto repo = store.repo(id)) repos.push_back(std::move(*repo));
    r.affiliated_repos = static_cast<std::int64_t>(repos.size());
    r.languages = insights::language_distribution(repos);
    r.licenses = insights::license_distribution(repos);
    r.community = insights::community_standards_report(repos);
    return r;
}

}  // namespace repofind::pipeline
