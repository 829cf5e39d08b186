#include "repofind/label_service.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "repofind/json_io.hpp"
#include "repofind/store.hpp"
#include "repofind/text.hpp"

namespace repofind {

using nlohmann::ordered_json;

std::string_view to_string(ReviewStrategy s) {
    switch (s) {
        case ReviewStrategy::random: return "random";
        case ReviewStrategy::lowest_confidence: return "lowest_confidence";
        case ReviewStrategy::highest_confidence: return "highest_confidence";
    }
    return "random";
}

ReviewStrategy review_strategy_from_string(std::string_view name) {
    for (auto s : {ReviewStrategy::random, ReviewStrategy::lowest_confidence, ReviewStrategy::highest_confidence})
        if (to_string(s) == name) return s;
    throw InputError("unknown strategy '" + std::string(name) +
                     "' (expected random, lowest_confidence or highest_confidence)");
}

namespace {

HttpResponse reply(int status, const ordered_json& body) {
    HttpResponse r;
    r.status = status;
    r.body = body.dump();
    r.headers.emplace("Content-Type", "application/json");
    return r;
}

HttpResponse error(int status, const std::string& message) { return reply(status, {{"error", message}}); }

bool same_token(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return false;
    unsigned char diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
    return diff == 0;
}

std::string param(const ParsedTarget& t, const char* key) {
    auto it = t.params.find(key);
    return it == t.params.end() ? std::string() : it->second;
}

// Latest prediction per repo for one institution and classifier.
std::map<std::string, Prediction> latest_predictions(const Store& store, const std::string& inst,
                                                     ClassifierKind kind) {
    std::map<std::string, Prediction> out;
    for (auto& p : store.predictions(inst, kind)) {
        auto it = out.find(p.repo_id);
        if (it == out.end() || p.produced_at >= it->second.produced_at) out[p.repo_id] = std::move(p);
    }
    return out;
}

}  // namespace

LabelService::LabelService(Store& store, LabelServiceOptions options) : store_(store), options_(std::move(options)) {}

HttpResponse LabelService::handle(const HttpRequest& request) {
    const auto target = parse_target(request.target);
    HttpResponse r;
    try {
        if (request.method == "OPTIONS") {
            r.status = 204;
        } else if (target.path == "/api/health") {
            r = request.method == "GET" ? reply(200, {{"status", "ok"}}) : error(405, "method not allowed");
        } else if (!options_.token.empty() && !same_token(request.header("X-Label-Token"), options_.token)) {
            r = error(401, "missing or wrong X-Label-Token");
        } else if (target.path == "/api/institutions") {
            r = request.method == "GET" ? institutions() : error(405, "method not allowed");
        } else if (target.path == "/api/next") {
            r = request.method == "GET" ? next(target) : error(405, "method not allowed");
        } else if (target.path == "/api/label") {
            r = request.method == "POST" ? label(request) : error(405, "method not allowed");
        } else {
            r = error(404, "no such endpoint: " + target.path);
        }
    } catch (const InputError& e) {
        r = error(400, e.what());
    } catch (const NotFoundError& e) {
        r = error(404, e.what());
    } catch (const std::exception& e) {
        r = error(500, e.what());
    }
    r.headers.emplace("Access-Control-Allow-Origin", "*");
    r.headers.emplace("Access-Control-Allow-Headers", "Content-Type, X-Label-Token");
    r.headers.emplace("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    return r;
}

HttpResponse LabelService::institutions() {
    auto list = ordered_json::array();
    for (const auto& p : store_.institutions()) {
        const auto ids = store_.repo_ids(p.id);
        const std::set<std::string> repos(ids.begin(), ids.end());
        std::set<std::string> labeled;
        for (const auto& l : store_.labels(p.id))
            if (repos.count(l.repo_id)) labeled.insert(l.repo_id);
        const auto total = static_cast<std::int64_t>(repos.size());
        list.push_back({{"id", p.id},
                        {"name", p.name},
                        {"labeled_count", labeled.size()},
                        {"unlabeled_count", total - static_cast<std::int64_t>(labeled.size())}});
    }
    return reply(200, list);
}

HttpResponse LabelService::next(const ParsedTarget& t) {
    const auto inst = param(t, "institution");
    if (inst.empty()) throw InputError("query parameter 'institution' is required");
    if (!store_.has_institution(inst)) throw NotFoundError("unknown institution " + inst);

    std::optional<ClassifierKind> classifier;
    if (auto c = param(t, "classifier"); !c.empty()) {
        try {
            classifier = classifier_from_string(c);
        } catch (const Error&) {
            throw InputError("unknown classifier '" + c + "'");
        }
    }
    std::map<std::string, Prediction> scores;
    if (classifier) {
        scores = latest_predictions(store_, inst, *classifier);
    } else {
        for (auto kind : {ClassifierKind::svm, ClassifierKind::llm, ClassifierKind::sbc}) {
            scores = latest_predictions(store_, inst, kind);
            if (!scores.empty()) {
                classifier = kind;
                break;
            }
        }
    }
    const auto strategy_name = param(t, "strategy");
    auto strategy = strategy_name.empty()
                        ? (scores.empty() ? ReviewStrategy::random : ReviewStrategy::lowest_confidence)
                        : review_strategy_from_string(strategy_name);

    std::set<std::string> labeled;
    for (const auto& l : store_.labels(inst)) labeled.insert(l.repo_id);
    std::vector<std::string> open;
    for (const auto& id : store_.repo_ids(inst))
        if (!labeled.count(id)) open.push_back(id);
    if (open.empty()) {
        HttpResponse r;
        r.status = 204;
        return r;
    }

    std::string pick;
    if (strategy != ReviewStrategy::random) {
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& id : open)
            if (auto it = scores.find(id); it != scores.end()) ranked.emplace_back(it->second.probability, id);
        if (ranked.empty()) {
            strategy = ReviewStrategy::random;
        } else if (strategy == ReviewStrategy::lowest_confidence) {
            pick = std::min_element(ranked.begin(), ranked.end())->second;
        } else {
            pick = std::min_element(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                       return a.first != b.first ? a.first > b.first : a.second < b.second;
                   })->second;
        }
    }
    if (strategy == ReviewStrategy::random) {
        const auto key = [&](const std::string& id) {
            return text::sha256_hex(std::to_string(options_.seed) + ":" + id);
        };
        pick = *std::min_element(open.begin(), open.end(),
                                 [&](const auto& a, const auto& b) { return key(a) < key(b); });
    }

    const auto repo = store_.repo(pick);
    ordered_json org = nullptr;
    if (repo->owner_kind == OwnerKind::organization)
        if (auto o = store_.org(repo->owner_login)) org = *o;
    auto predictions = ordered_json::array();
    for (auto kind : {ClassifierKind::sbc, ClassifierKind::svm, ClassifierKind::llm}) {
        const auto latest = latest_predictions(store_, inst, kind);
        if (auto it = latest.find(pick); it != latest.end()) predictions.push_back(it->second);
    }
    const auto profiles = store_.institutions();
    const auto& profile = find_profile(profiles, inst);
    return reply(200, {{"institution", profile},
                       {"strategy", to_string(strategy)},
                       {"classifier", classifier ? ordered_json(to_string(*classifier)) : ordered_json(nullptr)},
                       {"repo", *repo},
                       {"org", org},
                       {"contributors", store_.top_contributors(pick, 2)},
                       {"predictions", predictions},
                       {"definition", affiliation_definition_text()},
                       {"remaining", open.size()}});
}

HttpResponse LabelService::label(const HttpRequest& request) {
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(request.body);
    } catch (const nlohmann::json::exception&) {
        throw InputError("request body is not valid JSON");
    }
    if (!body.is_object()) throw InputError("request body must be a JSON object");
    auto text_field = [&](const char* key) {
        auto it = body.find(key);
        if (it == body.end() || !it->is_string() || it->get<std::string>().empty())
            throw InputError(std::string("field '") + key + "' must be a non-empty string");
        return it->get<std::string>();
    };
    LabelRecord rec;
    rec.repo_id = text_field("repo_id");
    rec.institution_id = text_field("institution_id");
    auto lab = body.find("label");
    if (lab == body.end() || !lab->is_number_integer() || (lab->get<std::int64_t>() != 0 && lab->get<std::int64_t>() != 1))
        throw InputError("field 'label' must be 0 or 1");
    rec.label = lab->get<int>();
    rec.labeler = body.contains("labeler") ? text_field("labeler") : std::string("anonymous");
    rec.labeled_at = utc_now_iso8601();
    if (!store_.has_institution(rec.institution_id)) throw NotFoundError("unknown institution " + rec.institution_id);

    const auto outcome = store_.put_label(rec);
    ordered_json out = rec;
    out["write"] = outcome == LabelWrite::inserted ? "inserted" : "overwritten";
    return reply(201, out);
}

}  // namespace repofind
