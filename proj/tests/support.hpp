#pragma once

// Shared fixtures: an API client wired to an in-process handler with virtual
// time, and small record builders.

#include <chrono>
#include <functional>
#include <string>

#include "repofind/core.hpp"
#include "repofind/http.hpp"

namespace repofind::fixture {

struct InProcess {
    explicit InProcess(std::function<HttpResponse(const HttpRequest&)> handler,
                       RetryPolicy retry = {3, std::chrono::milliseconds(10)})
        : transport(std::move(handler)), budget(clock, {}), api(transport, budget, retry, &log) {}

    FunctionTransport transport;
    ManualClock clock;
    RateBudget budget;
    RunLog log;
    ApiClient api;
};

inline InstitutionProfile profile(const std::string& id = "ucsc") {
    return find_profile(default_institution_profiles(), id);
}

inline RepoRecord repo(const std::string& repo_id, const std::string& description = {}) {
    RepoRecord r;
    r.repo_id = repo_id;
    r.name = repo_id.substr(repo_id.find('/') + 1);
    r.owner_login = repo_id.substr(0, repo_id.find('/'));
    r.description = description;
    r.community.has_description = !description.empty();
    return r;
}

}  // namespace repofind::fixture
