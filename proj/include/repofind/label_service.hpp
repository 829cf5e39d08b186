#pragma once

// JSON API behind the labeling UI. Handlers are plain functions of
// (request) -> response over a shared Store; HttpServer serves them.
//
//   GET  /api/health
//   GET  /api/institutions
//   GET  /api/next?institution=&strategy=&classifier=&labeler=
//   POST /api/label {repo_id, institution_id, label, labeler}

#include <cstdint>
#include <string>

#include "repofind/core.hpp"
#include "repofind/http.hpp"

namespace repofind {

class Store;

enum class ReviewStrategy { random, lowest_confidence, highest_confidence };

std::string_view to_string(ReviewStrategy s);
/// Throws InputError for an unknown name.
ReviewStrategy review_strategy_from_string(std::string_view name);

struct LabelServiceOptions {
    /// When non-empty every /api request except /api/health must carry it in X-Label-Token.
    std::string token;
    /// Seed of the random review order; the order is fixed for a given seed.
    std::uint64_t seed = 42;
};

class LabelService {
public:
    LabelService(Store& store, LabelServiceOptions options = {});

    HttpResponse handle(const HttpRequest& request);

private:
    HttpResponse institutions();
    HttpResponse next(const ParsedTarget& target);
    HttpResponse label(const HttpRequest& request);

    Store& store_;
    LabelServiceOptions options_;
};

}  // namespace repofind
