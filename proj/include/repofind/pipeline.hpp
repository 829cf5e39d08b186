#pragma once

// Store-backed pipeline steps behind the CLI subcommands. Every step reads
// its inputs from the store and writes its outputs back, so steps compose
// through the store and can be rerun.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repofind/core.hpp"
#include "repofind/embedding.hpp"
#include "repofind/evaluation.hpp"
#include "repofind/ingest.hpp"
#include "repofind/insights.hpp"
#include "repofind/llm.hpp"
#include "repofind/sbc.hpp"
#include "repofind/store.hpp"
#include "repofind/svm.hpp"

namespace repofind::pipeline {

// -- discover -------------------------------------------------------------------

struct QueryCount {
    SearchQuery query;
    std::int64_t total_count = 0;  // as reported by the service
    std::int64_t retrieved = 0;
    bool truncated = false;
    int windows = 1;
};

struct DiscoverSummary {
    std::string institution_id;
    std::vector<QueryCount> queries;
    std::int64_t raw_matches = 0;   // search hits summed over queries
    std::int64_t unique_repos = 0;  // distinct repos stored for the institution
    std::int64_t new_repos = 0;
    std::int64_t refreshed_repos = 0;
    std::int64_t vanished = 0;  // hits whose detail request answered 404
    std::int64_t failed = 0;
};

/// Runs every query of the profile, merges hits by repo, enriches repos that
/// are not yet stored and records provenance for all of them.
DiscoverSummary discover(Store& store, GitHubClient& github, const InstitutionProfile& profile,
                         RunLog* log = nullptr);
std::string to_text(const DiscoverSummary& summary);

// -- enrich ---------------------------------------------------------------------

struct EnrichSummary {
    std::string phase;  // "contributors" or "orgs"
    std::int64_t pending = 0;
    std::int64_t done = 0;
    std::int64_t failed = 0;
    std::int64_t records = 0;  // contributor or organization records written
};

/// Fetches contributors for stored repos that have none yet. Per-repo failures
/// are logged and skipped; `limit` caps the repos processed in this run.
EnrichSummary enrich_contributors(Store& store, GitHubClient& github, std::optional<std::int64_t> limit = {},
                                  RunLog* log = nullptr);
/// Checks each unchecked organization owner and stores its OrgRecord.
EnrichSummary enrich_orgs(Store& store, GitHubClient& github, std::optional<std::int64_t> limit = {},
                          RunLog* log = nullptr);
std::string to_text(const EnrichSummary& summary);

// -- classify -------------------------------------------------------------------

struct ClassifySummary {
    std::string institution_id;
    ClassifierKind classifier{ClassifierKind::sbc};
    std::string model_tag;
    std::int64_t classified = 0;
    std::int64_t skipped = 0;  // already predicted under the same model tag
    std::int64_t flagged = 0;  // sent to review instead of predicted
    std::array<std::int64_t, 10> histogram{};  // bins [0,0.1), ..., [0.9,1.0]
};

std::size_t histogram_bin(double probability);
std::string to_text(const ClassifySummary& summary);

/// "sbc;weights=<12 hex>" from the weight table contents.
std::string sbc_model_tag(const sbc::ScoreWeightTable& weights);
/// "svm;<embedding model>;data=<12 hex>".
std::string svm_model_tag(const svm::Model& model);

/// Repos of the institution without a prediction under `model_tag`, ascending,
/// at most `limit` of them.
std::vector<std::string> unpredicted_repos(const Store& store, const std::string& institution_id,
                                           ClassifierKind classifier, const std::string& model_tag,
                                           std::optional<std::int64_t> limit);

ClassifySummary classify_sbc(Store& store, const InstitutionProfile& profile, const sbc::ScoreWeightTable& weights,
                             std::optional<std::int64_t> limit = {});
ClassifySummary classify_svm(Store& store, const InstitutionProfile& profile, const svm::Model& model,
                             EmbeddingClient& embeddings, std::optional<std::int64_t> limit = {});
/// Replies that stay unparseable after the retries are flagged for review.
ClassifySummary classify_llm(Store& store, const InstitutionProfile& profile, llm::ChatClient& chat,
                             const llm::ChatParams& params, std::optional<std::int64_t> limit = {},
                             RunLog* log = nullptr);

// -- train / evaluate -----------------------------------------------------------

struct TrainOptions {
    std::size_t n = 200;
    svm::Params params;
};

/// Samples n labeled repos, records them as the training set, embeds them and
/// fits the calibrated SVM.
svm::Model train(Store& store, const std::string& institution_id, EmbeddingClient& embeddings,
                 const TrainOptions& options);

struct EvaluateOptions {
    std::size_t n_per_class = 50;
    std::uint64_t seed = 42;
};

/// Balanced test set (training repos excluded) scored with the latest stored
/// prediction of `classifier`. Throws DataError when a test repo has no
/// prediction. The report is also stored under eval_report_key().
eval::EvalReport evaluate(Store& store, const std::string& institution_id, ClassifierKind classifier,
                          const EvaluateOptions& options);
std::string eval_report_key(const std::string& institution_id, ClassifierKind classifier);

// -- report ---------------------------------------------------------------------

struct ReportOptions {
    ClassifierKind classifier{ClassifierKind::llm};
    std::vector<std::string> institutions;  // empty: every registered institution
    /// Applied to every institution when set; otherwise each institution uses
    /// the optimal threshold of its stored evaluation, or `fallback_threshold`.
    std::optional<double> threshold;
    double fallback_threshold = 0.5;
};

insights::InsightReport report(const Store& store, const ReportOptions& options);

}  // namespace repofind::pipeline
