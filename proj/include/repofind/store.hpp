#pragma once

// Single-file SQLite store for everything a run produces. One connection,
// one writer at a time: every public member serializes on the store mutex,
// so ingest workers and label-service handlers may share a Store.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repofind/core.hpp"

struct sqlite3;

namespace repofind {

enum class UpsertOutcome { inserted, merged };
enum class LabelWrite { inserted, overwritten };

enum class Table { repos, contributors, orgs, predictions, labels };
enum class ExportFormat { csv, jsonl };

Table table_from_string(std::string_view name);
ExportFormat export_format_from_string(std::string_view name);
/// Documented column order for each exported table.
const std::vector<std::string>& export_columns(Table table);

struct CandidateFilter {
    bool unlabeled_only = false;
    std::optional<double> max_probability;
    std::optional<ClassifierKind> classifier;
};

struct ReviewFlag {
    std::string repo_id;
    std::string institution_id;
    ClassifierKind classifier{ClassifierKind::llm};
    std::string model_tag;
    std::string reason;
    std::string raw_response;
};

struct LabelAuditEntry {
    std::string repo_id;
    std::string institution_id;
    std::string labeler;
    int old_label = 0;
    int new_label = 0;
    std::string changed_at;
};

class Store {
public:
    static constexpr int kSchemaVersion = 1;

    /// Opens or creates the store. ":memory:" gives a private in-memory store.
    /// Throws StoreError if the file carries a newer schema version.
    explicit Store(const std::string& path);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    const std::string& path() const { return path_; }
    int schema_version() const;

    // -- institutions -------------------------------------------------------
    void register_institution(const InstitutionProfile& profile);
    std::vector<InstitutionProfile> institutions() const;
    bool has_institution(const std::string& id) const;

    // -- repositories -------------------------------------------------------
    /// New repo_id -> inserted; existing -> metadata refreshed and provenance unioned.
    UpsertOutcome upsert_repo(const RepoRecord& record);
    std::optional<RepoRecord> repo(const std::string& repo_id) const;
    /// Ascending repo_id; restricted to repos with provenance for `institution_id` when given.
    std::vector<RepoRecord> repos(const std::optional<std::string>& institution_id = {}) const;
    std::vector<std::string> repo_ids(const std::optional<std::string>& institution_id = {}) const;
    /// Number of provenance triples (search hits).
    std::int64_t raw_match_count(const std::optional<std::string>& institution_id = {}) const;
    /// Number of distinct repositories.
    std::int64_t unique_count(const std::optional<std::string>& institution_id = {}) const;

    // -- contributors / organizations -------------------------------------
    /// Replaces the repo's contributor list and marks the repo as done for phase 2.
    void put_contributors(const std::string& repo_id, const std::vector<ContributorRecord>& contributors);
    std::vector<ContributorRecord> contributors(const std::string& repo_id) const;
    /// Ranks 1..n only.
    std::vector<ContributorRecord> top_contributors(const std::string& repo_id, int n = 2) const;
    std::vector<std::string> repos_missing_contributors() const;

    void put_org(const OrgRecord& org);
    /// Marks an owner login as checked for phase 3 (org or not).
    void mark_owner_checked(const std::string& login);
    std::optional<OrgRecord> org(const std::string& login) const;
    std::vector<OrgRecord> orgs() const;
    /// Organization-owned repos whose owner has not been checked yet, distinct logins.
    std::vector<std::string> owners_missing_org() const;

    // -- predictions / labels ----------------------------------------------
    void put_prediction(const Prediction& prediction);
    std::vector<Prediction> predictions(const std::optional<std::string>& institution_id = {},
                                        const std::optional<ClassifierKind>& classifier = {}) const;
    void flag_for_review(const ReviewFlag& flag);
    std::vector<ReviewFlag> review_flags() const;

    /// Throws NotFoundError for an unknown repo. An existing
    /// (repo, institution, labeler) row is overwritten and audited.
    LabelWrite put_label(const LabelRecord& label);
    std::vector<LabelRecord> labels(const std::optional<std::string>& institution_id = {}) const;
    std::vector<LabelAuditEntry> label_audit() const;

    /// Unlabeled/probability/classifier filtered repo ids for one institution.
    /// Ascending probability when a classifier is given, else ascending repo_id.
    std::vector<std::string> query_candidates(const std::string& institution_id, const CandidateFilter& filter) const;

    // -- auxiliary ------------------------------------------------------------
    std::optional<std::vector<double>> cached_embedding(const std::string& repo_id, const std::string& model_tag,
                                                        const std::string& text_hash) const;
    void put_embedding(const std::string& repo_id, const std::string& model_tag, const std::string& text_hash,
                       const std::vector<double>& values);
    std::int64_t embedding_count() const;

    void archive_payload(const std::string& key, const std::string& body);
    std::optional<std::string> archived_payload(const std::string& key) const;

    void set_training_set(const std::string& institution_id, const std::vector<std::string>& repo_ids);
    std::vector<std::string> training_set(const std::string& institution_id) const;

    void put_report(const std::string& key, const nlohmann::json& report);
    std::optional<nlohmann::json> report(const std::string& key) const;

    /// Rows referencing a missing repo (predictions, labels, contributors).
    std::vector<std::string> integrity_violations() const;

    // -- export / import ----------------------------------------------------
    std::int64_t export_table(Table table, ExportFormat format, std::ostream& out) const;
    /// Throws Error (I/O) when `dest` cannot be written.
    std::int64_t export_table(Table table, ExportFormat format, const std::string& dest) const;
    std::int64_t import_table(Table table, ExportFormat format, std::istream& in);

private:
    void migrate();
    void exec(const char* sql) const;
    std::optional<RepoRecord> repo_unlocked(const std::string& repo_id) const;
    std::vector<nlohmann::ordered_json> table_rows(Table table) const;
    void import_row(Table table, const nlohmann::ordered_json& row);

    std::string path_;
    sqlite3* db_ = nullptr;
    mutable std::recursive_mutex mu_;
};

}  // namespace repofind
