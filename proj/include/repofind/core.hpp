#pragma once

// Domain types shared by every stage of the pipeline: institution profiles,
// the three phases of scraped metadata, labels and predictions.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace repofind {

// ---------------------------------------------------------------------------
// Errors. Each failure class maps onto one CLI exit code (see cli/exit_codes).

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class NotFoundError : public Error { using Error::Error; };
class StoreError : public Error { using Error::Error; };
class NetworkError : public Error { using Error::Error; };
class RateLimitError : public NetworkError { using NetworkError::NetworkError; };
class ProtocolError : public NetworkError { using NetworkError::NetworkError; };
class InputError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class SamplingError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

// ---------------------------------------------------------------------------

struct InstitutionProfile {
    std::string id;       // short stable key, e.g. "ucsc"
    std::string name;     // "University of California, Santa Cruz"
    std::string acronym;  // "UCSC"
    std::string domain;   // "ucsc.edu"
    std::vector<std::string> alternates;

    friend bool operator==(const InstitutionProfile&, const InstitutionProfile&) = default;
};

/// Throws ConfigError naming the profile and field when an invariant fails.
void validate(const InstitutionProfile& profile);

enum class OwnerKind { user, organization };

std::string_view to_string(OwnerKind kind);
OwnerKind owner_kind_from_string(std::string_view text);

/// Which search attribute surfaced a repository.
enum class SearchAttribute { name, description, readme, topics, email };

std::string_view to_string(SearchAttribute attr);
SearchAttribute search_attribute_from_string(std::string_view text);

struct MatchedQuery {
    std::string institution_id;
    SearchAttribute attribute{SearchAttribute::name};
    std::string keyword;

    friend auto operator<=>(const MatchedQuery&, const MatchedQuery&) = default;
};

struct CommunityFlags {
    bool has_readme = false;
    bool has_license = false;
    bool has_code_of_conduct = false;
    bool has_contributing = false;
    bool has_security_policy = false;
    bool has_issue_template = false;
    bool has_pr_template = false;
    bool has_description = false;

    friend bool operator==(const CommunityFlags&, const CommunityFlags&) = default;
};

inline constexpr std::string_view kNoLicense = "NONE";

struct RepoRecord {
    std::string repo_id;  // "owner/name"
    std::int64_t numeric_id = 0;
    std::string name;
    std::string description;
    std::string homepage;
    std::string readme_text;
    std::vector<std::string> topics;
    std::string primary_language;
    std::string license_id{kNoLicense};
    std::string owner_login;
    OwnerKind owner_kind{OwnerKind::user};
    std::int64_t stars = 0;
    std::int64_t forks = 0;
    std::int64_t subscribers = 0;
    std::int64_t release_download_count = 0;
    std::string created_at;
    std::string updated_at;
    CommunityFlags community;
    std::vector<MatchedQuery> matched_queries;

    friend bool operator==(const RepoRecord&, const RepoRecord&) = default;
};

/// Throws DataError when counts are negative or the flags disagree with the text fields.
void validate(const RepoRecord& repo);

struct ContributorRecord {
    std::string repo_id;
    std::string username;
    int rank = 1;  // 1-based, by commit count
    std::int64_t contributions = 0;
    bool profiled = false;  // full user profile fetched
    std::string name;
    std::string bio;
    std::string location;
    std::string company;
    std::string email;
    std::string twitter;
    std::vector<std::string> organizations;

    friend bool operator==(const ContributorRecord&, const ContributorRecord&) = default;
};

struct OrgRecord {
    std::string login;
    std::string name;
    std::string company;
    std::string location;
    std::string description;
    std::string email;
    std::string url;
    std::string created_at;

    friend bool operator==(const OrgRecord&, const OrgRecord&) = default;
};

struct LabelRecord {
    std::string repo_id;
    std::string institution_id;
    int label = 0;  // 0 or 1
    std::string labeler;
    std::string labeled_at;

    friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

enum class ClassifierKind { sbc, svm, llm };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_from_string(std::string_view text);

struct Prediction {
    std::string repo_id;
    std::string institution_id;
    ClassifierKind classifier{ClassifierKind::sbc};
    std::string model_tag;
    double probability = 0.0;
    std::string explanation;
    std::string produced_at;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

// ---------------------------------------------------------------------------
// Institution profile configuration.

/// Parses a YAML document with an `institutions:` list. Profiles come back in
/// declaration order. Throws ConfigError naming the offending profile/field.
std::vector<InstitutionProfile> load_institution_profiles(std::string_view document);
std::vector<InstitutionProfile> load_institution_profiles_file(const std::string& path);

/// Emits a document that load_institution_profiles parses back to `profiles`.
std::string serialize_institution_profiles(const std::vector<InstitutionProfile>& profiles);

/// The ten University of California campuses, as shipped in config/institutions.yaml.
std::string_view default_config_document();
std::vector<InstitutionProfile> default_institution_profiles();

const InstitutionProfile& find_profile(const std::vector<InstitutionProfile>& profiles,
                                       std::string_view id);

/// Canonical five-criterion affiliation definition used by the LLM prompt and
/// the labeling service.
std::string_view affiliation_definition_text();

/// UTC timestamp, ISO-8601 with a trailing Z.
std::string utc_now_iso8601();

}  // namespace repofind
