#include "repofind/store.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <sqlite3.h>

#include "repofind/json_io.hpp"
#include "repofind/text.hpp"

namespace repofind {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// Thin RAII wrapper over a prepared statement.
class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
            throw StoreError(std::string("prepare failed: ") + sqlite3_errmsg(db) + " [" + sql + "]");
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, std::string_view v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind(int i, const std::string& v) { return bind(i, std::string_view(v)); }
    Stmt& bind(int i, const char* v) { return bind(i, std::string_view(v)); }
    Stmt& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Stmt& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
    Stmt& bind(int i, bool v) { return bind(i, static_cast<std::int64_t>(v ? 1 : 0)); }
    Stmt& bind(int i, double v) {
        check(sqlite3_bind_double(stmt_, i, v));
        return *this;
    }
    Stmt& bind_blob(int i, const void* data, std::size_t n) {
        check(sqlite3_bind_blob(stmt_, i, data, static_cast<int>(n), SQLITE_TRANSIENT));
        return *this;
    }

    /// True while rows are available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StoreError(std::string("constraint or I/O failure: ") + sqlite3_errmsg(db_));
    }
    void run() {
        while (step()) {
        }
    }

    std::string text(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
                 : std::string();
    }
    std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
    double real(int col) const { return sqlite3_column_double(stmt_, col); }
    bool boolean(int col) const { return i64(col) != 0; }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::vector<double> doubles(int col) const {
        const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col));
        std::vector<double> out(n / sizeof(double));
        if (!out.empty()) std::memcpy(out.data(), sqlite3_column_blob(stmt_, col), out.size() * sizeof(double));
        return out;
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw StoreError(std::string("bind failed: ") + sqlite3_errmsg(db_));
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { exec("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        exec("COMMIT");
        done_ = true;
    }

private:
    void exec(const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown";
            sqlite3_free(err);
            throw StoreError(std::string(sql) + ": " + msg);
        }
    }
    sqlite3* db_;
    bool done_ = false;
};

constexpr const char* kSchemaV1 = R"sql(
CREATE TABLE institutions(
  id TEXT PRIMARY KEY, position INTEGER NOT NULL, doc TEXT NOT NULL);
CREATE TABLE repos(
  repo_id TEXT PRIMARY KEY, numeric_id INTEGER NOT NULL, name TEXT NOT NULL, description TEXT NOT NULL,
  homepage TEXT NOT NULL, readme_text TEXT NOT NULL, topics TEXT NOT NULL, primary_language TEXT NOT NULL,
  license_id TEXT NOT NULL, owner_login TEXT NOT NULL, owner_kind TEXT NOT NULL,
  stars INTEGER NOT NULL CHECK(stars >= 0), forks INTEGER NOT NULL CHECK(forks >= 0),
  subscribers INTEGER NOT NULL CHECK(subscribers >= 0),
  release_download_count INTEGER NOT NULL CHECK(release_download_count >= 0),
  created_at TEXT NOT NULL, updated_at TEXT NOT NULL,
  has_readme INTEGER NOT NULL, has_license INTEGER NOT NULL, has_code_of_conduct INTEGER NOT NULL,
  has_contributing INTEGER NOT NULL, has_security_policy INTEGER NOT NULL, has_issue_template INTEGER NOT NULL,
  has_pr_template INTEGER NOT NULL, has_description INTEGER NOT NULL,
  contributors_fetched INTEGER NOT NULL DEFAULT 0);
CREATE TABLE repo_matches(
  repo_id TEXT NOT NULL REFERENCES repos(repo_id), institution_id TEXT NOT NULL, attribute TEXT NOT NULL,
  keyword TEXT NOT NULL, PRIMARY KEY(repo_id, institution_id, attribute, keyword));
CREATE INDEX repo_matches_inst ON repo_matches(institution_id);
CREATE TABLE contributors(
  repo_id TEXT NOT NULL REFERENCES repos(repo_id), username TEXT NOT NULL, rank INTEGER NOT NULL CHECK(rank >= 1),
  contributions INTEGER NOT NULL, profiled INTEGER NOT NULL, name TEXT NOT NULL, bio TEXT NOT NULL,
  location TEXT NOT NULL, company TEXT NOT NULL, email TEXT NOT NULL, twitter TEXT NOT NULL,
  organizations TEXT NOT NULL, PRIMARY KEY(repo_id, username));
CREATE TABLE orgs(
  login TEXT PRIMARY KEY, name TEXT NOT NULL, company TEXT NOT NULL, location TEXT NOT NULL,
  description TEXT NOT NULL, email TEXT NOT NULL, url TEXT NOT NULL, created_at TEXT NOT NULL);
CREATE TABLE owner_checks(login TEXT PRIMARY KEY);
CREATE TABLE predictions(
  repo_id TEXT NOT NULL REFERENCES repos(repo_id), institution_id TEXT NOT NULL, classifier TEXT NOT NULL,
  model_tag TEXT NOT NULL, probability REAL NOT NULL CHECK(probability >= 0 AND probability <= 1),
  explanation TEXT NOT NULL, produced_at TEXT NOT NULL,
  PRIMARY KEY(repo_id, institution_id, classifier, model_tag));
CREATE TABLE review_flags(
  repo_id TEXT NOT NULL, institution_id TEXT NOT NULL, classifier TEXT NOT NULL, model_tag TEXT NOT NULL,
  reason TEXT NOT NULL, raw_response TEXT NOT NULL, PRIMARY KEY(repo_id, institution_id, classifier, model_tag));
CREATE TABLE labels(
  repo_id TEXT NOT NULL REFERENCES repos(repo_id), institution_id TEXT NOT NULL,
  label INTEGER NOT NULL CHECK(label IN (0, 1)), labeler TEXT NOT NULL, labeled_at TEXT NOT NULL,
  PRIMARY KEY(repo_id, institution_id, labeler));
CREATE TABLE label_audit(
  id INTEGER PRIMARY KEY AUTOINCREMENT, repo_id TEXT NOT NULL, institution_id TEXT NOT NULL,
  labeler TEXT NOT NULL, old_label INTEGER NOT NULL, new_label INTEGER NOT NULL, changed_at TEXT NOT NULL);
CREATE TABLE embeddings(
  repo_id TEXT NOT NULL, model_tag TEXT NOT NULL, text_hash TEXT NOT NULL, dim INTEGER NOT NULL,
  vec BLOB NOT NULL, PRIMARY KEY(repo_id, model_tag, text_hash));
CREATE TABLE payloads(key TEXT PRIMARY KEY, body TEXT NOT NULL);
CREATE TABLE training_sets(
  institution_id TEXT NOT NULL, repo_id TEXT NOT NULL, PRIMARY KEY(institution_id, repo_id));
CREATE TABLE reports(key TEXT PRIMARY KEY, doc TEXT NOT NULL);
)sql";

RepoRecord read_repo_row(const Stmt& s) {
    RepoRecord r;
    r.repo_id = s.text(0);
    r.numeric_id = s.i64(1);
    r.name = s.text(2);
    r.description = s.text(3);
    r.homepage = s.text(4);
    r.readme_text = s.text(5);
    r.topics = json::parse(s.text(6)).get<std::vector<std::string>>();
    r.primary_language = s.text(7);
    r.license_id = s.text(8);
    r.owner_login = s.text(9);
    r.owner_kind = owner_kind_from_string(s.text(10));
    r.stars = s.i64(11);
    r.forks = s.i64(12);
    r.subscribers = s.i64(13);
    r.release_download_count = s.i64(14);
    r.created_at = s.text(15);
    r.updated_at = s.text(16);
    r.community.has_readme = s.boolean(17);
    r.community.has_license = s.boolean(18);
    r.community.has_code_of_conduct = s.boolean(19);
    r.community.has_contributing = s.boolean(20);
    r.community.has_security_policy = s.boolean(21);
    r.community.has_issue_template = s.boolean(22);
    r.community.has_pr_template = s.boolean(23);
    r.community.has_description = s.boolean(24);
    return r;
}

constexpr const char* kRepoColumns =
    "repo_id, numeric_id, name, description, homepage, readme_text, topics, primary_language, license_id, "
    "owner_login, owner_kind, stars, forks, subscribers, release_download_count, created_at, updated_at, "
    "has_readme, has_license, has_code_of_conduct, has_contributing, has_security_policy, has_issue_template, "
    "has_pr_template, has_description";

ContributorRecord read_contributor_row(const Stmt& s) {
    ContributorRecord c;
    c.repo_id = s.text(0);
    c.username = s.text(1);
    c.rank = static_cast<int>(s.i64(2));
    c.contributions = s.i64(3);
    c.profiled = s.boolean(4);
    c.name = s.text(5);
    c.bio = s.text(6);
    c.location = s.text(7);
    c.company = s.text(8);
    c.email = s.text(9);
    c.twitter = s.text(10);
    c.organizations = json::parse(s.text(11)).get<std::vector<std::string>>();
    return c;
}

constexpr const char* kContributorColumns =
    "repo_id, username, rank, contributions, profiled, name, bio, location, company, email, twitter, organizations";

OrgRecord read_org_row(const Stmt& s) {
    return OrgRecord{s.text(0), s.text(1), s.text(2), s.text(3), s.text(4), s.text(5), s.text(6), s.text(7)};
}

Prediction read_prediction_row(const Stmt& s) {
    Prediction p;
    p.repo_id = s.text(0);
    p.institution_id = s.text(1);
    p.classifier = classifier_from_string(s.text(2));
    p.model_tag = s.text(3);
    p.probability = s.real(4);
    p.explanation = s.text(5);
    p.produced_at = s.text(6);
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------

Table table_from_string(std::string_view name) {
    if (name == "repos") return Table::repos;
    if (name == "contributors") return Table::contributors;
    if (name == "orgs") return Table::orgs;
    if (name == "predictions") return Table::predictions;
    if (name == "labels") return Table::labels;
    throw InputError("unknown table '" + std::string(name) + "'");
}

ExportFormat export_format_from_string(std::string_view name) {
    if (name == "csv") return ExportFormat::csv;
    if (name == "jsonl") return ExportFormat::jsonl;
    throw InputError("unknown export format '" + std::string(name) + "'");
}

namespace {

// A default-constructed record fixes the column order and each column's JSON type.
ojson prototype(Table table) {
    switch (table) {
        case Table::repos: return ojson(RepoRecord{});
        case Table::contributors: return ojson(ContributorRecord{});
        case Table::orgs: return ojson(OrgRecord{});
        case Table::predictions: return ojson(Prediction{});
        case Table::labels: return ojson(LabelRecord{});
    }
    return {};
}

}  // namespace

const std::vector<std::string>& export_columns(Table table) {
    static const std::map<Table, std::vector<std::string>> columns = [] {
        std::map<Table, std::vector<std::string>> m;
        for (Table t : {Table::repos, Table::contributors, Table::orgs, Table::predictions, Table::labels}) {
            auto& cols = m[t];
            const ojson proto = prototype(t);
            for (auto it = proto.begin(); it != proto.end(); ++it) cols.push_back(it.key());
        }
        return m;
    }();
    return columns.at(table);
}

// ---------------------------------------------------------------------------

Store::Store(const std::string& path) : path_(path) {
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
    if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        throw StoreError("cannot open store '" + path + "': " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    try {
        exec("PRAGMA foreign_keys = ON");
        if (path != ":memory:") exec("PRAGMA journal_mode = WAL");
        migrate();
    } catch (...) {
        sqlite3_close(db_);
        db_ = nullptr;
        throw;
    }
}

Store::~Store() {
    if (db_) sqlite3_close(db_);
}

void Store::exec(const char* sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw StoreError("store '" + path_ + "': " + msg);
    }
}

int Store::schema_version() const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "PRAGMA user_version");
    s.step();
    return static_cast<int>(s.i64(0));
}

void Store::migrate() {
    const int version = schema_version();
    if (version > kSchemaVersion)
        throw StoreError("store '" + path_ + "' has schema version " + std::to_string(version) +
                         ", newer than supported version " + std::to_string(kSchemaVersion));
    if (version == kSchemaVersion) return;
    Transaction tx(db_);
    if (version < 1) exec(kSchemaV1);
    exec(("PRAGMA user_version = " + std::to_string(kSchemaVersion)).c_str());
    tx.commit();
}

// -- institutions -------------------------------------------------------------

void Store::register_institution(const InstitutionProfile& profile) {
    validate(profile);
    std::lock_guard lock(mu_);
    Stmt pos(db_, "SELECT COALESCE((SELECT position FROM institutions WHERE id = ?1), "
                  "(SELECT COALESCE(MAX(position), -1) + 1 FROM institutions))");
    pos.bind(1, profile.id);
    pos.step();
    const auto position = pos.i64(0);
    Stmt s(db_, "INSERT INTO institutions(id, position, doc) VALUES(?1, ?2, ?3) "
                "ON CONFLICT(id) DO UPDATE SET doc = excluded.doc");
    s.bind(1, profile.id).bind(2, position).bind(3, ojson(profile).dump());
    s.run();
}

std::vector<InstitutionProfile> Store::institutions() const {
    std::lock_guard lock(mu_);
    std::vector<InstitutionProfile> out;
    Stmt s(db_, "SELECT doc FROM institutions ORDER BY position");
    while (s.step()) {
        const auto j = json::parse(s.text(0));
        InstitutionProfile p;
        p.id = j.at("id").get<std::string>();
        p.name = j.at("name").get<std::string>();
        p.acronym = j.at("acronym").get<std::string>();
        p.domain = j.at("domain").get<std::string>();
        p.alternates = j.at("alternates").get<std::vector<std::string>>();
        out.push_back(std::move(p));
    }
    return out;
}

bool Store::has_institution(const std::string& id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT EXISTS(SELECT 1 FROM institutions WHERE id = ?1) OR "
                "EXISTS(SELECT 1 FROM repo_matches WHERE institution_id = ?1)");
    s.bind(1, id);
    s.step();
    return s.boolean(0);
}

// -- repositories -------------------------------------------------------------

UpsertOutcome Store::upsert_repo(const RepoRecord& r) {
    validate(r);
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt exists(db_, "SELECT 1 FROM repos WHERE repo_id = ?1");
    exists.bind(1, r.repo_id);
    const bool existed = exists.step();

    Stmt s(db_, R"sql(
INSERT INTO repos(repo_id, numeric_id, name, description, homepage, readme_text, topics, primary_language,
  license_id, owner_login, owner_kind, stars, forks, subscribers, release_download_count, created_at, updated_at,
  has_readme, has_license, has_code_of_conduct, has_contributing, has_security_policy, has_issue_template,
  has_pr_template, has_description)
VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13, ?14, ?15, ?16, ?17, ?18, ?19, ?20, ?21, ?22, ?23,
  ?24, ?25)
ON CONFLICT(repo_id) DO UPDATE SET numeric_id = excluded.numeric_id, name = excluded.name,
  description = excluded.description, homepage = excluded.homepage, readme_text = excluded.readme_text,
  topics = excluded.topics, primary_language = excluded.primary_language, license_id = excluded.license_id,
  owner_login = excluded.owner_login, owner_kind = excluded.owner_kind, stars = excluded.stars,
  forks = excluded.forks, subscribers = excluded.subscribers,
  release_download_count = excluded.release_download_count, created_at = excluded.created_at,
  updated_at = excluded.updated_at, has_readme = excluded.has_readme, has_license = excluded.has_license,
  has_code_of_conduct = excluded.has_code_of_conduct, has_contributing = excluded.has_contributing,
  has_security_policy = excluded.has_security_policy, has_issue_template = excluded.has_issue_template,
  has_pr_template = excluded.has_pr_template, has_description = excluded.has_description
)sql");
    s.bind(1, r.repo_id).bind(2, r.numeric_id).bind(3, r.name).bind(4, r.description).bind(5, r.homepage);
    s.bind(6, r.readme_text).bind(7, json(r.topics).dump()).bind(8, r.primary_language).bind(9, r.license_id);
    s.bind(10, r.owner_login).bind(11, to_string(r.owner_kind)).bind(12, r.stars).bind(13, r.forks);
    s.bind(14, r.subscribers).bind(15, r.release_download_count).bind(16, r.created_at).bind(17, r.updated_at);
    const auto& c = r.community;
    s.bind(18, c.has_readme).bind(19, c.has_license).bind(20, c.has_code_of_conduct).bind(21, c.has_contributing);
    s.bind(22, c.has_security_policy).bind(23, c.has_issue_template).bind(24, c.has_pr_template);
    s.bind(25, c.has_description);
    s.run();

    for (const auto& m : r.matched_queries) {
        Stmt p(db_, "INSERT OR IGNORE INTO repo_matches(repo_id, institution_id, attribute, keyword) "
                    "VALUES(?1, ?2, ?3, ?4)");
        p.bind(1, r.repo_id).bind(2, m.institution_id).bind(3, to_string(m.attribute)).bind(4, m.keyword);
        p.run();
    }
    tx.commit();
    return existed ? UpsertOutcome::merged : UpsertOutcome::inserted;
}

std::optional<RepoRecord> Store::repo_unlocked(const std::string& repo_id) const {
    Stmt s(db_, (std::string("SELECT ") + kRepoColumns + " FROM repos WHERE repo_id = ?1").c_str());
    s.bind(1, repo_id);
    if (!s.step()) return std::nullopt;
    RepoRecord r = read_repo_row(s);
    Stmt m(db_, "SELECT institution_id, attribute, keyword FROM repo_matches WHERE repo_id = ?1 "
                "ORDER BY institution_id, attribute, keyword");
    m.bind(1, repo_id);
    while (m.step())
        r.matched_queries.push_back({m.text(0), search_attribute_from_string(m.text(1)), m.text(2)});
    std::sort(r.matched_queries.begin(), r.matched_queries.end());
    return r;
}

std::optional<RepoRecord> Store::repo(const std::string& repo_id) const {
    std::lock_guard lock(mu_);
    return repo_unlocked(repo_id);
}

std::vector<std::string> Store::repo_ids(const std::optional<std::string>& inst) const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    if (inst) {
        Stmt s(db_, "SELECT DISTINCT repo_id FROM repo_matches WHERE institution_id = ?1 ORDER BY repo_id");
        s.bind(1, *inst);
        while (s.step()) out.push_back(s.text(0));
    } else {
        Stmt s(db_, "SELECT repo_id FROM repos ORDER BY repo_id");
        while (s.step()) out.push_back(s.text(0));
    }
    return out;
}

std::vector<RepoRecord> Store::repos(const std::optional<std::string>& inst) const {
    std::lock_guard lock(mu_);
    std::vector<RepoRecord> out;
    for (const auto& id : repo_ids(inst)) out.push_back(*repo_unlocked(id));
    return out;
}

std::int64_t Store::raw_match_count(const std::optional<std::string>& inst) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, inst ? "SELECT COUNT(*) FROM repo_matches WHERE institution_id = ?1" : "SELECT COUNT(*) FROM repo_matches");
    if (inst) s.bind(1, *inst);
    s.step();
    return s.i64(0);
}

std::int64_t Store::unique_count(const std::optional<std::string>& inst) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, inst ? "SELECT COUNT(DISTINCT repo_id) FROM repo_matches WHERE institution_id = ?1"
                     : "SELECT COUNT(*) FROM repos");
    if (inst) s.bind(1, *inst);
    s.step();
    return s.i64(0);
}

// -- contributors / organizations ------------------------------------------

void Store::put_contributors(const std::string& repo_id, const std::vector<ContributorRecord>& contributors) {
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt exists(db_, "SELECT 1 FROM repos WHERE repo_id = ?1");
    exists.bind(1, repo_id);
    if (!exists.step()) throw NotFoundError("unknown repo '" + repo_id + "'");
    Stmt del(db_, "DELETE FROM contributors WHERE repo_id = ?1");
    del.bind(1, repo_id);
    del.run();
    for (const auto& c : contributors) {
        if (c.repo_id != repo_id) throw DataError("contributor " + c.username + " belongs to " + c.repo_id);
        if (c.rank < 1) throw DataError("contributor " + c.username + ": rank must be >= 1");
        Stmt s(db_, "INSERT INTO contributors(repo_id, username, rank, contributions, profiled, name, bio, location, "
                    "company, email, twitter, organizations) VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12)");
        s.bind(1, c.repo_id).bind(2, c.username).bind(3, c.rank).bind(4, c.contributions).bind(5, c.profiled);
        s.bind(6, c.name).bind(7, c.bio).bind(8, c.location).bind(9, c.company).bind(10, c.email);
        s.bind(11, c.twitter).bind(12, json(c.organizations).dump());
        try {
            s.run();
        } catch (const StoreError& e) {
            throw DataError("contributor (" + c.repo_id + ", " + c.username + "): " + e.what());
        }
    }
    Stmt mark(db_, "UPDATE repos SET contributors_fetched = 1 WHERE repo_id = ?1");
    mark.bind(1, repo_id);
    mark.run();
    tx.commit();
}

std::vector<ContributorRecord> Store::contributors(const std::string& repo_id) const {
    std::lock_guard lock(mu_);
    std::vector<ContributorRecord> out;
    Stmt s(db_, (std::string("SELECT ") + kContributorColumns + " FROM contributors WHERE repo_id = ?1 ORDER BY rank")
                    .c_str());
    s.bind(1, repo_id);
    while (s.step()) out.push_back(read_contributor_row(s));
    return out;
}

std::vector<ContributorRecord> Store::top_contributors(const std::string& repo_id, int n) const {
    auto all = contributors(repo_id);
    std::erase_if(all, [&](const auto& c) { return c.rank > n; });
    return all;
}

std::vector<std::string> Store::repos_missing_contributors() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    Stmt s(db_, "SELECT repo_id FROM repos WHERE contributors_fetched = 0 ORDER BY repo_id");
    while (s.step()) out.push_back(s.text(0));
    return out;
}

void Store::put_org(const OrgRecord& o) {
    if (o.login.empty()) throw DataError("organization login must not be empty");
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt s(db_, "INSERT INTO orgs(login, name, company, location, description, email, url, created_at) "
                "VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8) ON CONFLICT(login) DO UPDATE SET name = excluded.name, "
                "company = excluded.company, location = excluded.location, description = excluded.description, "
                "email = excluded.email, url = excluded.url, created_at = excluded.created_at");
    s.bind(1, o.login).bind(2, o.name).bind(3, o.company).bind(4, o.location).bind(5, o.description);
    s.bind(6, o.email).bind(7, o.url).bind(8, o.created_at);
    s.run();
    Stmt mark(db_, "INSERT OR IGNORE INTO owner_checks(login) VALUES(?1)");
    mark.bind(1, o.login);
    mark.run();
    tx.commit();
}

void Store::mark_owner_checked(const std::string& login) {
    std::lock_guard lock(mu_);
    Stmt mark(db_, "INSERT OR IGNORE INTO owner_checks(login) VALUES(?1)");
    mark.bind(1, login);
    mark.run();
}

std::optional<OrgRecord> Store::org(const std::string& login) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT login, name, company, location, description, email, url, created_at FROM orgs WHERE login = ?1");
    s.bind(1, login);
    if (!s.step()) return std::nullopt;
    return read_org_row(s);
}

std::vector<OrgRecord> Store::orgs() const {
    std::lock_guard lock(mu_);
    std::vector<OrgRecord> out;
    Stmt s(db_, "SELECT login, name, company, location, description, email, url, created_at FROM orgs ORDER BY login");
    while (s.step()) out.push_back(read_org_row(s));
    return out;
}

std::vector<std::string> Store::owners_missing_org() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    Stmt s(db_, "SELECT DISTINCT owner_login FROM repos WHERE owner_kind = 'organization' AND owner_login <> '' "
                "AND owner_login NOT IN (SELECT login FROM owner_checks) ORDER BY owner_login");
    while (s.step()) out.push_back(s.text(0));
    return out;
}

// -- predictions / labels ---------------------------------------------------

void Store::put_prediction(const Prediction& p) {
    if (!(p.probability >= 0.0 && p.probability <= 1.0))
        throw DataError("prediction for " + p.repo_id + ": probability " + std::to_string(p.probability) +
                        " outside [0,1]");
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt exists(db_, "SELECT 1 FROM repos WHERE repo_id = ?1");
    exists.bind(1, p.repo_id);
    if (!exists.step()) throw NotFoundError("prediction references unknown repo '" + p.repo_id + "'");
    Stmt s(db_, "INSERT INTO predictions(repo_id, institution_id, classifier, model_tag, probability, explanation, "
                "produced_at) VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7) ON CONFLICT(repo_id, institution_id, classifier, "
                "model_tag) DO UPDATE SET probability = excluded.probability, explanation = excluded.explanation, "
                "produced_at = excluded.produced_at");
    s.bind(1, p.repo_id).bind(2, p.institution_id).bind(3, to_string(p.classifier)).bind(4, p.model_tag);
    s.bind(5, p.probability).bind(6, p.explanation).bind(7, p.produced_at);
    s.run();
    Stmt clear(db_, "DELETE FROM review_flags WHERE repo_id = ?1 AND institution_id = ?2 AND classifier = ?3 "
                    "AND model_tag = ?4");
    clear.bind(1, p.repo_id).bind(2, p.institution_id).bind(3, to_string(p.classifier)).bind(4, p.model_tag);
    clear.run();
    tx.commit();
}

std::vector<Prediction> Store::predictions(const std::optional<std::string>& inst,
                                           const std::optional<ClassifierKind>& classifier) const {
    std::lock_guard lock(mu_);
    std::vector<Prediction> out;
    Stmt s(db_, "SELECT repo_id, institution_id, classifier, model_tag, probability, explanation, produced_at "
                "FROM predictions WHERE (?1 IS NULL OR institution_id = ?1) AND (?2 IS NULL OR classifier = ?2) "
                "ORDER BY repo_id, institution_id, classifier, model_tag");
    if (inst) s.bind(1, *inst);
    if (classifier) s.bind(2, to_string(*classifier));
    while (s.step()) out.push_back(read_prediction_row(s));
    return out;
}

void Store::flag_for_review(const ReviewFlag& f) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO review_flags(repo_id, institution_id, classifier, model_tag, reason, "
                "raw_response) VALUES(?1, ?2, ?3, ?4, ?5, ?6)");
    s.bind(1, f.repo_id).bind(2, f.institution_id).bind(3, to_string(f.classifier)).bind(4, f.model_tag);
    s.bind(5, f.reason).bind(6, f.raw_response);
    s.run();
}

std::vector<ReviewFlag> Store::review_flags() const {
    std::lock_guard lock(mu_);
    std::vector<ReviewFlag> out;
    Stmt s(db_, "SELECT repo_id, institution_id, classifier, model_tag, reason, raw_response FROM review_flags "
                "ORDER BY repo_id, institution_id, classifier, model_tag");
    while (s.step())
        out.push_back({s.text(0), s.text(1), classifier_from_string(s.text(2)), s.text(3), s.text(4), s.text(5)});
    return out;
}

LabelWrite Store::put_label(const LabelRecord& l) {
    if (l.label != 0 && l.label != 1) throw InputError("label must be 0 or 1, got " + std::to_string(l.label));
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt exists(db_, "SELECT 1 FROM repos WHERE repo_id = ?1");
    exists.bind(1, l.repo_id);
    if (!exists.step()) throw NotFoundError("unknown repo '" + l.repo_id + "'");

    Stmt prev(db_, "SELECT label FROM labels WHERE repo_id = ?1 AND institution_id = ?2 AND labeler = ?3");
    prev.bind(1, l.repo_id).bind(2, l.institution_id).bind(3, l.labeler);
    const bool existed = prev.step();
    const int old_label = existed ? static_cast<int>(prev.i64(0)) : 0;

    Stmt s(db_, "INSERT INTO labels(repo_id, institution_id, label, labeler, labeled_at) VALUES(?1, ?2, ?3, ?4, ?5) "
                "ON CONFLICT(repo_id, institution_id, labeler) DO UPDATE SET label = excluded.label, "
                "labeled_at = excluded.labeled_at");
    s.bind(1, l.repo_id).bind(2, l.institution_id).bind(3, l.label).bind(4, l.labeler).bind(5, l.labeled_at);
    s.run();
    if (existed) {
        Stmt a(db_, "INSERT INTO label_audit(repo_id, institution_id, labeler, old_label, new_label, changed_at) "
                    "VALUES(?1, ?2, ?3, ?4, ?5, ?6)");
        a.bind(1, l.repo_id).bind(2, l.institution_id).bind(3, l.labeler).bind(4, old_label).bind(5, l.label);
        a.bind(6, l.labeled_at);
        a.run();
    }
    tx.commit();
    return existed ? LabelWrite::overwritten : LabelWrite::inserted;
}

std::vector<LabelRecord> Store::labels(const std::optional<std::string>& inst) const {
    std::lock_guard lock(mu_);
    std::vector<LabelRecord> out;
    Stmt s(db_, "SELECT repo_id, institution_id, label, labeler, labeled_at FROM labels "
                "WHERE (?1 IS NULL OR institution_id = ?1) ORDER BY repo_id, institution_id, labeler");
    if (inst) s.bind(1, *inst);
    while (s.step()) out.push_back({s.text(0), s.text(1), static_cast<int>(s.i64(2)), s.text(3), s.text(4)});
    return out;
}

std::vector<LabelAuditEntry> Store::label_audit() const {
    std::lock_guard lock(mu_);
    std::vector<LabelAuditEntry> out;
    Stmt s(db_, "SELECT repo_id, institution_id, labeler, old_label, new_label, changed_at FROM label_audit ORDER BY id");
    while (s.step())
        out.push_back({s.text(0), s.text(1), s.text(2), static_cast<int>(s.i64(3)), static_cast<int>(s.i64(4)),
                       s.text(5)});
    return out;
}

std::vector<std::string> Store::query_candidates(const std::string& inst, const CandidateFilter& filter) const {
    std::lock_guard lock(mu_);
    if (!has_institution(inst)) throw NotFoundError("unknown institution '" + inst + "'");
    if (filter.max_probability && !filter.classifier)
        throw InputError("max_probability filter needs a classifier");

    std::vector<std::string> ids = repo_ids(inst);
    if (filter.unlabeled_only) {
        std::set<std::string> labeled;
        for (const auto& l : labels(inst)) labeled.insert(l.repo_id);
        std::erase_if(ids, [&](const auto& id) { return labeled.count(id) > 0; });
    }
    if (!filter.classifier) return ids;

    // Latest prediction per repo for this classifier.
    std::map<std::string, Prediction> latest;
    for (auto& p : predictions(inst, filter.classifier)) {
        auto it = latest.find(p.repo_id);
        if (it == latest.end() || p.produced_at > it->second.produced_at) latest[p.repo_id] = std::move(p);
    }
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& id : ids) {
        auto it = latest.find(id);
        if (it == latest.end()) continue;
        if (filter.max_probability && it->second.probability > *filter.max_probability) continue;
        ranked.emplace_back(it->second.probability, id);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> out;
    for (auto& [p, id] : ranked) out.push_back(std::move(id));
    return out;
}

// -- auxiliary ------------------------------------------------------------------

std::optional<std::vector<double>> Store::cached_embedding(const std::string& repo_id, const std::string& model_tag,
                                                           const std::string& text_hash) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT vec FROM embeddings WHERE repo_id = ?1 AND model_tag = ?2 AND text_hash = ?3");
    s.bind(1, repo_id).bind(2, model_tag).bind(3, text_hash);
    if (!s.step()) return std::nullopt;
    return s.doubles(0);
}

void Store::put_embedding(const std::string& repo_id, const std::string& model_tag, const std::string& text_hash,
                          const std::vector<double>& values) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO embeddings(repo_id, model_tag, text_hash, dim, vec) VALUES(?1, ?2, ?3, ?4, ?5)");
    s.bind(1, repo_id).bind(2, model_tag).bind(3, text_hash).bind(4, static_cast<std::int64_t>(values.size()));
    s.bind_blob(5, values.data(), values.size() * sizeof(double));
    s.run();
}

std::int64_t Store::embedding_count() const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT COUNT(*) FROM embeddings");
    s.step();
    return s.i64(0);
}

void Store::archive_payload(const std::string& key, const std::string& body) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO payloads(key, body) VALUES(?1, ?2)");
    s.bind(1, key).bind(2, body);
    s.run();
}

std::optional<std::string> Store::archived_payload(const std::string& key) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT body FROM payloads WHERE key = ?1");
    s.bind(1, key);
    if (!s.step()) return std::nullopt;
    return s.text(0);
}

void Store::set_training_set(const std::string& inst, const std::vector<std::string>& ids) {
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt del(db_, "DELETE FROM training_sets WHERE institution_id = ?1");
    del.bind(1, inst);
    del.run();
    for (const auto& id : ids) {
        Stmt s(db_, "INSERT OR IGNORE INTO training_sets(institution_id, repo_id) VALUES(?1, ?2)");
        s.bind(1, inst).bind(2, id);
        s.run();
    }
    tx.commit();
}

std::vector<std::string> Store::training_set(const std::string& inst) const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    Stmt s(db_, "SELECT repo_id FROM training_sets WHERE institution_id = ?1 ORDER BY repo_id");
    s.bind(1, inst);
    while (s.step()) out.push_back(s.text(0));
    return out;
}

void Store::put_report(const std::string& key, const json& report) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT OR REPLACE INTO reports(key, doc) VALUES(?1, ?2)");
    s.bind(1, key).bind(2, report.dump());
    s.run();
}

std::optional<json> Store::report(const std::string& key) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT doc FROM reports WHERE key = ?1");
    s.bind(1, key);
    if (!s.step()) return std::nullopt;
    return json::parse(s.text(0));
}

std::vector<std::string> Store::integrity_violations() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const char* table : {"predictions", "labels", "contributors", "repo_matches"}) {
        Stmt s(db_, (std::string("SELECT repo_id FROM ") + table +
                     " WHERE repo_id NOT IN (SELECT repo_id FROM repos) ORDER BY repo_id")
                        .c_str());
        while (s.step()) out.push_back(std::string(table) + ": " + s.text(0));
    }
    return out;
}

// -- export / import ----------------------------------------------------------

std::vector<ojson> Store::table_rows(Table table) const {
    std::lock_guard lock(mu_);
    std::vector<ojson> rows;
    switch (table) {
        case Table::repos:
            for (const auto& r : repos()) rows.emplace_back(r);
            break;
        case Table::contributors: {
            Stmt s(db_, (std::string("SELECT ") + kContributorColumns +
                         " FROM contributors ORDER BY repo_id, rank, username")
                            .c_str());
            while (s.step()) rows.emplace_back(read_contributor_row(s));
            break;
        }
        case Table::orgs:
            for (const auto& o : orgs()) rows.emplace_back(o);
            break;
        case Table::predictions:
            for (const auto& p : predictions()) rows.emplace_back(p);
            break;
        case Table::labels:
            for (const auto& l : labels()) rows.emplace_back(l);
            break;
    }
    return rows;
}

std::int64_t Store::export_table(Table table, ExportFormat format, std::ostream& out) const {
    const auto rows = table_rows(table);
    const auto& columns = export_columns(table);
    if (format == ExportFormat::csv) {
        out << text::csv_row(columns);
        for (const auto& row : rows) {
            std::vector<std::string> cells;
            for (const auto& col : columns) {
                const auto& v = row.at(col);
                cells.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            }
            out << text::csv_row(cells);
        }
    } else {
        for (const auto& row : rows) out << row.dump() << '\n';
    }
    if (!out) throw IoError("export of table failed: stream error");
    return static_cast<std::int64_t>(rows.size());
}

std::int64_t Store::export_table(Table table, ExportFormat format, const std::string& dest) const {
    std::ofstream out(dest, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + dest + "'");
    const auto n = export_table(table, format, out);
    out.flush();
    if (!out) throw IoError("write to '" + dest + "' failed");
    return n;
}

void Store::import_row(Table table, const ojson& row) {
    switch (table) {
        case Table::repos: upsert_repo(row.get<RepoRecord>()); break;
        case Table::contributors: {
            auto c = row.get<ContributorRecord>();
            auto existing = contributors(c.repo_id);
            std::erase_if(existing, [&](const auto& e) { return e.username == c.username; });
            existing.push_back(std::move(c));
            put_contributors(existing.front().repo_id, existing);
            break;
        }
        case Table::orgs: put_org(row.get<OrgRecord>()); break;
        case Table::predictions: put_prediction(row.get<Prediction>()); break;
        case Table::labels: put_label(row.get<LabelRecord>()); break;
    }
}

std::int64_t Store::import_table(Table table, ExportFormat format, std::istream& in) {
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string doc = buf.str();
    std::int64_t n = 0;
    std::lock_guard lock(mu_);
    if (format == ExportFormat::jsonl) {
        std::istringstream lines(doc);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.empty()) continue;
            import_row(table, ojson::parse(line));
            ++n;
        }
        return n;
    }
    const auto rows = text::csv_parse(doc);
    if (rows.empty()) return 0;
    const auto& header = rows.front();
    const ojson proto = prototype(table);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& cells = rows[i];
        if (cells.size() != header.size())
            throw DataError("csv row " + std::to_string(i) + " has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        ojson row = ojson::object();
        for (std::size_t c = 0; c < header.size(); ++c) {
            auto it = proto.find(header[c]);
            if (it == proto.end()) throw DataError("unknown column '" + header[c] + "'");
            row[header[c]] = it->is_string() ? ojson(cells[c]) : ojson::parse(cells[c]);
        }
        import_row(table, row);
        ++n;
    }
    return n;
}

}  // namespace repofind
