#pragma once

// Labeled text fields of a repository, its owning organization and its two
// top contributors, in the fixed order shared by the embedding text and the
// LLM prompt.

#include <string>
#include <utility>
#include <vector>

#include "repofind/core.hpp"

namespace repofind {

struct LabeledField {
    std::string label;  // e.g. "repo.readme", "contributor2.email"
    std::string value;
};

/// repo (name, description, homepage, topics, readme), org (login, name,
/// description, company, location, email, url), contributor1 and contributor2
/// (username, name, bio, location, company, email, twitter, organizations).
/// Absent components keep their labels with empty values.
std::vector<LabeledField> labeled_fields(const RepoRecord& repo, const OrgRecord* org,
                                         const std::vector<ContributorRecord>& top2);

/// "label: value" lines, each value cut to `max_chars` code points.
std::string render_fields(const std::vector<LabeledField>& fields, std::size_t max_chars);

}  // namespace repofind
