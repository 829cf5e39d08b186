#include "repofind/assembly.hpp"

#include "repofind/text.hpp"

namespace repofind {

std::vector<LabeledField> labeled_fields(const RepoRecord& repo, const OrgRecord* org,
                                         const std::vector<ContributorRecord>& top2) {
    std::vector<LabeledField> f{
        {"repo.name", repo.name},
        {"repo.description", repo.description},
        {"repo.homepage", repo.homepage},
        {"repo.topics", text::join(repo.topics, ", ")},
        {"repo.readme", repo.readme_text},
    };
    const OrgRecord empty_org;
    const OrgRecord& o = org ? *org : empty_org;
    f.push_back({"org.login", o.login});
    f.push_back({"org.name", o.name});
    f.push_back({"org.description", o.description});
    f.push_back({"org.company", o.company});
    f.push_back({"org.location", o.location});
    f.push_back({"org.email", o.email});
    f.push_back({"org.url", o.url});

    for (int rank = 1; rank <= 2; ++rank) {
        const ContributorRecord* c = nullptr;
        for (const auto& candidate : top2)
            if (candidate.rank == rank) c = &candidate;
        const ContributorRecord none;
        const auto& r = c ? *c : none;
        const std::string p = "contributor" + std::to_string(rank) + ".";
        f.push_back({p + "username", r.username});
        f.push_back({p + "name", r.name});
        f.push_back({p + "bio", r.bio});
        f.push_back({p + "location", r.location});
        f.push_back({p + "company", r.company});
        f.push_back({p + "email", r.email});
        f.push_back({p + "twitter", r.twitter});
        f.push_back({p + "organizations", text::join(r.organizations, ", ")});
    }
    return f;
}

std::string render_fields(const std::vector<LabeledField>& fields, std::size_t max_chars) {
    std::string out;
    for (const auto& f : fields) {
        out += f.label;
        out += ": ";
        out += text::utf8_truncate(f.value, max_chars);
        out += '\n';
    }
    return out;
}

}  // namespace repofind
