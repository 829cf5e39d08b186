#pragma once

// nlohmann::json conversions for the domain records. Key order follows the
// documented export column order.

#include <nlohmann/json.hpp>

#include "repofind/core.hpp"

namespace repofind {

void to_json(nlohmann::ordered_json& j, const MatchedQuery& m);
void from_json(const nlohmann::ordered_json& j, MatchedQuery& m);

void to_json(nlohmann::ordered_json& j, const RepoRecord& r);
void from_json(const nlohmann::ordered_json& j, RepoRecord& r);

void to_json(nlohmann::ordered_json& j, const ContributorRecord& c);
void from_json(const nlohmann::ordered_json& j, ContributorRecord& c);

void to_json(nlohmann::ordered_json& j, const OrgRecord& o);
void from_json(const nlohmann::ordered_json& j, OrgRecord& o);

void to_json(nlohmann::ordered_json& j, const LabelRecord& l);
void from_json(const nlohmann::ordered_json& j, LabelRecord& l);

void to_json(nlohmann::ordered_json& j, const Prediction& p);
void from_json(const nlohmann::ordered_json& j, Prediction& p);

void to_json(nlohmann::ordered_json& j, const InstitutionProfile& p);

}  // namespace repofind
