#include "repofind/llm.hpp"

#include <charconv>
#include <cstdio>

#include "repofind/assembly.hpp"
#include "repofind/text.hpp"

namespace repofind::llm {

std::string model_tag(const ChatParams& p) {
    char t[32];
    std::snprintf(t, sizeof t, "%g", p.temperature);
    return p.model + ";seed=" + (p.seed ? std::to_string(*p.seed) : std::string("none")) + ";t=" + t;
}

namespace {

constexpr std::string_view kIntro =
    "You are tasked with determining the likelihood that a GitHub repository belongs to a university based on the "
    "following definition:\n";

constexpr std::string_view kInstructions =
    "Based on this information and the definition above:\n"
    "- Estimate the probability between 0 and 1 (e.g., 0.87) representing how likely it is that the repository "
    "belongs to the university.\n"
    "- Provide a brief explanation (1-2 sentences) justifying your answer.\n"
    "Your response must be formatted exactly like this:\n"
    "Probability: <value between 0 and 1>\n"
    "Explanation: <your explanation here>\n";

constexpr std::string_view kReminder =
    "\n\nYour previous reply did not follow the required format. Reply with exactly these two lines and nothing "
    "else:\n"
    "Probability: <value between 0 and 1>\n"
    "Explanation: <your explanation here>\n";

}  // namespace

std::string_view format_reminder() { return kReminder; }

ClassificationPrompt build_prompt(const RepoRecord& repo, const OrgRecord* org,
                                  const std::vector<ContributorRecord>& top2, const InstitutionProfile& profile,
                                  const ChatParams& params, std::size_t field_limit) {
    std::string u;
    u += kIntro;
    u += "- Definition: ";
    u += affiliation_definition_text();
    u += "\n- Here is the information about the repository:\n";
    u += render_fields(labeled_fields(repo, org, top2), field_limit);
    u += "- And here is the university context:\n";
    u += render_fields({{"university.name", profile.name},
                        {"university.acronym", profile.acronym},
                        {"university.domain", profile.domain},
                        {"university.alternates", text::join(profile.alternates, ", ")}},
                       field_limit);
    u += '\n';
    u += kInstructions;
    return {repo.repo_id, profile.id, "", std::move(u), params};
}

// ---------------------------------------------------------------------------

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }
bool is_alnum(char c) { return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

void skip(std::string_view& s, auto pred) {
    while (!s.empty() && pred(s.front())) s.remove_prefix(1);
}

// Removes a leading list marker and emphasis markup.
std::string_view strip_marker(std::string_view s) {
    s = trim(s);
    if (s.starts_with("\xE2\x80\xA2")) {
        s.remove_prefix(3);
    } else if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        s.remove_prefix(1);
    } else if (s.size() >= 2 && s.front() == '*' && s[1] != '*') {
        s.remove_prefix(1);
    } else if (!s.empty() && is_digit(s.front())) {
        auto rest = s;
        skip(rest, is_digit);
        if (!rest.empty() && (rest.front() == '.' || rest.front() == ')')) s = rest.substr(1);
    }
    s = trim(s);
    skip(s, [](char c) { return c == '*' || c == '_'; });
    return s;
}

// Matches "<key> [markup] :" case-insensitively; returns the text after the colon.
std::optional<std::string_view> after_key(std::string_view line, std::string_view key) {
    auto s = strip_marker(line);
    if (s.size() < key.size()) return std::nullopt;
    for (std::size_t i = 0; i < key.size(); ++i)
        if (ascii_lower(s[i]) != key[i]) return std::nullopt;
    s.remove_prefix(key.size());
    skip(s, [](char c) { return c == '*' || c == '_' || is_space(c); });
    if (s.empty() || s.front() != ':') return std::nullopt;
    s.remove_prefix(1);
    skip(s, [](char c) { return c == '*' || c == '_' || is_space(c); });
    return s;
}

// Leading unsigned decimal ("0.87", "1", ".5", "1.") of `s`.
std::optional<double> leading_decimal(std::string_view s) {
    std::size_t n = 0;
    while (n < s.size() && is_digit(s[n])) ++n;
    std::size_t digits = n;
    if (n < s.size() && s[n] == '.') {
        ++n;
        while (n < s.size() && is_digit(s[n])) ++n, ++digits;
    }
    if (digits == 0) return std::nullopt;
    if (n < s.size() && (is_alnum(s[n]) || s[n] == '.')) return std::nullopt;
    std::string number(s.substr(0, n));
    if (number.front() == '.') number.insert(0, "0");
    if (number.back() == '.') number.pop_back();
    double value = 0.0;
    const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (ec != std::errc() || end != number.data() + number.size()) return std::nullopt;
    return value;
}

}  // namespace

ParsedVerdict parse_verdict(std::string_view response) {
    const std::string raw(response);
    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start <= response.size();) {
        auto nl = response.find('\n', start);
        if (nl == std::string_view::npos) nl = response.size();
        lines.push_back(response.substr(start, nl - start));
        start = nl + 1;
    }

    std::optional<double> probability;
    for (auto line : lines) {
        auto rest = after_key(line, "probability");
        if (!rest) continue;
        if (auto v = leading_decimal(*rest)) {
            probability = v;
            break;
        }
    }
    if (!probability) throw FormatError("response has no 'Probability: <decimal>' line", raw);
    if (!(*probability >= 0.0 && *probability <= 1.0))
        throw FormatError("probability " + std::to_string(*probability) + " is outside [0,1]", raw);

    std::string explanation;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto rest = after_key(lines[i], "explanation");
        if (!rest) continue;
        explanation = std::string(trim(*rest));
        for (std::size_t j = i + 1; j < lines.size() && !trim(lines[j]).empty(); ++j) {
            if (!explanation.empty()) explanation += '\n';
            explanation += trim(lines[j]);
        }
        break;
    }
    while (!explanation.empty() && (explanation.back() == '*' || explanation.back() == '_')) explanation.pop_back();
    if (trim(explanation).empty()) throw FormatError("response has no non-empty 'Explanation:' line", raw);
    return {*probability, explanation, raw};
}

std::string render_verdict(double probability, std::string_view explanation) {
    return "Probability: " + text::fixed(probability, 2) + "\nExplanation: " + std::string(explanation);
}

// ---------------------------------------------------------------------------

ChatClient::ChatClient(ApiClient& api, ChatParams params) : api_(api), params_(std::move(params)) {}

Completion ChatClient::complete(const std::string& system_text, const std::string& user_text) {
    nlohmann::json messages = nlohmann::json::array();
    if (!system_text.empty()) messages.push_back({{"role", "system"}, {"content", system_text}});
    messages.push_back({{"role", "user"}, {"content", user_text}});
    nlohmann::json body{{"model", params_.model},
                        {"messages", messages},
                        {"temperature", params_.temperature},
                        {"max_tokens", params_.max_tokens}};
    if (params_.seed) body["seed"] = *params_.seed;

    ++requests_;
    const auto response = api_.post_json("/v1/chat/completions", body);
    if (response.status != 200)
        throw NetworkError("chat service returned HTTP " + std::to_string(response.status));
    Completion c;
    try {
        const auto doc = nlohmann::json::parse(response.body);
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        c.content = content.is_null() ? std::string() : content.get<std::string>();
        if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
            c.prompt_tokens = usage->value("prompt_tokens", std::int64_t{0});
            c.completion_tokens = usage->value("completion_tokens", std::int64_t{0});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed chat response: ") + e.what());
    }
    prompt_tokens_ += c.prompt_tokens;
    completion_tokens_ += c.completion_tokens;
    return c;
}

LlmResult classify(const ClassificationPrompt& prompt, ChatClient& client, RunLog* log, int format_retries) {
    LlmResult result;
    std::string user = prompt.user_text;
    std::string last_raw;
    std::string last_error;
    for (int attempt = 0; attempt <= format_retries; ++attempt) {
        if (attempt == 1) user += kReminder;
        const auto completion = client.complete(prompt.system_text, user);
        ++result.attempts;
        result.prompt_tokens += completion.prompt_tokens;
        result.completion_tokens += completion.completion_tokens;
        if (log)
            log->event("llm_usage", {{"repo_id", prompt.repo_id},
                                     {"institution_id", prompt.institution_id},
                                     {"model_tag", model_tag(prompt.params)},
                                     {"attempt", attempt + 1},
                                     {"prompt_tokens", completion.prompt_tokens},
                                     {"completion_tokens", completion.completion_tokens}});
        try {
            result.verdict = parse_verdict(completion.content);
            return result;
        } catch (const FormatError& e) {
            last_raw = completion.content;
            last_error = e.what();
        }
    }
    throw FormatError("unparseable reply for " + prompt.repo_id + " after " + std::to_string(result.attempts) +
                          " attempts: " + last_error,
                      last_raw);
}

}  // namespace repofind::llm
