#pragma once

// Zero-shot LLM classifier: prompt rendering, the chat-completions client and
// the Probability/Explanation response parser.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repofind/core.hpp"
#include "repofind/http.hpp"

namespace repofind::llm {

inline constexpr std::size_t kPromptFieldLimit = 20'000;

struct ChatParams {
    std::string model = "gpt-4o";
    double temperature = 0.0;
    std::optional<std::uint64_t> seed = 42;
    int max_tokens = 150;
};

/// "<model>;seed=<seed|none>;t=<temperature>", stored as Prediction::model_tag.
std::string model_tag(const ChatParams& params);

struct ClassificationPrompt {
    std::string repo_id;
    std::string institution_id;
    std::string system_text;  // empty: the whole template goes in the user message
    std::string user_text;
    ChatParams params;
};

/// Definition, repository fields (each cut to `field_limit` code points),
/// institution context, then the fixed response-format instructions.
ClassificationPrompt build_prompt(const RepoRecord& repo, const OrgRecord* org,
                                  const std::vector<ContributorRecord>& top2, const InstitutionProfile& profile,
                                  const ChatParams& params = {}, std::size_t field_limit = kPromptFieldLimit);

/// Appended to the user message when a reply could not be parsed.
std::string_view format_reminder();

struct ParsedVerdict {
    double probability = 0.0;
    std::string explanation;
    std::string raw_response;

    friend bool operator==(const ParsedVerdict&, const ParsedVerdict&) = default;
};

class FormatError : public Error {
public:
    FormatError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
    const std::string& raw_response() const { return raw_; }

private:
    std::string raw_;
};

/// Accepts the first line of the form
///   [list marker] [**] Probability [**] : [**] <decimal>
/// (case-insensitive; markers "-", "*", "•", "12." or "12)"), and an
/// "Explanation:" line whose remainder plus following non-blank lines must be
/// non-empty. Throws FormatError otherwise, or when the value is outside [0,1].
ParsedVerdict parse_verdict(std::string_view response);

/// "Probability: 0.87\nExplanation: ..." with two decimals.
std::string render_verdict(double probability, std::string_view explanation);

struct Completion {
    std::string content;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

/// POST {base}/v1/chat/completions; reads choices[0].message.content and usage.
class ChatClient {
public:
    ChatClient(ApiClient& api, ChatParams params);

    const ChatParams& params() const { return params_; }
    /// Throws ProtocolError on a malformed body, NetworkError on a failed request.
    Completion complete(const std::string& system_text, const std::string& user_text);

    std::int64_t requests() const { return requests_; }
    std::int64_t prompt_tokens() const { return prompt_tokens_; }
    std::int64_t completion_tokens() const { return completion_tokens_; }

private:
    ApiClient& api_;
    ChatParams params_;
    std::int64_t requests_ = 0;
    std::int64_t prompt_tokens_ = 0;
    std::int64_t completion_tokens_ = 0;
};

struct LlmResult {
    ParsedVerdict verdict;
    int attempts = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

/// Sends the prompt; an unparseable reply is retried up to `format_retries`
/// times with the format reminder appended. Throws FormatError carrying the
/// last raw reply when every attempt fails. Token usage goes to `log`.
LlmResult classify(const ClassificationPrompt& prompt, ChatClient& client, RunLog* log = nullptr,
                   int format_retries = 3);

}  // namespace repofind::llm
