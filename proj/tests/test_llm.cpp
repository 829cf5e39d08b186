#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "oracles.hpp"
#include "repofind/llm.hpp"
#include "repofind/mock.hpp"
#include "support.hpp"

using namespace repofind;
using namespace repofind::llm;

namespace {

HttpResponse chat_reply(const std::string& content) {
    const nlohmann::json body{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}},
                              {"usage", {{"prompt_tokens", 100}, {"completion_tokens", 20}}}};
    return {200, body.dump(), {}};
}

std::string user_message(const HttpRequest& r) {
    const auto body = nlohmann::json::parse(r.body);
    return body["messages"].back()["content"].get<std::string>();
}

std::string grid_value(int i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%.2f", i / 100.0);
    return buf;
}

}  // namespace

TEST(LlmPrompt, CarriesTemplateDefinitionAndContext) {
    const auto p = fixture::profile("ucsc");
    auto r = fixture::repo("lab/tool", "A tool");
    const auto prompt = build_prompt(r, nullptr, {}, p);
    const auto& u = prompt.user_text;
    EXPECT_NE(u.find("Probability: <value between 0 and 1>\n"), std::string::npos);
    EXPECT_NE(u.find("Explanation: <your explanation here>\n"), std::string::npos);
    EXPECT_NE(u.find("Estimate the probability between 0 and 1 (e.g., 0.87)"), std::string::npos);
    EXPECT_NE(u.find(std::string(affiliation_definition_text())), std::string::npos);
    EXPECT_NE(u.find("university.domain: ucsc.edu"), std::string::npos);
    EXPECT_NE(u.find("university.alternates: UC Santa Cruz"), std::string::npos);
    EXPECT_LT(u.find("Definition:"), u.find("repo.name: tool"));
    EXPECT_LT(u.find("repo.name: tool"), u.find("university.name"));
    EXPECT_LT(u.find("university.name"), u.find("Your response must be formatted"));
    EXPECT_EQ(build_prompt(r, nullptr, {}, p).user_text, u);
    EXPECT_EQ(prompt.repo_id, "lab/tool");
    EXPECT_EQ(prompt.institution_id, "ucsc");
}

TEST(LlmPrompt, ReadmeCutAtTwentyThousand) {
    auto r = fixture::repo("lab/tool");
    r.readme_text = std::string(25000, 'y');
    const auto u = build_prompt(r, nullptr, {}, fixture::profile()).user_text;
    const auto start = u.find("repo.readme: ") + 13;
    EXPECT_EQ(u.find('\n', start) - start, 20000u);
}

TEST(LlmPrompt, ModelTagRecordsSeedAndTemperature) {
    EXPECT_EQ(model_tag({}), "gpt-4o;seed=42;t=0");
    ChatParams p;
    p.model = "gpt-3.5-turbo";
    p.seed.reset();
    EXPECT_EQ(model_tag(p), "gpt-3.5-turbo;seed=none;t=0");
}

TEST(LlmParser, RoundTripsProbabilityGrid) {
    for (int i = 0; i <= 100; ++i) {
        const auto v = parse_verdict(render_verdict(i / 100.0, "Because."));
        EXPECT_EQ(grid_value(static_cast<int>(std::lround(v.probability * 100))), grid_value(i));
        EXPECT_EQ(v.probability, std::stod(grid_value(i)));
        EXPECT_EQ(v.explanation, "Because.");
    }
}

TEST(LlmParser, ToleratesCommonDrift) {
    EXPECT_EQ(parse_verdict("Probability: 0.87\nExplanation: Lab-owned repository.").probability, 0.87);
    EXPECT_EQ(parse_verdict("- Probability: 0.30   \nExplanation: x").probability, 0.30);
    EXPECT_EQ(parse_verdict("**Probability:** 0.5\n**Explanation:** y").probability, 0.5);
    EXPECT_EQ(parse_verdict("Sure!\n1. PROBABILITY: 1\n2. explanation: z").probability, 1.0);
    EXPECT_EQ(parse_verdict("\xE2\x80\xA2 probability : .25\nExplanation:\nfirst\nsecond\n\nignored").explanation,
              "first\nsecond");
}

TEST(LlmParser, RejectsMalformedReplies) {
    for (const char* bad : {"Probability: 1.2\nExplanation: x", "Probability: -0.1\nExplanation: x",
                            "Probability: high\nExplanation: x", "Probability: 0.5", "Explanation: x",
                            "Probability: 0.5\nExplanation:   ", "", "Probability: nan\nExplanation: x"}) {
        EXPECT_THROW(parse_verdict(bad), FormatError) << bad;
    }
}

TEST(LlmParser, SurvivesMutationFuzz) {
    int parsed = 0;
    for (const auto& s : oracle::fuzz_corpus(10000, 10000)) {
        try {
            const auto v = parse_verdict(s);
            ASSERT_GE(v.probability, 0.0) << s;
            ASSERT_LE(v.probability, 1.0) << s;
            ASSERT_FALSE(v.explanation.empty()) << s;
            ASSERT_EQ(v.raw_response, s);
            ++parsed;
        } catch (const FormatError&) {
        }
    }
    EXPECT_GT(parsed, 0);
}

TEST(LlmClassify, RetriesWithReminderThenSucceeds) {
    std::vector<std::string> seen;
    fixture::InProcess env([&](const HttpRequest& r) {
        seen.push_back(user_message(r));
        return chat_reply(seen.size() < 3 ? "I think it is likely." : "Probability: 0.64\nExplanation: ok");
    });
    ChatClient client(env.api, {});
    const auto prompt = build_prompt(fixture::repo("o/r"), nullptr, {}, fixture::profile());
    const auto result = classify(prompt, client, &env.log);
    EXPECT_EQ(result.attempts, 3);
    EXPECT_EQ(result.verdict.probability, 0.64);
    EXPECT_EQ(result.prompt_tokens, 300);
    EXPECT_EQ(result.completion_tokens, 60);
    EXPECT_EQ(seen[0], prompt.user_text);
    EXPECT_EQ(seen[1], prompt.user_text + std::string(format_reminder()));
    int usage_events = 0;
    for (const auto& e : env.log.entries()) usage_events += e.dump().find("llm_usage") != std::string::npos;
    EXPECT_EQ(usage_events, 3);
}

TEST(LlmClassify, GivesUpAfterThreeRetries) {
    int calls = 0;
    fixture::InProcess env([&](const HttpRequest&) {
        ++calls;
        return chat_reply("no idea");
    });
    ChatClient client(env.api, {});
    try {
        classify(build_prompt(fixture::repo("o/r"), nullptr, {}, fixture::profile()), client);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.raw_response(), "no idea");
    }
    EXPECT_EQ(calls, 4);
}

TEST(LlmClassify, RequestCarriesModelParameters) {
    nlohmann::json body;
    fixture::InProcess env([&](const HttpRequest& r) {
        body = nlohmann::json::parse(r.body);
        return chat_reply("Probability: 0.1\nExplanation: e");
    });
    ChatClient client(env.api, {});
    classify(build_prompt(fixture::repo("o/r"), nullptr, {}, fixture::profile()), client);
    EXPECT_EQ(body["model"], "gpt-4o");
    EXPECT_EQ(body["temperature"], 0.0);
    EXPECT_EQ(body["seed"], 42);
    EXPECT_EQ(body["max_tokens"], 150);
}

TEST(LlmClassify, MalformedServiceBodyIsProtocolError) {
    fixture::InProcess env([](const HttpRequest&) { return HttpResponse{200, "{\"choices\": []}", {}}; });
    ChatClient client(env.api, {});
    EXPECT_THROW(client.complete("", "hi"), ProtocolError);
}

TEST(LlmClassify, MockChatScoresByEvidence) {
    mock::MockChat chat;
    fixture::InProcess env([&](const HttpRequest& r) { return chat.handle(r); });
    ChatClient client(env.api, {});
    const auto p = fixture::profile("ucsc");
    auto r = fixture::repo("o/r", "genomics at ucsc.edu");
    EXPECT_EQ(classify(build_prompt(r, nullptr, {}, p), client).verdict.probability, 0.92);
    r.description = "hobby project";
    EXPECT_EQ(classify(build_prompt(r, nullptr, {}, p), client).verdict.probability, 0.08);
}
