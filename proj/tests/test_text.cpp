#include <gtest/gtest.h>

#include <random>

#include "repofind/core.hpp"
#include "repofind/text.hpp"

using namespace repofind;

TEST(Text, CaseAndWhitespace) {
    EXPECT_EQ(text::to_lower("UC Santa CRUZ"), "uc santa cruz");
    EXPECT_EQ(text::collapse_whitespace("  UC \t Santa\n\nCruz "), "UC Santa Cruz");
}

TEST(Text, Utf8LengthAndTruncation) {
    const std::string s = "a\xC3\xA9\xE2\x82\xAC\xF0\x9F\x98\x80z";  // a é € 😀 z
    EXPECT_EQ(text::utf8_length(s), 5u);
    EXPECT_EQ(text::utf8_truncate(s, 2), "a\xC3\xA9");
    EXPECT_EQ(text::utf8_truncate(s, 4), "a\xC3\xA9\xE2\x82\xAC\xF0\x9F\x98\x80");
    EXPECT_EQ(text::utf8_truncate(s, 99), s);
    EXPECT_TRUE(text::is_text(s));
    EXPECT_FALSE(text::is_text(std::string("a\0b", 3)));
    EXPECT_FALSE(text::is_text("\xC3"));
}

TEST(Text, UrlCoding) {
    EXPECT_EQ(text::url_encode("\"UC Davis\" in:name"), "%22UC%20Davis%22%20in%3Aname");
    EXPECT_EQ(text::url_decode("%22UC%20Davis%22+in%3Aname"), "\"UC Davis\" in:name");
    EXPECT_EQ(text::url_decode(text::url_encode("a/b?c=d&e")), "a/b?c=d&e");
}

TEST(Text, Base64RoundTripAndNewlines) {
    std::mt19937 rng(3);
    for (int n = 0; n < 64; ++n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += static_cast<char>(rng() & 0xFF);
        const auto enc = text::base64_encode(s);
        EXPECT_EQ(text::base64_decode(enc), s);
        std::string wrapped;
        for (std::size_t i = 0; i < enc.size(); i += 7) wrapped += enc.substr(i, 7) + "\n";
        EXPECT_EQ(text::base64_decode(wrapped), s);
    }
    EXPECT_EQ(text::base64_decode("aGVsbG8="), "hello");
    EXPECT_FALSE(text::base64_decode("a$==").has_value());
}

TEST(Text, Sha256KnownVectors) {
    EXPECT_EQ(text::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Text, SplitJoin) {
    EXPECT_EQ(text::split("a,,b", ','), (std::vector<std::string>{"a", "", "b"}));
    EXPECT_EQ(text::join({"a", "b", "c"}, ", "), "a, b, c");
    EXPECT_EQ(text::fixed(0.125, 2), "0.12");
    EXPECT_EQ(text::fixed(54.16, 1), "54.2");
}

TEST(Text, CsvRoundTrip) {
    const std::vector<std::vector<std::string>> rows{
        {"plain", "with,comma", "with \"quote\"", "multi\nline", ""},
        {"\xC3\xA9", " lead", "trail ", "a\r\nb", "x"},
    };
    std::string doc;
    for (const auto& r : rows) doc += text::csv_row(r);
    EXPECT_EQ(text::csv_parse(doc), rows);
    EXPECT_THROW(text::csv_parse("\"open"), DataError);
}

TEST(Text, TableAlignment) {
    const auto t = text::format_table({"Name", "N"}, {{"\xC3\xA9t\xC3\xA9", "5"}, {"x", "10"}}, {1});
    EXPECT_EQ(t, "Name   N\n--------\n\xC3\xA9t\xC3\xA9    5\nx     10\n");
}
