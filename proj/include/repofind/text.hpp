#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace repofind::text {

std::string to_lower(std::string_view s);

/// Replaces every run of whitespace with a single space and trims both ends.
std::string collapse_whitespace(std::string_view s);

/// Number of Unicode code points (invalid bytes count as one each).
std::size_t utf8_length(std::string_view s);

/// Keeps at most `max_chars` code points, never splitting a multi-byte sequence.
std::string_view utf8_truncate(std::string_view s, std::size_t max_chars);

/// True when `s` is valid UTF-8 without NUL bytes.
bool is_text(std::string_view s);

std::string url_encode(std::string_view s);
std::string url_decode(std::string_view s);

/// Decodes standard base64, skipping embedded newlines. Returns nullopt on malformed input.
std::optional<std::string> base64_decode(std::string_view s);
std::string base64_encode(std::string_view s);

std::string sha256_hex(std::string_view data);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view s, char sep);

/// Formats with a fixed number of decimals ("%.Nf").
std::string fixed(double value, int decimals);

/// Aligned plain-text table. Columns listed in `right_aligned` are padded on the left.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                         const std::vector<std::size_t>& right_aligned = {});

// RFC 4180 CSV.
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
/// Parses a whole CSV document into rows. Throws DataError on an unterminated quote.
std::vector<std::vector<std::string>> csv_parse(std::string_view document);

}  // namespace repofind::text
