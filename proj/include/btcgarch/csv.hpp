#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace btcg::csv {

/// Splits one line on commas. No quoting: none of the source formats need it.
std::vector<std::string_view> split(std::string_view line);

std::string_view trim(std::string_view s) noexcept;

/// Strips a trailing '\r' left by CRLF files.
std::string_view chomp(std::string_view line) noexcept;

/// Empty and "." are the missing-value markers.
bool is_missing_marker(std::string_view field) noexcept;

std::optional<double> parse_double(std::string_view field) noexcept;
std::optional<std::int64_t> parse_int(std::string_view field) noexcept;

/// Shortest representation that parses back to the same double.
std::string format_full(double v);

/// 6 significant digits, for human-facing reports.
std::string format_short(double v);

}  // namespace btcg::csv
