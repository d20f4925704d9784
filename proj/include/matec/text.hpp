#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace matec::text {

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);

// Lowercase, punctuation folded to spaces, whitespace collapsed. Used for
// consensus matching and finding deduplication.
std::string normalize(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Whole-string decimal parse (after trimming); nullopt if anything is left over.
std::optional<double> parse_number(std::string_view s);

// Shortest round-trippable decimal rendering ("39.2", "1500", "1.1").
std::string format_number(double v);

// 64-bit FNV-1a. Stable across processes and platforms.
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace matec::text
