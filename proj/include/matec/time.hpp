#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace matec {

using Instant = std::chrono::sys_seconds;

// ISO-8601 UTC, second resolution: "2024-03-01T08:30:00Z".
std::string format_instant(Instant t);

// Accepts "YYYY-MM-DDTHH:MM:SS" followed by "Z" or "+00:00".
// Throws matec::Error("BadTimestamp") on anything else.
Instant parse_instant(std::string_view text);

} // namespace matec
