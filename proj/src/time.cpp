#include "matec/time.hpp"

#include <charconv>
#include <cstdio>

#include "matec/error.hpp"

namespace matec {

std::string format_instant(Instant t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), int(hms.hours().count()),
                  int(hms.minutes().count()), int(hms.seconds().count()));
    return buf;
}

namespace {

int field(std::string_view text, size_t pos, size_t len) {
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw Error("BadTimestamp", "malformed timestamp: " + std::string(text));
    }
    return value;
}

} // namespace

Instant parse_instant(std::string_view text) {
    using namespace std::chrono;
    const auto bad = [&] { return Error("BadTimestamp", "malformed timestamp: " + std::string(text)); };
    if (text.size() < 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
        text[16] != ':') {
        throw bad();
    }
    const auto zone = text.substr(19);
    if (zone != "Z" && zone != "+00:00") throw bad();

    const year_month_day ymd{year{field(text, 0, 4)}, month{unsigned(field(text, 5, 2))},
                             day{unsigned(field(text, 8, 2))}};
    if (!ymd.ok()) throw bad();
    const int h = field(text, 11, 2), m = field(text, 14, 2), s = field(text, 17, 2);
    if (h > 23 || m > 59 || s > 59) throw bad();
    return sys_days{ymd} + hours{h} + minutes{m} + seconds{s};
}

} // namespace matec
