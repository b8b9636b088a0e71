#include "diax/timeparse.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "diax/error.hpp"

namespace diax {
namespace {

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

// Parses exactly [beg, end) of s as an unsigned decimal field.
bool parse_field(std::string_view s, std::size_t beg, std::size_t end, int& out) {
    if (end > s.size() || beg >= end) {
        return false;
    }
    for (std::size_t i = beg; i < end; ++i) {
        if (!is_digit(s[i])) {
            return false;
        }
    }
    auto r = std::from_chars(s.data() + beg, s.data() + end, out);
    return r.ec == std::errc{} && r.ptr == s.data() + end;
}

std::int64_t days_from_civil(int year, int month, int day) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                             std::chrono::day{unsigned(day)}};
    if (!ymd.ok()) {
        throw TimestampError("calendar date out of range: " + std::to_string(year) + "-" +
                             std::to_string(month) + "-" + std::to_string(day));
    }
    return sys_days{ymd}.time_since_epoch().count();
}

void check_clock_fields(int hour, int minute, int second) {
    if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 59) {
        throw TimestampError("clock field out of range");
    }
}

void check_offset(int offset_minutes) {
    if (offset_minutes < -kMaxOffsetMinutes || offset_minutes > kMaxOffsetMinutes) {
        throw TimestampError("offset exceeds +/-18:00");
    }
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

// Consumes an offset suffix starting at pos ("Z", "+HH:MM", "-HHMM").
// Returns false if the text at pos is not an offset at all.
bool parse_offset_suffix(std::string_view s, std::size_t pos, std::size_t& consumed, int& minutes) {
    if (pos >= s.size()) {
        return false;
    }
    if (s[pos] == 'Z') {
        minutes = 0;
        consumed = 1;
        return true;
    }
    const char sign = s[pos];
    if (sign != '+' && sign != '-') {
        return false;
    }
    int hh = 0;
    int mm = 0;
    if (!parse_field(s, pos + 1, pos + 3, hh)) {
        throw TimestampError("bad offset digits");
    }
    std::size_t p = pos + 3;
    if (p < s.size() && s[p] == ':') {
        ++p;
    }
    if (!parse_field(s, p, p + 2, mm)) {
        throw TimestampError("bad offset digits");
    }
    if (mm > 59) {
        throw TimestampError("offset minutes out of range");
    }
    minutes = hh * 60 + mm;
    if (sign == '-') {
        minutes = -minutes;
    }
    check_offset(minutes);
    consumed = p + 2 - pos;
    return true;
}

} // namespace

TimedInstant make_instant(int year, int month, int day, int hour, int minute, int second,
                          int offset_minutes, bool zone_aware, int millis) {
    check_clock_fields(hour, minute, second);
    check_offset(offset_minutes);
    if (millis < 0 || millis > 999) {
        throw TimestampError("millis out of range");
    }
    const std::int64_t local =
        days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
    TimedInstant t;
    t.epoch_seconds = local - std::int64_t(offset_minutes) * 60;
    t.millis = millis;
    t.offset_minutes = offset_minutes;
    t.zone_aware = zone_aware;
    return t;
}

TimedInstant parse_timestamp(std::string_view text, int fallback_offset_minutes) {
    check_offset(fallback_offset_minutes);
    if (text.size() < 19) {
        throw TimestampError("timestamp too short: '" + std::string(text) + "'");
    }
    if (text[4] != '-' || text[7] != '-' || (text[10] != ' ' && text[10] != 'T') ||
        text[13] != ':' || text[16] != ':') {
        throw TimestampError("timestamp separators malformed: '" + std::string(text) + "'");
    }
    int year, month, day, hour, minute, second;
    if (!parse_field(text, 0, 4, year) || !parse_field(text, 5, 7, month) ||
        !parse_field(text, 8, 10, day) || !parse_field(text, 11, 13, hour) ||
        !parse_field(text, 14, 16, minute) || !parse_field(text, 17, 19, second)) {
        throw TimestampError("timestamp digits malformed: '" + std::string(text) + "'");
    }

    std::size_t pos = 19;
    int millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        std::size_t digits = 0;
        while (pos + 1 + digits < text.size() && digits < 3 && is_digit(text[pos + 1 + digits])) {
            ++digits;
        }
        if (digits == 0 || (pos + 1 + digits < text.size() && is_digit(text[pos + 1 + digits]))) {
            throw TimestampError("fractional seconds must be 1-3 digits: '" + std::string(text) +
                                 "'");
        }
        int frac = 0;
        parse_field(text, pos + 1, pos + 1 + digits, frac);
        static constexpr int scale[4] = {0, 100, 10, 1};
        millis = frac * scale[digits];
        pos += 1 + digits;
    }

    bool aware = false;
    int offset = fallback_offset_minutes;
    if (pos < text.size()) {
        std::size_t p = pos;
        if (text[p] == ' ') {
            ++p;
        }
        std::size_t consumed = 0;
        if (!parse_offset_suffix(text, p, consumed, offset) || p + consumed != text.size()) {
            throw TimestampError("trailing characters after timestamp: '" + std::string(text) +
                                 "'");
        }
        aware = true;
    }

    TimedInstant t = make_instant(year, month, day, hour, minute, second, offset, aware, millis);
    return t;
}

TimedInstant parse_timestamp_format(std::string_view text, std::string_view pattern,
                                    int fallback_offset_minutes) {
    check_offset(fallback_offset_minutes);
    if (pattern == "epoch_s" || pattern == "epoch_ms") {
        double v = 0;
        auto r = std::from_chars(text.data(), text.data() + text.size(), v);
        if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
            throw TimestampError("bad epoch cell: '" + std::string(text) + "'");
        }
        const double ms = pattern == "epoch_s" ? v * 1000.0 : v;
        // Epoch counts name an absolute instant; keep them zone-aware at UTC.
        TimedInstant t;
        const std::int64_t total = std::llround(ms);
        t.epoch_seconds = floor_div(total, 1000);
        t.millis = int(total - t.epoch_seconds * 1000);
        t.offset_minutes = 0;
        t.zone_aware = true;
        return t;
    }

    int year = 1970, month = 1, day = 1, hour = 0, minute = 0, second = 0, millis = 0;
    int hour12 = -1;
    int pm = -1; // 0=AM 1=PM
    bool aware = false;
    int offset = fallback_offset_minutes;

    std::size_t ti = 0;
    auto take_number = [&](int max_digits, int& out) {
        std::size_t n = 0;
        while (ti + n < text.size() && n < std::size_t(max_digits) && is_digit(text[ti + n])) {
            ++n;
        }
        if (n == 0 || !parse_field(text, ti, ti + n, out)) {
            throw TimestampError("expected digits at position " + std::to_string(ti) + " in '" +
                                 std::string(text) + "'");
        }
        ti += n;
    };

    for (std::size_t pi = 0; pi < pattern.size(); ++pi) {
        if (pattern[pi] != '%') {
            if (ti >= text.size() || text[ti] != pattern[pi]) {
                throw TimestampError("cell '" + std::string(text) + "' does not match pattern '" +
                                     std::string(pattern) + "'");
            }
            ++ti;
            continue;
        }
        if (++pi >= pattern.size()) {
            throw TimestampError("dangling %% in pattern");
        }
        switch (pattern[pi]) {
        case 'Y':
            take_number(4, year);
            break;
        case 'm':
            take_number(2, month);
            break;
        case 'd':
            take_number(2, day);
            break;
        case 'H':
            take_number(2, hour);
            break;
        case 'I':
            take_number(2, hour12);
            break;
        case 'M':
            take_number(2, minute);
            break;
        case 'S': {
            take_number(2, second);
            if (ti < text.size() && text[ti] == '.' &&
                !(pi + 1 < pattern.size() && pattern[pi + 1] == '.')) {
                ++ti;
                std::size_t n = 0;
                while (ti + n < text.size() && n < 3 && is_digit(text[ti + n])) {
                    ++n;
                }
                if (n == 0) {
                    throw TimestampError("empty fraction in '" + std::string(text) + "'");
                }
                int frac = 0;
                parse_field(text, ti, ti + n, frac);
                static constexpr int scale[4] = {0, 100, 10, 1};
                millis = frac * scale[n];
                ti += n;
                while (ti < text.size() && is_digit(text[ti])) {
                    ++ti; // precision beyond milliseconds is dropped
                }
            }
            break;
        }
        case 'p': {
            if (ti + 2 > text.size()) {
                throw TimestampError("expected AM/PM in '" + std::string(text) + "'");
            }
            const char a = char(std::toupper(static_cast<unsigned char>(text[ti])));
            const char b = char(std::toupper(static_cast<unsigned char>(text[ti + 1])));
            if (b != 'M' || (a != 'A' && a != 'P')) {
                throw TimestampError("expected AM/PM in '" + std::string(text) + "'");
            }
            pm = a == 'P' ? 1 : 0;
            ti += 2;
            break;
        }
        case 'z': {
            std::size_t consumed = 0;
            if (!parse_offset_suffix(text, ti, consumed, offset)) {
                throw TimestampError("expected offset in '" + std::string(text) + "'");
            }
            aware = true;
            ti += consumed;
            break;
        }
        case '%':
            if (ti >= text.size() || text[ti] != '%') {
                throw TimestampError("cell does not match pattern");
            }
            ++ti;
            break;
        default:
            throw TimestampError(std::string("unsupported pattern specifier %") + pattern[pi]);
        }
    }
    if (ti != text.size()) {
        throw TimestampError("trailing characters in cell '" + std::string(text) + "'");
    }
    if (hour12 >= 0) {
        if (pm < 0) {
            throw TimestampError("%I requires %p");
        }
        if (hour12 < 1 || hour12 > 12) {
            throw TimestampError("12-hour field out of range");
        }
        hour = hour12 % 12 + (pm == 1 ? 12 : 0);
    }
    return make_instant(year, month, day, hour, minute, second, offset, aware, millis);
}

CivilTime civil_fields(const TimedInstant& t) {
    using namespace std::chrono;
    const std::int64_t local = t.epoch_seconds + std::int64_t(t.offset_minutes) * 60;
    const std::int64_t day_count = floor_div(local, 86400);
    const int sod = int(local - day_count * 86400);
    const year_month_day ymd{sys_days{days{day_count}}};
    CivilTime c;
    c.year = int(ymd.year());
    c.month = int(unsigned(ymd.month()));
    c.day = int(unsigned(ymd.day()));
    c.hour = sod / 3600;
    c.minute = sod % 3600 / 60;
    c.second = sod % 60;
    c.millis = t.millis;
    return c;
}

std::string format_timestamp(const TimedInstant& t) {
    const CivilTime c = civil_fields(t);
    char buf[48];
    int n = std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", c.year, c.month, c.day,
                          c.hour, c.minute, c.second);
    std::string out(buf, std::size_t(n));
    if (c.millis != 0) {
        n = std::snprintf(buf, sizeof buf, ".%03d", c.millis);
        out.append(buf, std::size_t(n));
    }
    if (t.zone_aware) {
        out += ' ';
        out += format_offset(t.offset_minutes);
    }
    return out;
}

TimedInstant advance(const TimedInstant& t, std::int64_t delta_seconds) {
    TimedInstant r = t;
    r.epoch_seconds += delta_seconds;
    return r;
}

TimedInstant advance_millis(const TimedInstant& t, std::int64_t delta_millis) {
    const std::int64_t total = t.epoch_millis() + delta_millis;
    TimedInstant r = t;
    r.epoch_seconds = floor_div(total, 1000);
    r.millis = int(total - r.epoch_seconds * 1000);
    return r;
}

std::int64_t seconds_of_local_day(const TimedInstant& t) {
    const std::int64_t local = t.epoch_seconds + std::int64_t(t.offset_minutes) * 60;
    return local - floor_div(local, 86400) * 86400;
}

TimedInstant floor_to_local_day(const TimedInstant& t) {
    TimedInstant r = t;
    r.epoch_seconds = t.epoch_seconds - seconds_of_local_day(t);
    r.millis = 0;
    return r;
}

int parse_offset_spec(std::string_view text) {
    std::size_t consumed = 0;
    int minutes = 0;
    if (!parse_offset_suffix(text, 0, consumed, minutes) || consumed != text.size()) {
        throw TimestampError("bad offset spec: '" + std::string(text) +
                             "' (expected +HH:MM, -HH:MM, or Z)");
    }
    return minutes;
}

std::string format_offset(int offset_minutes) {
    const char sign = offset_minutes < 0 ? '-' : '+';
    const int abs_min = offset_minutes < 0 ? -offset_minutes : offset_minutes;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%02d:%02d", sign, abs_min / 60, abs_min % 60);
    return buf;
}

} // namespace diax
