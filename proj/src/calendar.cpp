#include "volcast/calendar.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace volcast {

// Howard Hinnant's civil-days algorithms.
std::int64_t days_from_civil(const Date& d) {
    std::int64_t y = d.year;
    const int m = d.month;
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d.day) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int weekday(const Date& d) {
    const std::int64_t z = days_from_civil(d);
    return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

bool is_valid_date(const Date& d) {
    if (d.month < 1 || d.month > 12 || d.day < 1) return false;
    static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dim = mdays[d.month - 1];
    const bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
    if (d.month == 2 && leap) dim = 29;
    return d.day <= dim;
}

namespace {

bool all_digits(const std::string& s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return false;
    for (std::size_t i = pos; i < pos + n; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

int to_int(const std::string& s, std::size_t pos, std::size_t n) {
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) v = v * 10 + (s[i] - '0');
    return v;
}

}  // namespace

Date parse_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !all_digits(s, 0, 4) ||
        !all_digits(s, 5, 2) || !all_digits(s, 8, 2)) {
        throw std::invalid_argument("malformed date '" + s + "' (expected YYYY-MM-DD)");
    }
    Date d{to_int(s, 0, 4), to_int(s, 5, 2), to_int(s, 8, 2)};
    if (!is_valid_date(d)) throw std::invalid_argument("invalid calendar date '" + s + "'");
    return d;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

UtcTime parse_timestamp(const std::string& s) {
    // Shapes: YYYY-MM-DDTHH:MM:SSZ (20 chars) or YYYY-MM-DDTHH:MM:SS+HH:MM (25).
    if (s.size() != 20 && s.size() != 25)
        throw std::invalid_argument("malformed timestamp '" + s + "'");
    if (s[10] != 'T' || s[13] != ':' || s[16] != ':')
        throw std::invalid_argument("malformed timestamp '" + s + "'");
    const Date date = parse_date(s.substr(0, 10));
    if (!all_digits(s, 11, 2) || !all_digits(s, 14, 2) || !all_digits(s, 17, 2))
        throw std::invalid_argument("malformed timestamp '" + s + "'");
    const int hh = to_int(s, 11, 2), mm = to_int(s, 14, 2), ss = to_int(s, 17, 2);
    if (hh > 23 || mm > 59 || ss > 60)
        throw std::invalid_argument("invalid time of day in '" + s + "'");

    std::int64_t offset = 0;
    if (s.size() == 20) {
        if (s[19] != 'Z') throw std::invalid_argument("malformed timestamp '" + s + "'");
    } else {
        const char sign = s[19];
        if ((sign != '+' && sign != '-') || s[22] != ':' || !all_digits(s, 20, 2) ||
            !all_digits(s, 23, 2)) {
            throw std::invalid_argument("malformed timestamp '" + s + "'");
        }
        offset = to_int(s, 20, 2) * 3600 + to_int(s, 23, 2) * 60;
        if (sign == '-') offset = -offset;
    }
    const std::int64_t local = days_from_civil(date) * 86400 + hh * 3600 + mm * 60 + ss;
    return UtcTime{local - offset};
}

std::string format_timestamp(UtcTime t) {
    std::int64_t z = t.seconds / 86400;
    std::int64_t sod = t.seconds % 86400;
    if (sod < 0) {
        sod += 86400;
        --z;
    }
    const Date d = civil_from_days(z);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(d).c_str(),
                  static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60),
                  static_cast<int>(sod % 60));
    return buf;
}

namespace {

// UTC instant at which daylight saving begins/ends in the given year
// (post-2007 US rules: 02:00 EST on the second Sunday of March, 02:00 EDT
// on the first Sunday of November).
std::int64_t nth_sunday_utc(int year, int month, int nth, int utc_hour) {
    Date first{year, month, 1};
    const int wd = weekday(first);          // 0 = Sunday
    int day = 1 + (7 - wd) % 7 + (nth - 1) * 7;
    return days_from_civil(Date{year, month, day}) * 86400 + utc_hour * 3600;
}

std::int64_t dst_start_utc(int year) { return nth_sunday_utc(year, 3, 2, 7); }
std::int64_t dst_end_utc(int year) { return nth_sunday_utc(year, 11, 1, 6); }

}  // namespace

int new_york_utc_offset(UtcTime t) {
    // Approximate year from the instant; exact at the boundaries we care about
    // because both transitions sit well inside their year.
    const Date d = civil_from_days((t.seconds >= 0 ? t.seconds : t.seconds - 86399) / 86400);
    const bool dst = t.seconds >= dst_start_utc(d.year) && t.seconds < dst_end_utc(d.year);
    return dst ? -4 * 3600 : -5 * 3600;
}

WallTime to_new_york(UtcTime t) {
    const std::int64_t local = t.seconds + new_york_utc_offset(t);
    std::int64_t z = local / 86400;
    std::int64_t sod = local % 86400;
    if (sod < 0) {
        sod += 86400;
        --z;
    }
    WallTime w;
    w.date = civil_from_days(z);
    w.hour = static_cast<int>(sod / 3600);
    w.minute = static_cast<int>(sod / 60 % 60);
    w.second = static_cast<int>(sod % 60);
    return w;
}

TradingCalendar TradingCalendar::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open holiday file: " + path);
    std::set<Date> days;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t");
        std::string tok = line.substr(b, e - b + 1);
        if (tok[0] == '#') continue;
        try {
            days.insert(parse_date(tok));
        } catch (const std::invalid_argument& ex) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return TradingCalendar(std::move(days));
}

bool TradingCalendar::is_weekend(const Date& d) const {
    const int wd = weekday(d);
    return wd == 0 || wd == 6;
}

Date TradingCalendar::next_trading_day(const Date& d) const {
    std::int64_t z = days_from_civil(d);
    for (int i = 0; i < 3660; ++i) {
        const Date cand = civil_from_days(++z);
        if (is_trading_day(cand)) return cand;
    }
    throw std::runtime_error("no trading day within 10 years after " + format_date(d));
}

}  // namespace volcast
