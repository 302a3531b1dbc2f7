#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace volcast {

/// Calendar date (proleptic Gregorian).
struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    auto operator<=>(const Date&) const = default;
};

/// Days since 1970-01-01.
std::int64_t days_from_civil(const Date& d);
Date civil_from_days(std::int64_t z);

/// 0 = Sunday .. 6 = Saturday.
int weekday(const Date& d);

bool is_valid_date(const Date& d);

/// Parses "YYYY-MM-DD"; throws std::invalid_argument on malformed input.
Date parse_date(const std::string& s);
std::string format_date(const Date& d);

/// Instant in time, seconds since the Unix epoch (UTC).
struct UtcTime {
    std::int64_t seconds = 0;

    auto operator<=>(const UtcTime&) const = default;
};

/// New York wall-clock time of an instant.
struct WallTime {
    Date date;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

/// Parses "YYYY-MM-DDTHH:MM:SS+HH:MM" (or -HH:MM, or trailing "Z").
/// Throws std::invalid_argument on malformed input.
UtcTime parse_timestamp(const std::string& s);
std::string format_timestamp(UtcTime t);

/// Converts an instant to New York wall time. Uses the US daylight-saving
/// rules in force since 2007 (second Sunday of March to first Sunday of
/// November); earlier timestamps are outside the supported data range and
/// are converted with the same rule.
WallTime to_new_york(UtcTime t);

/// UTC offset of New York in seconds (-4h or -5h) at the given instant.
int new_york_utc_offset(UtcTime t);

/// Trading-day calendar: weekends plus an explicit holiday list.
class TradingCalendar {
public:
    TradingCalendar() = default;
    explicit TradingCalendar(std::set<Date> holidays) : holidays_(std::move(holidays)) {}

    /// Loads a holiday file, one ISO date per line; blank lines and lines
    /// starting with '#' are skipped. Throws on malformed dates.
    static TradingCalendar load(const std::string& path);

    bool is_weekend(const Date& d) const;
    bool is_holiday(const Date& d) const { return holidays_.count(d) > 0; }
    bool is_trading_day(const Date& d) const { return !is_weekend(d) && !is_holiday(d); }

    /// First trading day strictly after d.
    Date next_trading_day(const Date& d) const;

    const std::set<Date>& holidays() const { return holidays_; }

private:
    std::set<Date> holidays_;
};

}  // namespace volcast
