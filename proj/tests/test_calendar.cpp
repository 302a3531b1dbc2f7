#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "volcast/calendar.hpp"

using namespace volcast;

TEST_CASE("civil day arithmetic round-trips") {
    CHECK(days_from_civil(Date{1970, 1, 1}) == 0);
    CHECK(days_from_civil(Date{2017, 1, 10}) == 17176);
    for (std::int64_t z = -1000; z < 40000; z += 37) {
        CHECK(days_from_civil(civil_from_days(z)) == z);
    }
}

TEST_CASE("weekday") {
    CHECK(weekday(Date{1970, 1, 1}) == 4);   // Thursday
    CHECK(weekday(Date{2017, 1, 10}) == 2);  // Tuesday
    CHECK(weekday(Date{2017, 2, 3}) == 5);   // Friday
    CHECK(weekday(Date{2026, 8, 23}) == 0);  // Sunday
}

TEST_CASE("date parsing") {
    CHECK(parse_date("2016-02-29") == Date{2016, 2, 29});
    CHECK(format_date(Date{2016, 2, 29}) == "2016-02-29");
    CHECK_THROWS_AS(parse_date("2017-02-29"), std::invalid_argument);
    CHECK_THROWS_AS(parse_date("2017-13-01"), std::invalid_argument);
    CHECK_THROWS_AS(parse_date("2017-1-01"), std::invalid_argument);
    CHECK_THROWS_AS(parse_date("20170101"), std::invalid_argument);
}

TEST_CASE("timestamp parsing with offsets") {
    CHECK(parse_timestamp("1970-01-01T00:00:00Z").seconds == 0);
    CHECK(parse_timestamp("1970-01-01T00:00:00+00:00").seconds == 0);
    // Same instant expressed three ways.
    const auto a = parse_timestamp("2017-01-10T14:30:00Z");
    const auto b = parse_timestamp("2017-01-10T09:30:00-05:00");
    const auto c = parse_timestamp("2017-01-10T20:00:00+05:30");
    CHECK(a == b);
    CHECK(a == c);
    CHECK(format_timestamp(a) == "2017-01-10T14:30:00Z");
    CHECK_THROWS_AS(parse_timestamp("2017-01-10 14:30:00Z"), std::invalid_argument);
    CHECK_THROWS_AS(parse_timestamp("2017-01-10T14:30:00"), std::invalid_argument);
    CHECK_THROWS_AS(parse_timestamp("2017-01-10T25:30:00Z"), std::invalid_argument);
}

TEST_CASE("new york conversion respects daylight saving") {
    // 2017 DST: begins Mar 12 (07:00 UTC), ends Nov 5 (06:00 UTC).
    auto w1 = to_new_york(parse_timestamp("2017-01-10T14:30:00Z"));  // EST
    CHECK(w1.date == Date{2017, 1, 10});
    CHECK(w1.hour == 9);
    CHECK(w1.minute == 30);

    auto w2 = to_new_york(parse_timestamp("2017-06-15T14:30:00Z"));  // EDT
    CHECK(w2.hour == 10);
    CHECK(w2.minute == 30);

    // One second either side of the spring-forward instant.
    CHECK(new_york_utc_offset(parse_timestamp("2017-03-12T06:59:59Z")) == -5 * 3600);
    CHECK(new_york_utc_offset(parse_timestamp("2017-03-12T07:00:00Z")) == -4 * 3600);
    // And the fall-back instant.
    CHECK(new_york_utc_offset(parse_timestamp("2017-11-05T05:59:59Z")) == -4 * 3600);
    CHECK(new_york_utc_offset(parse_timestamp("2017-11-05T06:00:00Z")) == -5 * 3600);

    // 2012 boundaries (second Sunday Mar = 11th, first Sunday Nov = 4th).
    CHECK(new_york_utc_offset(parse_timestamp("2012-03-11T06:59:00Z")) == -5 * 3600);
    CHECK(new_york_utc_offset(parse_timestamp("2012-03-11T07:01:00Z")) == -4 * 3600);
    CHECK(new_york_utc_offset(parse_timestamp("2012-11-04T05:59:00Z")) == -4 * 3600);
    CHECK(new_york_utc_offset(parse_timestamp("2012-11-04T06:01:00Z")) == -5 * 3600);

    // Date rolls backward across midnight when converting late-UTC stamps.
    auto w3 = to_new_york(parse_timestamp("2017-01-11T02:00:00Z"));
    CHECK(w3.date == Date{2017, 1, 10});
    CHECK(w3.hour == 21);
}

TEST_CASE("trading calendar") {
    TradingCalendar cal({Date{2017, 1, 16}});  // a Monday holiday
    CHECK(cal.is_trading_day(Date{2017, 1, 10}));
    CHECK_FALSE(cal.is_trading_day(Date{2017, 1, 14}));  // Saturday
    CHECK_FALSE(cal.is_trading_day(Date{2017, 1, 15}));  // Sunday
    CHECK_FALSE(cal.is_trading_day(Date{2017, 1, 16}));  // holiday
    CHECK(cal.next_trading_day(Date{2017, 1, 13}) == Date{2017, 1, 17});
    CHECK(cal.next_trading_day(Date{2017, 1, 10}) == Date{2017, 1, 11});
    // strictly after: a trading-day argument still advances
    CHECK(cal.next_trading_day(Date{2017, 1, 11}) == Date{2017, 1, 12});
}

TEST_CASE("holiday file loading") {
    const std::string path = std::string(VOLCAST_TEST_DATA_DIR) + "/tmp_holidays.txt";
    {
        std::ofstream out(path);
        out << "# exchange closures\n2017-01-16\n\n  2017-02-20  \n";
    }
    auto cal = TradingCalendar::load(path);
    CHECK(cal.holidays().size() == 2);
    CHECK(cal.is_holiday(Date{2017, 2, 20}));
    std::remove(path.c_str());

    {
        std::ofstream out(path);
        out << "2017-01-16\nnot-a-date\n";
    }
    CHECK_THROWS_WITH_AS(TradingCalendar::load(path),
                         doctest::Contains(":2:"), std::runtime_error);
    std::remove(path.c_str());
}
