#include <doctest.h>

#include "gpuwatch/time_util.hpp"

using namespace gpuwatch;

TEST_SUITE("time_util") {

TEST_CASE("epoch anchors") {
    CHECK(daysFromCivil(1970, 1, 1) == 0);
    CHECK(utcMidnight(2025, 2, 17) == 1739750400);
    CHECK(utcMidnight(2025, 6, 12) == 1749686400);
    int y, m, d;
    civilFromDays(daysFromCivil(2026, 1, 19), y, m, d);
    CHECK(y == 2026);
    CHECK(m == 1);
    CHECK(d == 19);
}

TEST_CASE("leap year round trips") {
    for (std::int64_t day : {-1000ll, 0ll, 59ll, 20000ll, 20512ll}) {
        int y, m, d;
        civilFromDays(day, y, m, d);
        CHECK(daysFromCivil(y, m, d) == day);
    }
    CHECK(daysFromCivil(2024, 2, 29) + 1 == daysFromCivil(2024, 3, 1));
}

TEST_CASE("parse and format") {
    CHECK(parseDate("2025-02-17") == utcMidnight(2025, 2, 17));
    CHECK(parseDateTime("2025-02-16 12:50") ==
          utcMidnight(2025, 2, 16) + 12 * 3600 + 50 * 60);
    CHECK(parseDateTime("2025-02-16T12:50:30") ==
          utcMidnight(2025, 2, 16) + 12 * 3600 + 50 * 60 + 30);
    CHECK(parseDateTime("2025-02-16") == utcMidnight(2025, 2, 16));
    CHECK(!parseDate("2025/02/17").has_value());
    CHECK(!parseDateTime("garbage").has_value());
    CHECK(formatDate(utcMidnight(2025, 3, 21)) == "2025-03-21");
    CHECK(formatDateTime(utcMidnight(2025, 3, 21) + 9 * 3600 + 10 * 60) ==
          "2025-03-21 09:10:00");
}

TEST_CASE("day start truncation") {
    CHECK(dayStart(utcMidnight(2025, 2, 17) + 5000) == utcMidnight(2025, 2, 17));
    CHECK(dayStart(utcMidnight(2025, 2, 17)) == utcMidnight(2025, 2, 17));
}

}
