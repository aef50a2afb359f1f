#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace gpuwatch {

// Civil-date <-> unix-seconds conversions, UTC only.

std::int64_t daysFromCivil(int year, int month, int day);
void civilFromDays(std::int64_t z, int& year, int& month, int& day);

inline std::int64_t utcMidnight(int year, int month, int day) {
    return daysFromCivil(year, month, day) * 86400;
}

// Truncate a timestamp to the start of its UTC day.
inline std::int64_t dayStart(std::int64_t ts) {
    std::int64_t d = ts / 86400;
    if (ts < 0 && ts % 86400 != 0) --d;
    return d * 86400;
}

// "YYYY-MM-DD" -> unix seconds at UTC midnight.
std::optional<std::int64_t> parseDate(const std::string& s);

// "YYYY-MM-DD HH:MM[:SS]" or "YYYY-MM-DDTHH:MM[:SS]" -> unix seconds.
// A bare date is accepted and maps to midnight.
std::optional<std::int64_t> parseDateTime(const std::string& s);

std::string formatDate(std::int64_t ts);
std::string formatDateTime(std::int64_t ts);

}  // namespace gpuwatch
