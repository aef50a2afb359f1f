#include "gpuwatch/time_util.hpp"

#include <cstdio>

namespace gpuwatch {

std::int64_t daysFromCivil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civilFromDays(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

std::optional<std::int64_t> parseDate(const std::string& s) {
    int y, m, d;
    if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3) return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    return utcMidnight(y, m, d);
}

std::optional<std::int64_t> parseDateTime(const std::string& s) {
    int y, m, d, hh = 0, mm = 0, ss = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%d%*1[ T]%d:%d:%d", &y, &m, &d, &hh, &mm, &ss);
    if (n < 3) return std::nullopt;
    if (n == 3) { hh = mm = ss = 0; }
    if (m < 1 || m > 12 || d < 1 || d > 31 || hh > 23 || mm > 59 || ss > 60)
        return std::nullopt;
    return utcMidnight(y, m, d) + hh * 3600 + mm * 60 + ss;
}

std::string formatDate(std::int64_t ts) {
    int y, m, d;
    civilFromDays(dayStart(ts) / 86400, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

std::string formatDateTime(std::int64_t ts) {
    int y, m, d;
    std::int64_t day = dayStart(ts);
    civilFromDays(day / 86400, y, m, d);
    std::int64_t rem = ts - day;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

}  // namespace gpuwatch
