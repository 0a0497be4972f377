#pragma once

#include <cstdio>
#include <string>

#include "fwc/common.hpp"

namespace fwc {

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    static Date parse(const std::string& text) {
        Date d;
        char sep1 = 0, sep2 = 0;
        if (std::sscanf(text.c_str(), "%d%c%d%c%d", &d.year, &sep1, &d.month, &sep2, &d.day) != 5 ||
            sep1 != '-' || sep2 != '-' || d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
            throw DataError("invalid date (expected YYYY-MM-DD): " + text);
        return d;
    }

    std::string to_string() const { return strf("%04d-%02d-%02d", year, month, day); }

    int month_day() const { return month * 100 + day; } // e.g. 0601 for Jun 1

    auto operator<=>(const Date&) const = default;
};

// A season as a month-day window applied to any year; wraps the year
// boundary when start > end (e.g. Dec 1 - Mar 31).
struct SeasonWindow {
    std::string name;
    int start_month = 1;
    int start_day = 1;
    int end_month = 12;
    int end_day = 31;

    bool contains(const Date& d) const {
        const int md = d.month_day();
        const int s = start_month * 100 + start_day;
        const int e = end_month * 100 + end_day;
        if (s <= e) return md >= s && md <= e;
        return md >= s || md <= e; // wrapped window
    }
};

inline SeasonWindow default_dry_season() { return {"dry", 6, 1, 8, 31}; }
inline SeasonWindow default_wet_season() { return {"wet", 12, 1, 3, 31}; }

} // namespace fwc
