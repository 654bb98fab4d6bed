#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace trafficproc {

// Calendar date, used as half of the correlation key.
struct Date {
    int year = 1970;
    unsigned month = 1;  // 1..12
    unsigned day = 1;    // 1..31

    auto operator<=>(const Date&) const = default;
    std::string to_string() const;  // YYYY-MM-DD
};

std::optional<Date> parse_date(std::string_view s);

// Date of a UTC millisecond instant, shifted by a fixed offset.
// The offset stands in for a timezone; default deployments use UTC.
Date date_of_ms(int64_t ms_since_epoch, int tz_offset_minutes = 0);

int64_t ms_at_midnight_utc(const Date& d);

// ISO-8601 timestamp, second precision: YYYY-MM-DDTHH:MM:SSZ
std::string iso_utc_seconds(int64_t ms_since_epoch);
// ISO-8601 timestamp, millisecond precision: YYYY-MM-DDTHH:MM:SS.mmmZ
std::string iso_utc_ms(int64_t ms_since_epoch);

std::optional<int64_t> parse_iso_utc(std::string_view s);

// Start of the wall-aligned window containing `ms`.
int64_t window_start(int64_t ms, int64_t window_len_ms);

}  // namespace trafficproc
