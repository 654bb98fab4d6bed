#include "trafficproc/time_util.hpp"

#include <chrono>
#include <cstdio>

#include "trafficproc/strings.hpp"

namespace trafficproc {

namespace {
using namespace std::chrono;

sys_days to_sys_days(const Date& d) {
    return sys_days{year{d.year} / month{d.month} / day{d.day}};
}
}  // namespace

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
    return buf;
}

std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto y = parse_ll(s.substr(0, 4));
    auto m = parse_ll(s.substr(5, 2));
    auto d = parse_ll(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    Date date{int(*y), unsigned(*m), unsigned(*d)};
    if (!(year{date.year} / month{date.month} / day{date.day}).ok()) return std::nullopt;
    return date;
}

Date date_of_ms(int64_t ms_since_epoch, int tz_offset_minutes) {
    int64_t shifted = ms_since_epoch + int64_t(tz_offset_minutes) * 60'000;
    sys_days sd = floor<days>(sys_time<milliseconds>(milliseconds(shifted)));
    year_month_day ymd{sd};
    return Date{int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

int64_t ms_at_midnight_utc(const Date& d) {
    return duration_cast<milliseconds>(to_sys_days(d).time_since_epoch()).count();
}

namespace {
void split_hms(int64_t ms, Date& date, int& h, int& m, int& s, int& milli) {
    date = date_of_ms(ms);
    int64_t rem = ms - ms_at_midnight_utc(date);
    milli = int(rem % 1000);
    int64_t secs = rem / 1000;
    h = int(secs / 3600);
    m = int((secs % 3600) / 60);
    s = int(secs % 60);
}
}  // namespace

std::string iso_utc_seconds(int64_t ms_since_epoch) {
    Date d;
    int h, m, s, milli;
    split_hms(ms_since_epoch, d, h, m, s, milli);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", d.year, d.month, d.day, h, m, s);
    return buf;
}

std::string iso_utc_ms(int64_t ms_since_epoch) {
    Date d;
    int h, m, s, milli;
    split_hms(ms_since_epoch, d, h, m, s, milli);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", d.year, d.month, d.day, h, m, s,
                  milli);
    return buf;
}

std::optional<int64_t> parse_iso_utc(std::string_view s) {
    // Accepts YYYY-MM-DDTHH:MM:SSZ and YYYY-MM-DDTHH:MM:SS.mmmZ; a bare date
    // means midnight.
    if (s.size() == 10) {
        auto d = parse_date(s);
        if (!d) return std::nullopt;
        return ms_at_midnight_utc(*d);
    }
    if (s.size() < 20 || s[10] != 'T' || s.back() != 'Z') return std::nullopt;
    auto d = parse_date(s.substr(0, 10));
    if (!d) return std::nullopt;
    auto h = parse_ll(s.substr(11, 2));
    auto m = parse_ll(s.substr(14, 2));
    auto sec = parse_ll(s.substr(17, 2));
    if (!h || !m || !sec || s[13] != ':' || s[16] != ':') return std::nullopt;
    int64_t milli = 0;
    if (s.size() == 24 && s[19] == '.') {
        auto mm = parse_ll(s.substr(20, 3));
        if (!mm) return std::nullopt;
        milli = *mm;
    } else if (s.size() != 20) {
        return std::nullopt;
    }
    return ms_at_midnight_utc(*d) + (*h * 3600 + *m * 60 + *sec) * 1000 + milli;
}

int64_t window_start(int64_t ms, int64_t window_len_ms) {
    int64_t q = ms / window_len_ms;
    if (ms < 0 && q * window_len_ms != ms) --q;  // floor for pre-epoch instants
    return q * window_len_ms;
}

}  // namespace trafficproc
