#include "crimexfer/date.hpp"

#include "crimexfer/error.hpp"

#include <charconv>
#include <cstdio>

namespace crimexfer {

namespace {

namespace chr = std::chrono;

bool parse_uint(std::string_view text, unsigned& out) {
    if (text.empty()) return false;
    for (char c : text)
        if (c < '0' || c > '9') return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

} // namespace

StudyDate::StudyDate(int year, unsigned month, unsigned day) : year_(year), month_(month), day_(day) {
    const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
    if (!ymd.ok() || year < 1 || year > 9999)
        throw InvalidDate("invalid date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                          std::to_string(day));
}

StudyDate StudyDate::from_days(std::int64_t days_since_epoch) {
    const chr::year_month_day ymd{chr::sys_days{chr::days{days_since_epoch}}};
    return StudyDate(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

StudyDate StudyDate::parse(std::string_view iso) {
    unsigned y = 0, m = 0, d = 0;
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' || !parse_uint(iso.substr(0, 4), y) ||
        !parse_uint(iso.substr(5, 2), m) || !parse_uint(iso.substr(8, 2), d))
        throw InvalidDate("malformed date '" + std::string(iso) + "'");
    return StudyDate(static_cast<int>(y), m, d);
}

std::int64_t StudyDate::serial() const noexcept {
    const chr::year_month_day ymd{chr::year{year_}, chr::month{month_}, chr::day{day_}};
    return chr::sys_days{ymd}.time_since_epoch().count();
}

std::string StudyDate::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year_, month_, day_);
    return buf;
}

int day_of_week(const StudyDate& d) {
    const chr::weekday wd{chr::sys_days{chr::days{d.serial()}}};
    return static_cast<int>(wd.iso_encoding()) - 1;
}

YearMonth::YearMonth(int y, unsigned m) : year(y), month(m) {
    if (m < 1 || m > 12) throw InvalidDate("invalid month " + std::to_string(m));
}

YearMonth YearMonth::parse(std::string_view text) {
    unsigned y = 0, m = 0;
    if (text.size() != 7 || text[4] != '-' || !parse_uint(text.substr(0, 4), y) ||
        !parse_uint(text.substr(5, 2), m))
        throw InvalidDate("malformed month '" + std::string(text) + "'");
    return YearMonth(static_cast<int>(y), m);
}

YearMonth YearMonth::plus_months(int n) const {
    const int index = year * 12 + static_cast<int>(month) - 1 + n;
    const int y = index >= 0 ? index / 12 : (index - 11) / 12;
    return YearMonth(y, static_cast<unsigned>(index - y * 12 + 1));
}

StudyDate YearMonth::last_day() const {
    const chr::year_month_day_last ymdl{chr::year{year}, chr::month_day_last{chr::month{month}}};
    return StudyDate(year, month, static_cast<unsigned>(ymdl.day()));
}

std::string YearMonth::str() const {
    char buf[12];
    std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
    return buf;
}

DateRange months_back_window(YearMonth test_month, int k) {
    if (k < 1) throw WindowOutOfRange("window length must be >= 1 month, got " + std::to_string(k));
    return DateRange{test_month.plus_months(-k).first_day(), test_month.plus_months(-1).last_day()};
}

DateRange months_back_window(YearMonth test_month, int k, const DateRange& period) {
    const DateRange w = months_back_window(test_month, k);
    if (!period.contains(w))
        throw WindowOutOfRange(std::to_string(k) + "-month window before " + test_month.str() + " (" +
                               w.first.iso() + ".." + w.last.iso() + ") is outside the study period " +
                               period.first.iso() + ".." + period.last.iso());
    return w;
}

} // namespace crimexfer
