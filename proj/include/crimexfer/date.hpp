#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace crimexfer {

/// A validated proleptic-Gregorian calendar date.
class StudyDate {
public:
    StudyDate() = default; // 1970-01-01
    /// Throws InvalidDate for impossible dates (e.g. 2021-02-29).
    StudyDate(int year, unsigned month, unsigned day);

    static StudyDate from_days(std::int64_t days_since_epoch);
    /// Strict `YYYY-MM-DD`; throws InvalidDate.
    static StudyDate parse(std::string_view iso);

    int year() const noexcept { return year_; }
    unsigned month() const noexcept { return month_; }
    unsigned day() const noexcept { return day_; }

    /// Days since 1970-01-01.
    std::int64_t serial() const noexcept;
    StudyDate plus_days(std::int64_t n) const { return from_days(serial() + n); }
    std::string iso() const;

    friend auto operator<=>(const StudyDate&, const StudyDate&) = default;
    friend bool operator==(const StudyDate&, const StudyDate&) = default;

private:
    int year_ = 1970;
    unsigned month_ = 1;
    unsigned day_ = 1;
};

/// Days between two dates, b - a.
inline std::int64_t days_between(const StudyDate& a, const StudyDate& b) { return b.serial() - a.serial(); }

/// 0 = Monday ... 6 = Sunday.
int day_of_week(const StudyDate& d);

struct YearMonth {
    int year = 1970;
    unsigned month = 1;

    YearMonth() = default;
    YearMonth(int y, unsigned m);
    static YearMonth of(const StudyDate& d) { return YearMonth(d.year(), d.month()); }
    /// Accepts `YYYY-MM`.
    static YearMonth parse(std::string_view text);

    YearMonth plus_months(int n) const;
    StudyDate first_day() const { return StudyDate(year, month, 1); }
    StudyDate last_day() const;
    unsigned length_days() const { return last_day().day(); }
    std::string str() const;

    friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
    friend bool operator==(const YearMonth&, const YearMonth&) = default;
};

/// Inclusive date range.
struct DateRange {
    StudyDate first;
    StudyDate last;

    bool contains(const StudyDate& d) const { return first <= d && d <= last; }
    bool contains(const DateRange& r) const { return contains(r.first) && contains(r.last); }
    std::int64_t days() const { return days_between(first, last) + 1; }

    friend bool operator==(const DateRange&, const DateRange&) = default;
};

/// First day of the month k months before `test_month` through the last day of the
/// month preceding it.
DateRange months_back_window(YearMonth test_month, int k);

/// Same, but throws WindowOutOfRange if the window does not fit inside `period`.
DateRange months_back_window(YearMonth test_month, int k, const DateRange& period);

} // namespace crimexfer
