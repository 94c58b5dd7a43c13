#pragma once

#include "crimexfer/date.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace crimexfer {

enum class CrimeClass { Property, Violent };

std::string_view to_string(CrimeClass c);
/// Accepts "property" / "violent"; throws DataError otherwise.
CrimeClass parse_crime_class(std::string_view text);

using CrimeClassMap = std::map<std::string, CrimeClass>;

/// Property: arson, burglary, larceny-theft, motor vehicle theft.
/// Violent: aggravated assault, forcible rape, murder, robbery.
CrimeClassMap default_crime_class_map();

struct Tract {
    std::string id;
    double x = 0.0; // planar meters
    double y = 0.0;

    friend bool operator==(const Tract&, const Tract&) = default;
};

struct InCity {
    std::string tract_id;
    friend auto operator<=>(const InCity&, const InCity&) = default;
};

struct External {
    std::string state;
    std::string county;
    friend auto operator<=>(const External&, const External&) = default;
};

using RegionRef = std::variant<InCity, External>;

inline bool is_in_city(const RegionRef& r) { return std::holds_alternative<InCity>(r); }
/// `t:<tract_id>` or `x:<state>/<county>`.
std::string format_region(const RegionRef& r);

struct CrimeEvent {
    StudyDate date;
    std::string tract_id;
    std::string category;

    friend auto operator<=>(const CrimeEvent&, const CrimeEvent&) = default;
};

struct ODFlowRecord {
    StudyDate date;
    RegionRef origin;
    RegionRef dest;
    double volume = 0.0;

    friend auto operator<=>(const ODFlowRecord&, const ODFlowRecord&) = default;
};

struct CityDataset {
    std::string city_name;
    std::vector<Tract> tracts;
    std::vector<CrimeEvent> crimes;
    std::vector<ODFlowRecord> od_flows;
    DateRange period;
    CrimeClassMap crime_class_map = default_crime_class_map();

    std::size_t tract_count() const { return tracts.size(); }
    /// id -> position in `tracts`.
    std::unordered_map<std::string, std::size_t> tract_index() const;
    /// Trailing `n` full calendar months of the study period, oldest first.
    std::vector<YearMonth> final_months(int n) const;

    friend bool operator==(const CityDataset&, const CityDataset&) = default;
};

/// Sorts tracts by id, crimes and flows by their natural order.
void normalize(CityDataset& ds);

constexpr std::size_t kMinTracts = 9;
constexpr int kMinStudyMonths = 9;

struct MonthDensity {
    YearMonth month;
    /// Percent of tracts with at least one incident during the month.
    double tract_month_pct = 0.0;
    /// Mean over the month's days of the percent of tracts that are hotspots that day.
    double daily_hotspot_pct = 0.0;
};

/// Mean and standard deviation across tracts of each tract's daily average.
struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
    friend bool operator==(const MeanSd&, const MeanSd&) = default;
};

struct FlowSummary {
    MeanSd in_city_volume;
    MeanSd out_city_volume;
    MeanSd in_city_tracts;
    MeanSd out_city_counties;
    MeanSd out_city_states;
    friend bool operator==(const FlowSummary&, const FlowSummary&) = default;
};

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    std::size_t tract_count = 0;
    std::map<CrimeClass, std::vector<MonthDensity>> density;
    FlowSummary flows;

    bool ok() const { return violations.empty(); }
};

ValidationReport validate_dataset(const CityDataset& ds);

/// Throws InvalidDataset listing the first violations if `validate_dataset` finds any.
void require_valid(const CityDataset& ds);

} // namespace crimexfer
