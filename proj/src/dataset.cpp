#include "crimexfer/dataset.hpp"

#include "crimexfer/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace crimexfer {

std::string_view to_string(CrimeClass c) { return c == CrimeClass::Property ? "property" : "violent"; }

CrimeClass parse_crime_class(std::string_view text) {
    if (text == "property") return CrimeClass::Property;
    if (text == "violent") return CrimeClass::Violent;
    throw DataError("unknown crime class '" + std::string(text) + "' (expected property|violent)");
}

CrimeClassMap default_crime_class_map() {
    return {
        {"arson", CrimeClass::Property},
        {"burglary", CrimeClass::Property},
        {"larceny-theft", CrimeClass::Property},
        {"motor vehicle theft", CrimeClass::Property},
        {"aggravated assault", CrimeClass::Violent},
        {"forcible rape", CrimeClass::Violent},
        {"murder", CrimeClass::Violent},
        {"robbery", CrimeClass::Violent},
    };
}

std::string format_region(const RegionRef& r) {
    if (const auto* in = std::get_if<InCity>(&r)) return "t:" + in->tract_id;
    const auto& ext = std::get<External>(r);
    return "x:" + ext.state + "/" + ext.county;
}

std::unordered_map<std::string, std::size_t> CityDataset::tract_index() const {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(tracts.size());
    for (std::size_t i = 0; i < tracts.size(); ++i) index.emplace(tracts[i].id, i);
    return index;
}

std::vector<YearMonth> CityDataset::final_months(int n) const {
    std::vector<YearMonth> full;
    for (YearMonth m = YearMonth::of(period.first); m.first_day() <= period.last; m = m.plus_months(1))
        if (period.contains(m.first_day()) && period.contains(m.last_day())) full.push_back(m);
    if (n < 0 || static_cast<std::size_t>(n) > full.size())
        throw WindowOutOfRange("study period has " + std::to_string(full.size()) + " full months, " +
                               std::to_string(n) + " requested");
    return {full.end() - n, full.end()};
}

void normalize(CityDataset& ds) {
    std::sort(ds.tracts.begin(), ds.tracts.end(), [](const Tract& a, const Tract& b) { return a.id < b.id; });
    std::sort(ds.crimes.begin(), ds.crimes.end());
    std::sort(ds.od_flows.begin(), ds.od_flows.end());
}

namespace {

MeanSd mean_sd(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

int full_months(const DateRange& p) {
    int n = 0;
    for (YearMonth m = YearMonth::of(p.first); m.first_day() <= p.last; m = m.plus_months(1))
        if (p.contains(m.first_day()) && p.contains(m.last_day())) ++n;
    return n;
}

} // namespace

ValidationReport validate_dataset(const CityDataset& ds) {
    ValidationReport rep;
    rep.tract_count = ds.tracts.size();
    auto& bad = rep.violations;

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.tracts.size(); ++i) {
        const Tract& t = ds.tracts[i];
        if (!index.emplace(t.id, i).second) bad.push_back("duplicate tract id '" + t.id + "'");
        if (!std::isfinite(t.x) || !std::isfinite(t.y)) bad.push_back("tract '" + t.id + "' has non-finite coordinates");
    }
    if (ds.tracts.size() < kMinTracts)
        bad.push_back("city has " + std::to_string(ds.tracts.size()) + " tracts, at least " +
                      std::to_string(kMinTracts) + " required");
    if (ds.period.last < ds.period.first) {
        bad.push_back("study period is empty");
        return rep;
    }
    if (full_months(ds.period) < kMinStudyMonths)
        bad.push_back("study period covers fewer than " + std::to_string(kMinStudyMonths) + " full months");

    const auto n_days = static_cast<std::size_t>(ds.period.days());
    const std::size_t n_tracts = ds.tracts.size();
    auto day_of = [&](const StudyDate& d) { return static_cast<std::size_t>(days_between(ds.period.first, d)); };

    // Crime counts per (class, day, tract).
    std::map<CrimeClass, std::vector<unsigned char>> hot;
    for (CrimeClass c : {CrimeClass::Property, CrimeClass::Violent}) hot[c].assign(n_days * n_tracts, 0);
    std::set<std::string> unknown_categories;
    for (std::size_t i = 0; i < ds.crimes.size(); ++i) {
        const CrimeEvent& e = ds.crimes[i];
        const auto it = index.find(e.tract_id);
        bool ok = true;
        if (it == index.end()) {
            bad.push_back("crime #" + std::to_string(i) + " references unknown tract '" + e.tract_id + "'");
            ok = false;
        }
        if (!ds.period.contains(e.date)) {
            bad.push_back("crime #" + std::to_string(i) + " dated " + e.date.iso() + " is outside the study period");
            ok = false;
        }
        const auto cls = ds.crime_class_map.find(e.category);
        if (cls == ds.crime_class_map.end()) {
            unknown_categories.insert(e.category);
            continue;
        }
        if (ok) hot[cls->second][day_of(e.date) * n_tracts + it->second] = 1;
    }
    for (const auto& c : unknown_categories) rep.warnings.push_back("unmapped crime category '" + c + "'");

    for (auto& [cls, grid] : hot) {
        auto& rows = rep.density[cls];
        for (YearMonth m = YearMonth::of(ds.period.first); m.first_day() <= ds.period.last; m = m.plus_months(1)) {
            const StudyDate a = std::max(m.first_day(), ds.period.first);
            const StudyDate b = std::min(m.last_day(), ds.period.last);
            std::vector<unsigned char> any(n_tracts, 0);
            double daily_sum = 0.0;
            for (StudyDate d = a; d <= b; d = d.plus_days(1)) {
                std::size_t count = 0;
                for (std::size_t t = 0; t < n_tracts; ++t) {
                    if (grid[day_of(d) * n_tracts + t]) {
                        ++count;
                        any[t] = 1;
                    }
                }
                if (n_tracts > 0) daily_sum += 100.0 * static_cast<double>(count) / static_cast<double>(n_tracts);
            }
            MonthDensity row;
            row.month = m;
            if (n_tracts > 0) {
                row.tract_month_pct = 100.0 * static_cast<double>(std::count(any.begin(), any.end(), 1)) /
                                      static_cast<double>(n_tracts);
                row.daily_hotspot_pct = daily_sum / static_cast<double>(days_between(a, b) + 1);
            }
            rows.push_back(row);
        }
    }

    // Flow statistics: per tract, per day accumulators.
    std::vector<double> in_vol(n_tracts, 0.0), out_vol(n_tracts, 0.0);
    std::vector<std::set<std::size_t>> tracts_seen(n_tracts * n_days);
    std::vector<std::set<External>> counties_seen(n_tracts * n_days);
    std::vector<std::set<std::string>> states_seen(n_tracts * n_days);
    for (std::size_t i = 0; i < ds.od_flows.size(); ++i) {
        const ODFlowRecord& r = ds.od_flows[i];
        const std::string where = "flow #" + std::to_string(i);
        bool ok = true;
        if (!std::isfinite(r.volume) || r.volume < 0.0) {
            bad.push_back(where + " has invalid volume");
            ok = false;
        }
        if (!ds.period.contains(r.date)) {
            bad.push_back(where + " dated " + r.date.iso() + " is outside the study period");
            ok = false;
        }
        if (!is_in_city(r.origin) && !is_in_city(r.dest)) {
            bad.push_back(where + " has no in-city endpoint");
            ok = false;
        }
        std::optional<std::size_t> o, d;
        for (const RegionRef* ref : {&r.origin, &r.dest}) {
            if (const auto* in = std::get_if<InCity>(ref)) {
                const auto it = index.find(in->tract_id);
                if (it == index.end()) {
                    bad.push_back(where + " references unknown tract '" + in->tract_id + "'");
                    ok = false;
                } else {
                    (ref == &r.origin ? o : d) = it->second;
                }
            } else {
                const auto& ext = std::get<External>(*ref);
                if (ext.state.empty() || ext.county.empty()) {
                    bad.push_back(where + " has an external endpoint without state/county");
                    ok = false;
                }
            }
        }
        if (!ok) continue;
        const std::size_t day = day_of(r.date);
        if (o && d) {
            in_vol[*o] += r.volume;
            if (*d != *o) {
                in_vol[*d] += r.volume;
                tracts_seen[*o * n_days + day].insert(*d);
                tracts_seen[*d * n_days + day].insert(*o);
            }
        } else {
            const std::size_t t = o ? *o : *d;
            const auto& ext = std::get<External>(o ? r.dest : r.origin);
            out_vol[t] += r.volume;
            counties_seen[t * n_days + day].insert(ext);
            states_seen[t * n_days + day].insert(ext.state);
        }
    }
    const double nd = static_cast<double>(n_days);
    std::vector<double> a(n_tracts), b(n_tracts), c(n_tracts), e(n_tracts), f(n_tracts);
    for (std::size_t t = 0; t < n_tracts; ++t) {
        a[t] = in_vol[t] / nd;
        b[t] = out_vol[t] / nd;
        double sc = 0, se = 0, sf = 0;
        for (std::size_t day = 0; day < n_days; ++day) {
            sc += static_cast<double>(tracts_seen[t * n_days + day].size());
            se += static_cast<double>(counties_seen[t * n_days + day].size());
            sf += static_cast<double>(states_seen[t * n_days + day].size());
        }
        c[t] = sc / nd;
        e[t] = se / nd;
        f[t] = sf / nd;
    }
    rep.flows = {mean_sd(a), mean_sd(b), mean_sd(c), mean_sd(e), mean_sd(f)};
    return rep;
}

void require_valid(const CityDataset& ds) {
    const ValidationReport rep = validate_dataset(ds);
    if (rep.ok()) return;
    std::string msg = "dataset '" + ds.city_name + "' failed validation (" + std::to_string(rep.violations.size()) +
                      " violations)";
    for (std::size_t i = 0; i < rep.violations.size() && i < 5; ++i) msg += "\n  " + rep.violations[i];
    throw InvalidDataset(msg);
}

} // namespace crimexfer
