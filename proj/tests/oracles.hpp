#pragma once

// Independent reference implementations used by the unit tests and the acceptance runner.
// They deliberately share no code with the library beyond the plain data types.

#include "crimexfer/dataset.hpp"
#include "crimexfer/features.hpp"
#include "crimexfer/metrics.hpp"
#include "crimexfer/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using namespace crimexfer;

// Random dataset with up to `max_tracts` tracts, `max_days` days and `max_od` OD records.
// Includes self-flows, zero volumes, external endpoints and crimes of both classes.
inline CityDataset random_dataset(std::uint64_t seed, int max_tracts = 50, int max_days = 30, int max_od = 1000) {
    CounterRng rng(seed);
    CityDataset ds;
    ds.city_name = "rand";
    const int n = 9 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_tracts - 8)));
    const int days = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_days)));
    const StudyDate start(2020, 1 + static_cast<unsigned>(rng.below(12)), 1 + static_cast<unsigned>(rng.below(28)));
    ds.period = {start, start.plus_days(days - 1)};
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "T%03d", i);
        ds.tracts.push_back({id, rng.uniform(0, 5000), rng.uniform(0, 5000)});
    }
    auto tract = [&] { return ds.tracts[rng.below(static_cast<std::uint64_t>(n))].id; };
    auto date = [&] { return start.plus_days(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(days)))); };
    const std::array<std::string, 4> states{"AA", "BB", "CC", "DD"};
    auto external = [&] {
        const auto& s = states[rng.below(states.size())];
        return External{s, "C" + std::to_string(rng.below(5))};
    };
    const std::array<std::string, 5> cats{"burglary", "robbery", "arson", "murder", "graffiti"};
    const int crimes = static_cast<int>(rng.below(static_cast<std::uint64_t>(4 * n + 1)));
    for (int i = 0; i < crimes; ++i) ds.crimes.push_back({date(), tract(), cats[rng.below(cats.size())]});

    const int records = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_od + 1)));
    for (int i = 0; i < records; ++i) {
        ODFlowRecord r;
        r.date = date();
        const auto kind = rng.below(10);
        const double vol = rng.below(8) == 0 ? 0.0 : std::round(rng.uniform(0, 100) * 8.0) / 8.0 + rng.uniform(0, 1e-3);
        r.volume = vol;
        if (kind < 5) {
            r.origin = InCity{tract()};
            r.dest = rng.below(6) == 0 ? std::get<InCity>(r.origin) : InCity{tract()};
        } else if (kind < 8) {
            r.origin = external();
            r.dest = InCity{tract()};
        } else {
            r.origin = InCity{tract()};
            r.dest = external();
        }
        ds.od_flows.push_back(r);
    }
    normalize(ds);
    return ds;
}

struct OracleCell {
    std::uint32_t crimes = 0;
    std::array<double, 4> volumes{}; // in-city in, in-city out, out-city in, out-city out
    std::array<std::uint32_t, 6> diversity{};
};

// Brute force: for every (tract, day) scan every record.
inline OracleCell count_cell(const CityDataset& ds, CrimeClass cls, const std::string& tract, const StudyDate& day) {
    OracleCell c;
    for (const auto& e : ds.crimes) {
        const auto it = ds.crime_class_map.find(e.category);
        if (e.date == day && e.tract_id == tract && it != ds.crime_class_map.end() && it->second == cls) ++c.crimes;
    }
    std::set<std::string> tin, tout, cin, cout, sin, sout;
    for (const auto& r : ds.od_flows) {
        if (r.date != day) continue;
        const bool o_in = is_in_city(r.origin), d_in = is_in_city(r.dest);
        const std::string o = o_in ? std::get<InCity>(r.origin).tract_id : "";
        const std::string d = d_in ? std::get<InCity>(r.dest).tract_id : "";
        if (o_in && d_in) {
            if (d == tract) c.volumes[0] += r.volume;
            if (o == tract) c.volumes[1] += r.volume;
            if (r.volume > 0 && o != d) {
                if (d == tract) tin.insert(o);
                if (o == tract) tout.insert(d);
            }
        } else if (d_in && d == tract) {
            const auto& x = std::get<External>(r.origin);
            c.volumes[2] += r.volume;
            if (r.volume > 0) {
                cin.insert(x.state + "/" + x.county);
                sin.insert(x.state);
            }
        } else if (o_in && o == tract) {
            const auto& x = std::get<External>(r.dest);
            c.volumes[3] += r.volume;
            if (r.volume > 0) {
                cout.insert(x.state + "/" + x.county);
                sout.insert(x.state);
            }
        }
    }
    c.diversity = {static_cast<std::uint32_t>(tin.size()),  static_cast<std::uint32_t>(tout.size()),
                   static_cast<std::uint32_t>(cin.size()),  static_cast<std::uint32_t>(cout.size()),
                   static_cast<std::uint32_t>(sin.size()),  static_cast<std::uint32_t>(sout.size())};
    return c;
}

// Compares one panel cell against the oracle; returns an empty string on agreement.
inline std::string compare_cell(const FeatureVector& v, const OracleCell& o) {
    if (v.crime_count != o.crimes) return "crime count";
    for (std::size_t j = 0; j < 4; ++j)
        if (std::abs(v.mob[j] - o.volumes[j]) > 1e-9) return "volume channel " + std::to_string(j + 1);
    for (std::size_t j = 0; j < 6; ++j)
        if (v.mob[4 + j] != static_cast<double>(o.diversity[j])) return "diversity channel " + std::to_string(j + 5);
    return {};
}

struct OracleConfusion {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline OracleConfusion confusion(const std::vector<int>& predicted, const std::vector<int>& actual) {
    OracleConfusion c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] == 1 && actual[i] == 1) ++c.tp;
        else if (predicted[i] == 1) ++c.fp;
        else if (actual[i] == 1) ++c.fn;
        else ++c.tn;
    }
    return c;
}

// F1 as 2tp / (2tp + fp + fn), algebraically equal to the precision/recall form.
inline double f1(const OracleConfusion& c) {
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) return 1.0;
    const double tp2 = 2.0 * static_cast<double>(c.tp);
    return tp2 / (tp2 + static_cast<double>(c.fp + c.fn));
}

} // namespace oracle
