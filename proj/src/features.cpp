#include "crimexfer/features.hpp"

#include "crimexfer/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

namespace crimexfer {

Channels FeatureVector::channels() const {
    Channels c{};
    c[0] = static_cast<double>(crime_count);
    std::copy(mob.begin(), mob.end(), c.begin() + 1);
    return c;
}

FeaturePanel::FeaturePanel(DateRange period, std::vector<std::string> tract_ids)
    : period_(period), tract_ids_(std::move(tract_ids)), days_(static_cast<std::size_t>(std::max<std::int64_t>(period.days(), 0))),
      values_(days_ * tract_ids_.size(), Channels{}) {}

std::size_t FeaturePanel::day_index(const StudyDate& d) const {
    if (!period_.contains(d)) throw InsufficientHistory("date " + d.iso() + " is outside the panel period");
    return static_cast<std::size_t>(days_between(period_.first, d));
}

std::size_t FeaturePanel::tract_position(const std::string& id) const {
    const auto it = std::find(tract_ids_.begin(), tract_ids_.end(), id);
    if (it == tract_ids_.end()) throw DataError("unknown tract '" + id + "'");
    return static_cast<std::size_t>(it - tract_ids_.begin());
}

FeatureVector FeaturePanel::at(std::size_t tract, std::size_t day) const {
    const Channels& c = raw(tract, day);
    FeatureVector v;
    v.crime_count = static_cast<std::uint32_t>(c[0]);
    std::copy(c.begin() + 1, c.end(), v.mob.begin());
    v.dow = day_of_week(period_.first.plus_days(static_cast<std::int64_t>(day)));
    return v;
}

FeatureVector FeaturePanel::at(const std::string& tract_id, const StudyDate& d) const {
    return at(tract_position(tract_id), day_index(d));
}

HotspotLabels::HotspotLabels(DateRange period, std::size_t tracts)
    : period_(period), tracts_(tracts), labels_(static_cast<std::size_t>(std::max<std::int64_t>(period.days(), 0)) * tracts, 0) {}

std::uint8_t HotspotLabels::at(std::size_t tract, const StudyDate& d) const {
    if (!period_.contains(d)) throw DataError("date " + d.iso() + " is outside the label period");
    return at(tract, static_cast<std::size_t>(days_between(period_.first, d)));
}

PanelBuild build_panel(const CityDataset& ds, CrimeClass crime_class) {
    std::vector<std::string> ids;
    ids.reserve(ds.tracts.size());
    for (const auto& t : ds.tracts) ids.push_back(t.id);
    PanelBuild out{FeaturePanel(ds.period, ids), HotspotLabels(ds.period, ids.size())};
    FeaturePanel& panel = out.panel;
    const auto index = ds.tract_index();
    const std::size_t n = ids.size();

    auto lookup = [&](const std::string& id) {
        const auto it = index.find(id);
        if (it == index.end()) throw DataError("record references unknown tract '" + id + "'");
        return it->second;
    };

    for (const auto& e : ds.crimes) {
        const auto cls = ds.crime_class_map.find(e.category);
        if (cls == ds.crime_class_map.end() || cls->second != crime_class || !ds.period.contains(e.date)) continue;
        panel.raw(lookup(e.tract_id), panel.day_index(e.date))[0] += 1.0;
    }
    for (std::size_t day = 0; day < panel.day_count(); ++day)
        for (std::size_t t = 0; t < n; ++t) out.labels.at(t, day) = panel.raw(t, day)[0] >= 1.0 ? 1 : 0;

    // Diversity: collect (cell, channel, region key) triples, then count distinct keys.
    std::map<External, std::size_t> county_ids;
    std::map<std::string, std::size_t> state_ids;
    auto county_id = [&](const External& x) { return county_ids.emplace(x, county_ids.size()).first->second; };
    auto state_id = [&](const std::string& s) { return state_ids.emplace(s, state_ids.size()).first->second; };
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> links;

    for (const auto& r : ds.od_flows) {
        if (!ds.period.contains(r.date)) continue;
        const std::size_t day = panel.day_index(r.date);
        const auto* o = std::get_if<InCity>(&r.origin);
        const auto* d = std::get_if<InCity>(&r.dest);
        const bool linked = r.volume > 0.0;
        if (o && d) {
            const std::size_t oi = lookup(o->tract_id), di = lookup(d->tract_id);
            panel.raw(di, day)[1 + InCityInflowVolume] += r.volume;
            panel.raw(oi, day)[1 + InCityOutflowVolume] += r.volume;
            if (linked && oi != di) {
                links.emplace_back(day * n + di, TractsByInCityInflow, oi);
                links.emplace_back(day * n + oi, TractsByInCityOutflow, di);
            }
        } else if (d) {
            const std::size_t di = lookup(d->tract_id);
            const auto& ext = std::get<External>(r.origin);
            panel.raw(di, day)[1 + OutCityInflowVolume] += r.volume;
            if (linked) {
                links.emplace_back(day * n + di, CountiesByOutCityInflow, county_id(ext));
                links.emplace_back(day * n + di, StatesByOutCityInflow, state_id(ext.state));
            }
        } else if (o) {
            const std::size_t oi = lookup(o->tract_id);
            const auto& ext = std::get<External>(r.dest);
            panel.raw(oi, day)[1 + OutCityOutflowVolume] += r.volume;
            if (linked) {
                links.emplace_back(day * n + oi, CountiesByOutCityOutflow, county_id(ext));
                links.emplace_back(day * n + oi, StatesByOutCityOutflow, state_id(ext.state));
            }
        }
    }
    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());
    for (const auto& [cell, channel, key] : links) {
        (void)key;
        panel.raw(cell % n, cell / n)[1 + channel] += 1.0;
    }
    return out;
}

std::vector<FeatureVector> lookback_sequence(const FeaturePanel& panel, const std::string& tract, const StudyDate& t,
                                             int lookback_days) {
    if (lookback_days < 1) throw InsufficientHistory("look-back must be at least one day");
    const StudyDate oldest = t.plus_days(-lookback_days);
    const StudyDate newest = t.plus_days(-1);
    if (!panel.period().contains(oldest) || !panel.period().contains(newest))
        throw InsufficientHistory(std::to_string(lookback_days) + "-day history before " + t.iso() +
                                  " extends outside the study period");
    const std::size_t pos = panel.tract_position(tract);
    const std::size_t first = panel.day_index(oldest);
    std::vector<FeatureVector> seq;
    seq.reserve(static_cast<std::size_t>(lookback_days));
    for (int d = 0; d < lookback_days; ++d) seq.push_back(panel.at(pos, first + static_cast<std::size_t>(d)));
    return seq;
}

FeatureStats fit_stats(const FeaturePanel& panel, const DateRange& window) {
    if (window.last < window.first || panel.tract_count() == 0) throw EmptyWindow("standardization window is empty");
    if (!panel.period().contains(window))
        throw WindowOutOfRange("standardization window " + window.first.iso() + ".." + window.last.iso() +
                               " is outside the panel period");
    const std::size_t first = panel.day_index(window.first), last = panel.day_index(window.last);
    const double count = static_cast<double>((last - first + 1) * panel.tract_count());
    // Accumulate around the first value so constant channels get an exact mean.
    Channels shift{};
    for (std::size_t c = 0; c < kFeatureChannels; ++c) shift[c] = std::log1p(panel.raw(0, first)[c]);
    FeatureStats s;
    for (std::size_t day = first; day <= last; ++day)
        for (std::size_t t = 0; t < panel.tract_count(); ++t)
            for (std::size_t c = 0; c < kFeatureChannels; ++c) s.mean[c] += std::log1p(panel.raw(t, day)[c]) - shift[c];
    for (std::size_t c = 0; c < kFeatureChannels; ++c) s.mean[c] = shift[c] + s.mean[c] / count;
    for (std::size_t day = first; day <= last; ++day)
        for (std::size_t t = 0; t < panel.tract_count(); ++t)
            for (std::size_t c = 0; c < kFeatureChannels; ++c) {
                const double dev = std::log1p(panel.raw(t, day)[c]) - s.mean[c];
                s.sd[c] += dev * dev;
            }
    for (auto& sd : s.sd) sd = std::max(std::sqrt(sd / count), kMinStd);
    return s;
}

Channels apply_stats(const FeatureStats& stats, const Channels& raw) {
    Channels z{};
    for (std::size_t c = 0; c < kFeatureChannels; ++c) z[c] = (std::log1p(raw[c]) - stats.mean[c]) / stats.sd[c];
    return z;
}

Channels invert_stats(const FeatureStats& stats, const Channels& z) {
    Channels x{};
    for (std::size_t c = 0; c < kFeatureChannels; ++c) x[c] = std::expm1(z[c] * stats.sd[c] + stats.mean[c]);
    return x;
}

std::vector<double> standardize_panel(const FeaturePanel& panel, const FeatureStats& stats) {
    std::vector<double> out(panel.day_count() * panel.tract_count() * kFeatureChannels);
    std::size_t k = 0;
    for (std::size_t day = 0; day < panel.day_count(); ++day)
        for (std::size_t t = 0; t < panel.tract_count(); ++t) {
            const Channels z = apply_stats(stats, panel.raw(t, day));
            for (double v : z) out[k++] = v;
        }
    return out;
}

void write_panel_csv(std::ostream& out, const FeaturePanel& panel) {
    out << "tract_id,date,crime_count";
    for (std::size_t j = 1; j <= kMobilityChannels; ++j) out << ",m" << j;
    out << ",dow\n";
    for (std::size_t day = 0; day < panel.day_count(); ++day) {
        const std::string date = panel.period().first.plus_days(static_cast<std::int64_t>(day)).iso();
        for (std::size_t t = 0; t < panel.tract_count(); ++t) {
            const FeatureVector v = panel.at(t, day);
            out << panel.tract_ids()[t] << ',' << date << ',' << v.crime_count;
            for (double m : v.mob) out << ',' << m;
            out << ',' << v.dow << '\n';
        }
    }
}

} // namespace crimexfer
