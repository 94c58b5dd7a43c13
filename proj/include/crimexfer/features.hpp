#pragma once

#include "crimexfer/dataset.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace crimexfer {

constexpr std::size_t kMobilityChannels = 10;
constexpr std::size_t kFeatureChannels = 1 + kMobilityChannels;

/// Mobility channel order.
enum Mob : std::size_t {
    InCityInflowVolume = 0,
    InCityOutflowVolume,
    OutCityInflowVolume,
    OutCityOutflowVolume,
    TractsByInCityInflow,
    TractsByInCityOutflow,
    CountiesByOutCityInflow,
    CountiesByOutCityOutflow,
    StatesByOutCityInflow,
    StatesByOutCityOutflow,
};

using Channels = std::array<double, kFeatureChannels>;

struct FeatureVector {
    std::uint32_t crime_count = 0;
    std::array<double, kMobilityChannels> mob{};
    int dow = 0;

    /// (crime, mob1..mob10) as reals.
    Channels channels() const;
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Dense (tract, day) grid over a study period; absent activity is an explicit zero.
class FeaturePanel {
public:
    FeaturePanel() = default;
    FeaturePanel(DateRange period, std::vector<std::string> tract_ids);

    const DateRange& period() const { return period_; }
    const std::vector<std::string>& tract_ids() const { return tract_ids_; }
    std::size_t tract_count() const { return tract_ids_.size(); }
    std::size_t day_count() const { return days_; }

    std::size_t day_index(const StudyDate& d) const;
    std::size_t tract_position(const std::string& id) const;

    const Channels& raw(std::size_t tract, std::size_t day) const { return values_[day * tract_ids_.size() + tract]; }
    Channels& raw(std::size_t tract, std::size_t day) { return values_[day * tract_ids_.size() + tract]; }
    FeatureVector at(std::size_t tract, std::size_t day) const;
    FeatureVector at(const std::string& tract_id, const StudyDate& d) const;

private:
    DateRange period_;
    std::vector<std::string> tract_ids_;
    std::size_t days_ = 0;
    std::vector<Channels> values_;
};

class HotspotLabels {
public:
    HotspotLabels() = default;
    HotspotLabels(DateRange period, std::size_t tracts);

    const DateRange& period() const { return period_; }
    std::size_t tract_count() const { return tracts_; }
    std::uint8_t at(std::size_t tract, std::size_t day) const { return labels_[day * tracts_ + tract]; }
    std::uint8_t& at(std::size_t tract, std::size_t day) { return labels_[day * tracts_ + tract]; }
    std::uint8_t at(std::size_t tract, const StudyDate& d) const;

private:
    DateRange period_;
    std::size_t tracts_ = 0;
    std::vector<std::uint8_t> labels_;
};

struct PanelBuild {
    FeaturePanel panel;
    HotspotLabels labels;
};

/// Aggregates crimes of `crime_class` and every OD record into per-(tract, day) features.
/// Inflow means the tract is the destination, outflow the origin. Self-flows count toward
/// volumes but not toward diversity; diversity counts only records with positive volume.
/// Throws DataError for records that reference unknown tracts.
PanelBuild build_panel(const CityDataset& ds, CrimeClass crime_class);

/// Feature vectors for days t-T .. t-1, oldest first; InsufficientHistory if any falls outside the panel.
std::vector<FeatureVector> lookback_sequence(const FeaturePanel& panel, const std::string& tract, const StudyDate& t,
                                             int lookback_days);

constexpr double kMinStd = 1e-8;

/// Per-channel mean / standard deviation of log(1 + x).
struct FeatureStats {
    Channels mean{};
    Channels sd{};
    friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

FeatureStats fit_stats(const FeaturePanel& panel, const DateRange& window);
Channels apply_stats(const FeatureStats& stats, const Channels& raw);
inline Channels apply_stats(const FeatureStats& stats, const FeatureVector& v) { return apply_stats(stats, v.channels()); }
/// Inverse of apply_stats on the transformed scale.
Channels invert_stats(const FeatureStats& stats, const Channels& z);

/// Standardized copy of the panel, laid out (day * tracts + tract) * kFeatureChannels + channel.
std::vector<double> standardize_panel(const FeaturePanel& panel, const FeatureStats& stats);

/// CSV `tract_id,date,crime_count,m1..m10,dow`.
void write_panel_csv(std::ostream& out, const FeaturePanel& panel);

} // namespace crimexfer
