#pragma once

#include "crimexfer/dataset.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace crimexfer::synth {

/// log lambda = bias + w_hist * (7-day mean count) + w_mob * (log1p(previous-day in-city
/// inflow) - city mean of that term) + w_dow * weekend + tract effect.
struct CrimeDynamics {
    double bias = 0.0;
    double w_hist = 0.0;
    double w_mob = 0.0;
    double w_dow = 0.0;
    friend bool operator==(const CrimeDynamics&, const CrimeDynamics&) = default;
};

struct FamilyParams {
    int n_cities = 4;
    int tracts = 40;
    StudyDate start{2020, 1, 1};
    int months = 12;

    CrimeDynamics property{-1.8, 0.35, 0.9, 0.25};
    CrimeDynamics violent{-2.9, 0.5, 0.7, 0.2};
    double city_variation = 0.05; // relative per-city jitter of the shared weights
    double divergence = 0.0;      // absolute per-city perturbation of w_hist, w_mob, w_dow
    double tract_effect_sd = 0.7;
    double max_intensity = 50.0;

    double area_m = 8000.0;          // side of the square holding the centroids
    double mass_sd = 0.6;            // lognormal spread of tract masses
    double gravity_scale = 0.6;      // mean trips between unit masses at distance 0
    double gravity_length_m = 1500.0;
    double season_amplitude = 0.15;
    double weekend_factor = 0.75;
    double shock_sd = 0.5;           // daily lognormal attractiveness shock per tract
    double trip_scale = 10.0;        // volume represented by one sampled trip
    int n_states = 3;
    int counties_per_state = 4;
    double external_rate = 1.5;      // mean external trips per tract, day and direction

    /// DataError on values that cannot produce a valid city.
    void validate() const;
    DateRange period() const;
};

void to_json(nlohmann::json& j, const FamilyParams& p);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, FamilyParams& p);

struct GeneratedCity {
    CityDataset dataset;
    std::uint64_t seed = 0;
    CrimeDynamics property;   // the weights this city actually used
    CrimeDynamics violent;
    /// True Poisson intensity per class, index day * tracts + tract (tracts in id order).
    std::vector<double> property_intensity;
    std::vector<double> violent_intensity;
};

GeneratedCity generate_city_detailed(const FamilyParams& params, std::uint64_t city_seed, const std::string& name);
CityDataset generate_city(const FamilyParams& params, std::uint64_t city_seed, const std::string& name = "city");

struct Family {
    FamilyParams params;
    std::uint64_t master_seed = 0;
    std::vector<GeneratedCity> cities;

    std::vector<std::shared_ptr<const CityDataset>> datasets() const;
};

/// Seed of city i of a family.
std::uint64_t city_seed(std::uint64_t master_seed, int index);
std::string city_name(int index);

/// DataError unless n_cities >= 2.
Family generate_family(const FamilyParams& params, std::uint64_t master_seed);

/// Writes `<dir>/cities/<name>/...` for every city and `<dir>/family.json`; returns the manifest path.
std::filesystem::path write_family(const Family& family, const std::filesystem::path& dir);

/// Reads the cities listed in `<dir>/family.json`, or every subdirectory of `<dir>/cities`
/// in name order when there is no manifest.
std::vector<std::shared_ptr<const CityDataset>> load_family(const std::filesystem::path& dir);

} // namespace crimexfer::synth
