#include "crimexfer/synthgen.hpp"

#include "crimexfer/error.hpp"
#include "crimexfer/ingest.hpp"
#include "crimexfer/parallel.hpp"
#include "crimexfer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace crimexfer::synth {

namespace fs = std::filesystem;

void FamilyParams::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    auto non_negative = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (n_cities < 1) throw DataError("n_cities must be positive");
    if (tracts < static_cast<int>(kMinTracts)) throw DataError("a city needs at least 9 tracts");
    if (months < 1) throw DataError("months must be positive");
    if (!positive(area_m) || !positive(gravity_length_m) || !positive(trip_scale) || !positive(max_intensity))
        throw DataError("area, gravity length, trip scale and intensity cap must be positive");
    if (!non_negative(mass_sd) || !non_negative(gravity_scale) || !non_negative(shock_sd) ||
        !non_negative(external_rate) || !non_negative(city_variation) || !non_negative(divergence) ||
        !non_negative(tract_effect_sd) || !positive(weekend_factor))
        throw DataError("scale parameters must be finite and non-negative");
    if (!(season_amplitude >= 0.0 && season_amplitude < 1.0)) throw DataError("season amplitude must lie in [0, 1)");
    if (n_states < 1 || counties_per_state < 1) throw DataError("need at least one external state and county");
    for (const auto* d : {&property, &violent})
        if (!std::isfinite(d->bias) || !std::isfinite(d->w_hist) || !std::isfinite(d->w_mob) || !std::isfinite(d->w_dow))
            throw DataError("dynamics weights must be finite");
}

DateRange FamilyParams::period() const {
    return {start, YearMonth::of(start).plus_months(months).first_day().plus_days(-1)};
}

namespace {

void dyn_to_json(nlohmann::json& j, const CrimeDynamics& d) {
    j = {{"bias", d.bias}, {"w_hist", d.w_hist}, {"w_mob", d.w_mob}, {"w_dow", d.w_dow}};
}

CrimeDynamics dyn_from_json(const nlohmann::json& j, CrimeDynamics d) {
    d.bias = j.value("bias", d.bias);
    d.w_hist = j.value("w_hist", d.w_hist);
    d.w_mob = j.value("w_mob", d.w_mob);
    d.w_dow = j.value("w_dow", d.w_dow);
    return d;
}

} // namespace

void to_json(nlohmann::json& j, const FamilyParams& p) {
    nlohmann::json prop, viol;
    dyn_to_json(prop, p.property);
    dyn_to_json(viol, p.violent);
    j = {{"n_cities", p.n_cities},
         {"tracts", p.tracts},
         {"start", p.start.iso()},
         {"months", p.months},
         {"property", prop},
         {"violent", viol},
         {"city_variation", p.city_variation},
         {"divergence", p.divergence},
         {"tract_effect_sd", p.tract_effect_sd},
         {"max_intensity", p.max_intensity},
         {"area_m", p.area_m},
         {"mass_sd", p.mass_sd},
         {"gravity_scale", p.gravity_scale},
         {"gravity_length_m", p.gravity_length_m},
         {"season_amplitude", p.season_amplitude},
         {"weekend_factor", p.weekend_factor},
         {"shock_sd", p.shock_sd},
         {"trip_scale", p.trip_scale},
         {"n_states", p.n_states},
         {"counties_per_state", p.counties_per_state},
         {"external_rate", p.external_rate}};
}

void from_json(const nlohmann::json& j, FamilyParams& p) {
    try {
        p.n_cities = j.value("n_cities", p.n_cities);
        p.tracts = j.value("tracts", p.tracts);
        if (j.contains("start")) p.start = StudyDate::parse(j["start"].get<std::string>());
        p.months = j.value("months", p.months);
        if (j.contains("property")) p.property = dyn_from_json(j["property"], p.property);
        if (j.contains("violent")) p.violent = dyn_from_json(j["violent"], p.violent);
        p.city_variation = j.value("city_variation", p.city_variation);
        p.divergence = j.value("divergence", p.divergence);
        p.tract_effect_sd = j.value("tract_effect_sd", p.tract_effect_sd);
        p.max_intensity = j.value("max_intensity", p.max_intensity);
        p.area_m = j.value("area_m", p.area_m);
        p.mass_sd = j.value("mass_sd", p.mass_sd);
        p.gravity_scale = j.value("gravity_scale", p.gravity_scale);
        p.gravity_length_m = j.value("gravity_length_m", p.gravity_length_m);
        p.season_amplitude = j.value("season_amplitude", p.season_amplitude);
        p.weekend_factor = j.value("weekend_factor", p.weekend_factor);
        p.shock_sd = j.value("shock_sd", p.shock_sd);
        p.trip_scale = j.value("trip_scale", p.trip_scale);
        p.n_states = j.value("n_states", p.n_states);
        p.counties_per_state = j.value("counties_per_state", p.counties_per_state);
        p.external_rate = j.value("external_rate", p.external_rate);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad synthetic family parameters: ") + e.what());
    }
}

namespace {

// Independent random streams of one city.
enum Stream : std::uint64_t {
    kLayout = 1,
    kMass,
    kEffects,
    kWeights,
    kCounties,
    kShock,
    kInCity,
    kExternal,
    kCrime,
};

struct Category {
    const char* name;
    double weight;
};

constexpr Category kPropertyCategories[] = {
    {"larceny-theft", 0.60}, {"burglary", 0.20}, {"motor vehicle theft", 0.17}, {"arson", 0.03}};
constexpr Category kViolentCategories[] = {
    {"aggravated assault", 0.55}, {"robbery", 0.35}, {"forcible rape", 0.08}, {"murder", 0.02}};

template <std::size_t N>
const char* pick_category(const Category (&cats)[N], double u) {
    for (const auto& c : cats) {
        if (u < c.weight) return c.name;
        u -= c.weight;
    }
    return cats[N - 1].name;
}

int poisson(CounterRng& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<int> d(mean);
    return d(rng);
}

double normal(CounterRng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(rng);
}

std::string tract_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%03d", i);
    return buf;
}

CrimeDynamics jitter(const CrimeDynamics& shared, const FamilyParams& p, CounterRng& rng) {
    CrimeDynamics d = shared;
    for (double* w : {&d.w_hist, &d.w_mob, &d.w_dow}) {
        const double rel = normal(rng);
        const double abs = normal(rng);
        *w = *w * (1.0 + p.city_variation * rel) + p.divergence * abs;
    }
    return d;
}

} // namespace

GeneratedCity generate_city_detailed(const FamilyParams& p, std::uint64_t seed, const std::string& name) {
    p.validate();
    const DateRange period = p.period();
    const auto N = static_cast<std::size_t>(p.tracts);
    const auto D = static_cast<std::size_t>(period.days());
    auto stream = [&](std::uint64_t tag, std::uint64_t sub = 0) { return CounterRng(derive_seed(seed, {tag, sub})); };

    GeneratedCity out;
    out.seed = seed;
    CityDataset& ds = out.dataset;
    ds.city_name = name;
    ds.period = period;

    {
        CounterRng rng = stream(kLayout);
        for (std::size_t i = 0; i < N; ++i) {
            const double x = rng.uniform(0.0, p.area_m);
            const double y = rng.uniform(0.0, p.area_m);
            ds.tracts.push_back({tract_id(static_cast<int>(i)), x, y});
        }
    }
    std::vector<double> mass(N);
    {
        CounterRng rng = stream(kMass);
        for (auto& m : mass) m = std::exp(p.mass_sd * normal(rng) - 0.5 * p.mass_sd * p.mass_sd);
    }
    std::vector<double> effect_prop(N), effect_viol(N);
    {
        CounterRng rng = stream(kEffects);
        for (std::size_t i = 0; i < N; ++i) {
            effect_prop[i] = p.tract_effect_sd * normal(rng);
            effect_viol[i] = p.tract_effect_sd * normal(rng);
        }
    }
    {
        CounterRng rng = stream(kWeights);
        out.property = jitter(p.property, p, rng);
        out.violent = jitter(p.violent, p, rng);
    }
    std::vector<External> regions;
    std::vector<double> share;
    {
        CounterRng rng = stream(kCounties);
        double total = 0.0;
        for (int s = 0; s < p.n_states; ++s)
            for (int c = 0; c < p.counties_per_state; ++c) {
                regions.push_back({"ST" + std::to_string(s + 1), "C" + std::to_string(c + 1)});
                share.push_back(std::exp(0.8 * normal(rng)));
                total += share.back();
            }
        for (auto& s : share) s /= total;
    }

    std::vector<double> kernel(N * N);
    for (std::size_t o = 0; o < N; ++o)
        for (std::size_t d = 0; d < N; ++d) {
            const double dx = (ds.tracts[o].x - ds.tracts[d].x) / p.gravity_length_m;
            const double dy = (ds.tracts[o].y - ds.tracts[d].y) / p.gravity_length_m;
            kernel[o * N + d] = p.gravity_scale * mass[o] * mass[d] / (1.0 + dx * dx + dy * dy);
        }

    std::vector<double> inflow(D * N, 0.0);
    std::vector<double> shock(N);
    for (std::size_t day = 0; day < D; ++day) {
        const StudyDate date = period.first.plus_days(static_cast<std::int64_t>(day));
        const double doy = static_cast<double>(days_between(StudyDate(date.year(), 1, 1), date));
        const double season = 1.0 + p.season_amplitude * std::sin(2.0 * std::numbers::pi * doy / 365.25);
        const double dowf = day_of_week(date) >= 5 ? p.weekend_factor : 1.0;
        CounterRng srng = stream(kShock, day);
        for (auto& a : shock) a = std::exp(p.shock_sd * normal(srng) - 0.5 * p.shock_sd * p.shock_sd);

        CounterRng frng = stream(kInCity, day);
        for (std::size_t o = 0; o < N; ++o)
            for (std::size_t d = 0; d < N; ++d) {
                const int n = poisson(frng, kernel[o * N + d] * shock[d] * season * dowf);
                if (n == 0) continue;
                const double vol = n * p.trip_scale;
                ds.od_flows.push_back({date, InCity{ds.tracts[o].id}, InCity{ds.tracts[d].id}, vol});
                inflow[day * N + d] += vol;
            }
        CounterRng xrng = stream(kExternal, day);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t r = 0; r < regions.size(); ++r) {
                const double mu = p.external_rate * mass[i] * shock[i] * share[r] * season * dowf;
                if (const int n = poisson(xrng, mu))
                    ds.od_flows.push_back({date, regions[r], InCity{ds.tracts[i].id}, n * p.trip_scale});
                if (const int n = poisson(xrng, mu))
                    ds.od_flows.push_back({date, InCity{ds.tracts[i].id}, regions[r], n * p.trip_scale});
            }
    }

    double log_mean = 0.0;
    for (double v : inflow) log_mean += std::log1p(v);
    log_mean /= static_cast<double>(inflow.size());

    auto simulate = [&](const CrimeDynamics& w, const std::vector<double>& effect, std::uint64_t cls,
                        const auto& categories, std::vector<double>& intensity) {
        intensity.assign(D * N, 0.0);
        std::vector<int> counts(D * N, 0);
        for (std::size_t day = 0; day < D; ++day) {
            const StudyDate date = period.first.plus_days(static_cast<std::int64_t>(day));
            const double weekend = day_of_week(date) >= 5 ? 1.0 : 0.0;
            CounterRng rng = stream(kCrime, cls * 100000 + day);
            for (std::size_t i = 0; i < N; ++i) {
                const std::size_t span = std::min<std::size_t>(7, day);
                double hist = 0.0;
                for (std::size_t b = 1; b <= span; ++b) hist += counts[(day - b) * N + i];
                if (span > 0) hist /= static_cast<double>(span);
                const double mob = day > 0 ? std::log1p(inflow[(day - 1) * N + i]) - log_mean : 0.0;
                const double eta = w.bias + w.w_hist * hist + w.w_mob * mob + w.w_dow * weekend + effect[i];
                const double lambda = std::min(p.max_intensity, std::exp(eta));
                intensity[day * N + i] = lambda;
                const int n = poisson(rng, lambda);
                counts[day * N + i] = n;
                for (int e = 0; e < n; ++e)
                    ds.crimes.push_back({date, ds.tracts[i].id, pick_category(categories, rng.uniform())});
            }
        }
    };
    simulate(out.property, effect_prop, 1, kPropertyCategories, out.property_intensity);
    simulate(out.violent, effect_viol, 2, kViolentCategories, out.violent_intensity);

    normalize(ds);
    return out;
}

CityDataset generate_city(const FamilyParams& params, std::uint64_t seed, const std::string& name) {
    return std::move(generate_city_detailed(params, seed, name).dataset);
}

std::vector<std::shared_ptr<const CityDataset>> Family::datasets() const {
    std::vector<std::shared_ptr<const CityDataset>> out;
    for (const auto& c : cities) out.push_back(std::make_shared<const CityDataset>(c.dataset));
    return out;
}

std::uint64_t city_seed(std::uint64_t master_seed, int index) {
    return derive_seed(master_seed, {0xc17eULL, static_cast<std::uint64_t>(index)});
}

std::string city_name(int index) { return "city" + std::to_string(index); }

Family generate_family(const FamilyParams& params, std::uint64_t master_seed) {
    if (params.n_cities < 2) throw DataError("a family needs at least two cities");
    params.validate();
    Family f;
    f.params = params;
    f.master_seed = master_seed;
    f.cities.resize(static_cast<std::size_t>(params.n_cities));
    parallel_for(f.cities.size(), 0, [&](std::size_t i) {
        const int idx = static_cast<int>(i);
        f.cities[i] = generate_city_detailed(params, city_seed(master_seed, idx), city_name(idx));
    });
    return f;
}

fs::path write_family(const Family& family, const fs::path& dir) {
    nlohmann::json manifest;
    manifest["format"] = "crimexfer-family";
    manifest["master_seed"] = family.master_seed;
    manifest["params"] = family.params;
    nlohmann::json shared;
    dyn_to_json(shared["property"], family.params.property);
    dyn_to_json(shared["violent"], family.params.violent);
    manifest["shared_weights"] = shared;
    manifest["cities"] = nlohmann::json::array();
    for (const auto& c : family.cities) {
        save_city_dir(c.dataset, dir / "cities" / c.dataset.city_name);
        nlohmann::json e{{"name", c.dataset.city_name},
                         {"seed", c.seed},
                         {"path", "cities/" + c.dataset.city_name},
                         {"checksum", dataset_checksum(c.dataset)}};
        dyn_to_json(e["weights"]["property"], c.property);
        dyn_to_json(e["weights"]["violent"], c.violent);
        manifest["cities"].push_back(std::move(e));
    }
    const fs::path path = dir / "family.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
    return path;
}

std::vector<std::shared_ptr<const CityDataset>> load_family(const fs::path& dir) {
    std::vector<fs::path> city_dirs;
    const fs::path manifest = dir / "family.json";
    if (fs::exists(manifest)) {
        std::ifstream in(manifest, std::ios::binary);
        if (!in) throw IoError("cannot read " + manifest.string());
        try {
            const auto j = nlohmann::json::parse(in);
            for (const auto& c : j.at("cities")) city_dirs.push_back(dir / c.at("path").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(manifest.string() + ": " + e.what());
        }
    } else {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(dir / "cities", ec))
            if (entry.is_directory()) city_dirs.push_back(entry.path());
        if (ec) throw IoError("cannot list " + (dir / "cities").string() + ": " + ec.message());
        std::sort(city_dirs.begin(), city_dirs.end());
    }
    std::vector<std::shared_ptr<const CityDataset>> out(city_dirs.size());
    parallel_for(city_dirs.size(), 0, [&](std::size_t i) {
        out[i] = std::make_shared<const CityDataset>(load_city_dir(city_dirs[i]).items.front());
    });
    return out;
}

} // namespace crimexfer::synth
