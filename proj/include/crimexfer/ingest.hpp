#pragma once

#include "crimexfer/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace crimexfer {

struct IngestConfig {
    CrimeClassMap crime_class_map = default_crime_class_map();
    std::filesystem::path tracts_path;
    std::filesystem::path crimes_path;
    std::filesystem::path od_path;
    std::optional<DateRange> period;
    /// Multiplier applied to every OD volume (for raw device counts).
    double volume_scale = 1.0;
};

template <typename T>
struct Loaded {
    std::vector<T> items;
    std::vector<std::string> warnings;
};

// Stream parsers. Every malformed input raises ParseError naming the 1-based line.
std::vector<Tract> parse_tracts(std::istream& in);
Loaded<CrimeEvent> parse_crimes(std::istream& in, const CrimeClassMap& classes);
Loaded<ODFlowRecord> parse_od_flows(std::istream& in, double volume_scale = 1.0);

std::vector<Tract> load_tracts(const std::filesystem::path& path);
Loaded<CrimeEvent> load_crimes(const std::filesystem::path& path, const IngestConfig& cfg);
Loaded<ODFlowRecord> load_od_flows(const std::filesystem::path& path, double volume_scale = 1.0);

/// `t:<id>` or `x:<state>/<county>`; throws DataError on bad syntax.
RegionRef parse_region(const std::string& text);

/// Loads the three CSVs named in `cfg`. When no period is configured, the period is the
/// smallest range covering every dated row. The result is normalized.
Loaded<CityDataset> load_city(const std::string& name, const IngestConfig& cfg);

/// Uses `<dir>/{tracts,crimes,od}.csv` and, when present, `<dir>/city.json` for name and period.
Loaded<CityDataset> load_city_dir(const std::filesystem::path& dir, const CrimeClassMap& classes = default_crime_class_map());

void write_tracts(std::ostream& out, const std::vector<Tract>& tracts);
void write_crimes(std::ostream& out, const std::vector<CrimeEvent>& crimes);
void write_od_flows(std::ostream& out, const std::vector<ODFlowRecord>& flows);

/// Writes `<dir>/{tracts,crimes,od}.csv` and `<dir>/city.json`.
void save_city_dir(const CityDataset& ds, const std::filesystem::path& dir);

/// CRC-32 of the dataset's CSV serialization (name and period excluded).
std::uint32_t dataset_checksum(const CityDataset& ds);

/// Reads an IngestConfig from the `ingest` object of a JSON run configuration.
IngestConfig ingest_config_from_json(const std::string& json_text, const std::filesystem::path& base_dir = {});

} // namespace crimexfer
