#include "crimexfer/ingest.hpp"

#include "crimexfer/error.hpp"

#include <json.hpp>
#include <zlib.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace crimexfer {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

/// Line reader that strips `\r`, a leading UTF-8 BOM, and skips blank lines.
class CsvReader {
public:
    CsvReader(std::istream& in, std::string_view expected_header) : in_(in) {
        std::string header;
        if (!next(header)) throw ParseError(1, "missing header, expected '" + std::string(expected_header) + "'");
        if (header != expected_header)
            throw ParseError(line_, "bad header '" + header + "', expected '" + std::string(expected_header) + "'");
        width_ = split_fields(header).size();
    }

    bool row(std::vector<std::string>& fields) {
        std::string text;
        if (!next(text)) return false;
        fields = split_fields(text);
        if (fields.size() != width_)
            throw ParseError(line_, "expected " + std::to_string(width_) + " fields, got " + std::to_string(fields.size()));
        return true;
    }

    std::size_t line() const { return line_; }

private:
    bool next(std::string& out) {
        while (std::getline(in_, out)) {
            ++line_;
            if (line_ == 1 && out.rfind("\xEF\xBB\xBF", 0) == 0) out.erase(0, 3);
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (!out.empty()) return true;
        }
        return false;
    }

    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t width_ = 0;
};

double parse_double(const std::string& text, std::size_t line, const char* what) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw ParseError(line, std::string("non-numeric ") + what + " '" + text + "'");
    return v;
}

StudyDate parse_date(const std::string& text, std::size_t line) {
    try {
        return StudyDate::parse(text);
    } catch (const InvalidDate& e) {
        throw ParseError(line, e.what());
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

} // namespace

RegionRef parse_region(const std::string& text) {
    if (text.size() > 2 && text.compare(0, 2, "t:") == 0) return InCity{text.substr(2)};
    if (text.size() > 2 && text.compare(0, 2, "x:") == 0) {
        const std::size_t slash = text.find('/', 2);
        if (slash != std::string::npos && slash > 2 && slash + 1 < text.size())
            return External{text.substr(2, slash - 2), text.substr(slash + 1)};
    }
    throw DataError("bad region endpoint '" + text + "' (expected t:<tract> or x:<state>/<county>)");
}

std::vector<Tract> parse_tracts(std::istream& in) {
    CsvReader reader(in, "tract_id,x_meters,y_meters");
    std::vector<Tract> tracts;
    std::unordered_set<std::string> seen;
    std::vector<std::string> f;
    while (reader.row(f)) {
        if (f[0].empty()) throw ParseError(reader.line(), "empty tract id");
        Tract t{f[0], parse_double(f[1], reader.line(), "x coordinate"), parse_double(f[2], reader.line(), "y coordinate")};
        if (!seen.insert(t.id).second) throw DuplicateTract(t.id);
        tracts.push_back(std::move(t));
    }
    return tracts;
}

Loaded<CrimeEvent> parse_crimes(std::istream& in, const CrimeClassMap& classes) {
    CsvReader reader(in, "date,tract_id,category");
    Loaded<CrimeEvent> out;
    std::set<std::string> dropped;
    std::vector<std::string> f;
    while (reader.row(f)) {
        const StudyDate date = parse_date(f[0], reader.line());
        if (f[1].empty()) throw ParseError(reader.line(), "empty tract id");
        if (!classes.contains(f[2])) {
            if (dropped.insert(f[2]).second) out.warnings.push_back("dropping unknown crime category '" + f[2] + "'");
            continue;
        }
        out.items.push_back(CrimeEvent{date, f[1], f[2]});
    }
    return out;
}

Loaded<ODFlowRecord> parse_od_flows(std::istream& in, double volume_scale) {
    CsvReader reader(in, "date,origin,dest,volume");
    Loaded<ODFlowRecord> out;
    std::vector<std::string> f;
    while (reader.row(f)) {
        const StudyDate date = parse_date(f[0], reader.line());
        RegionRef origin, dest;
        try {
            origin = parse_region(f[1]);
            dest = parse_region(f[2]);
        } catch (const DataError& e) {
            throw ParseError(reader.line(), e.what());
        }
        const double volume = parse_double(f[3], reader.line(), "volume");
        if (volume < 0.0) throw ParseError(reader.line(), "negative volume " + f[3]);
        if (!is_in_city(origin) && !is_in_city(dest)) {
            out.warnings.push_back("line " + std::to_string(reader.line()) + ": dropping flow with no in-city endpoint");
            continue;
        }
        out.items.push_back(ODFlowRecord{date, std::move(origin), std::move(dest), volume * volume_scale});
    }
    return out;
}

std::vector<Tract> load_tracts(const fs::path& path) {
    auto in = open_input(path);
    return parse_tracts(in);
}

Loaded<CrimeEvent> load_crimes(const fs::path& path, const IngestConfig& cfg) {
    auto in = open_input(path);
    return parse_crimes(in, cfg.crime_class_map);
}

Loaded<ODFlowRecord> load_od_flows(const fs::path& path, double volume_scale) {
    auto in = open_input(path);
    return parse_od_flows(in, volume_scale);
}

Loaded<CityDataset> load_city(const std::string& name, const IngestConfig& cfg) {
    Loaded<CityDataset> out;
    CityDataset& ds = out.items.emplace_back();
    ds.city_name = name;
    ds.crime_class_map = cfg.crime_class_map;
    ds.tracts = load_tracts(cfg.tracts_path);
    auto crimes = load_crimes(cfg.crimes_path, cfg);
    auto flows = load_od_flows(cfg.od_path, cfg.volume_scale);
    ds.crimes = std::move(crimes.items);
    ds.od_flows = std::move(flows.items);
    out.warnings = std::move(crimes.warnings);
    out.warnings.insert(out.warnings.end(), flows.warnings.begin(), flows.warnings.end());

    if (cfg.period) {
        ds.period = *cfg.period;
    } else {
        std::optional<DateRange> span;
        auto widen = [&](const StudyDate& d) {
            if (!span) span = DateRange{d, d};
            span->first = std::min(span->first, d);
            span->last = std::max(span->last, d);
        };
        for (const auto& e : ds.crimes) widen(e.date);
        for (const auto& r : ds.od_flows) widen(r.date);
        if (!span) throw DataError("city '" + name + "' has no dated rows and no configured period");
        ds.period = *span;
    }
    normalize(ds);
    return out;
}

Loaded<CityDataset> load_city_dir(const fs::path& dir, const CrimeClassMap& classes) {
    IngestConfig cfg;
    cfg.crime_class_map = classes;
    cfg.tracts_path = dir / "tracts.csv";
    cfg.crimes_path = dir / "crimes.csv";
    cfg.od_path = dir / "od.csv";
    std::string name = dir.filename().string();
    if (name.empty()) name = dir.parent_path().filename().string();
    const fs::path meta = dir / "city.json";
    if (fs::exists(meta)) {
        auto in = open_input(meta);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
            name = j.value("city_name", name);
            if (j.contains("period"))
                cfg.period = DateRange{StudyDate::parse(j["period"].at("first").get<std::string>()),
                                       StudyDate::parse(j["period"].at("last").get<std::string>())};
        } catch (const nlohmann::json::exception& e) {
            throw DataError(meta.string() + ": " + e.what());
        }
    }
    return load_city(name, cfg);
}

void write_tracts(std::ostream& out, const std::vector<Tract>& tracts) {
    out << "tract_id,x_meters,y_meters\n";
    for (const auto& t : tracts) out << t.id << ',' << format_double(t.x) << ',' << format_double(t.y) << '\n';
}

void write_crimes(std::ostream& out, const std::vector<CrimeEvent>& crimes) {
    out << "date,tract_id,category\n";
    for (const auto& e : crimes) out << e.date.iso() << ',' << e.tract_id << ',' << e.category << '\n';
}

void write_od_flows(std::ostream& out, const std::vector<ODFlowRecord>& flows) {
    out << "date,origin,dest,volume\n";
    for (const auto& r : flows)
        out << r.date.iso() << ',' << format_region(r.origin) << ',' << format_region(r.dest) << ','
            << format_double(r.volume) << '\n';
}

void save_city_dir(const CityDataset& ds, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    {
        auto out = open_output(dir / "tracts.csv");
        write_tracts(out, ds.tracts);
    }
    {
        auto out = open_output(dir / "crimes.csv");
        write_crimes(out, ds.crimes);
    }
    {
        auto out = open_output(dir / "od.csv");
        write_od_flows(out, ds.od_flows);
    }
    nlohmann::json meta;
    meta["city_name"] = ds.city_name;
    meta["period"] = {{"first", ds.period.first.iso()}, {"last", ds.period.last.iso()}};
    auto out = open_output(dir / "city.json");
    out << meta.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + (dir / "city.json").string());
}

IngestConfig ingest_config_from_json(const std::string& json_text, const fs::path& base_dir) {
    IngestConfig cfg;
    try {
        const auto root = nlohmann::json::parse(json_text);
        const auto& j = root.contains("ingest") ? root["ingest"] : root;
        if (j.contains("crime_class_map")) {
            cfg.crime_class_map.clear();
            for (const auto& [category, cls] : j["crime_class_map"].items())
                cfg.crime_class_map.emplace(category, parse_crime_class(cls.get<std::string>()));
        }
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            auto resolve = [&](const char* key) {
                const fs::path raw = p.value(key, std::string{});
                return raw.empty() || raw.is_absolute() ? raw : base_dir / raw;
            };
            cfg.tracts_path = resolve("tracts");
            cfg.crimes_path = resolve("crimes");
            cfg.od_path = resolve("od");
        }
        if (j.contains("period"))
            cfg.period = DateRange{StudyDate::parse(j["period"].at("first").get<std::string>()),
                                   StudyDate::parse(j["period"].at("last").get<std::string>())};
        cfg.volume_scale = j.value("volume_scale", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad ingest configuration: ") + e.what());
    }
    if (!(cfg.volume_scale > 0.0) || !std::isfinite(cfg.volume_scale))
        throw DataError("volume_scale must be positive and finite");
    return cfg;
}

} // namespace crimexfer

namespace crimexfer {

std::uint32_t dataset_checksum(const CityDataset& ds) {
    std::ostringstream text;
    write_tracts(text, ds.tracts);
    write_crimes(text, ds.crimes);
    write_od_flows(text, ds.od_flows);
    const std::string s = text.str();
    return static_cast<std::uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

} // namespace crimexfer
