#include "crimexfer/error.hpp"
#include "crimexfer/ingest.hpp"
#include "crimexfer/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace crimexfer;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("crimexfer_ingest_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST(ParseTracts, WellFormedRows) {
    std::istringstream in("tract_id,x_meters,y_meters\nA,0,0\nB,1.5,-2\r\nC,1e3,4\n");
    const auto t = parse_tracts(in);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t[1], (Tract{"B", 1.5, -2.0}));
    EXPECT_EQ(t[2].x, 1000.0);
}

TEST(ParseTracts, DuplicateIdNamesTheId) {
    std::istringstream in("tract_id,x_meters,y_meters\nA,0,0\nB,1,1\nA,2,2\n");
    try {
        parse_tracts(in);
        FAIL() << "expected DuplicateTract";
    } catch (const DuplicateTract& e) {
        EXPECT_EQ(e.id(), "A");
    }
}

TEST(ParseTracts, NonNumericCoordinateNamesTheLine) {
    std::istringstream in("tract_id,x_meters,y_meters\nA,0,0\nB,abc,1\n");
    try {
        parse_tracts(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream inf("tract_id,x_meters,y_meters\nA,inf,0\n");
    EXPECT_THROW(parse_tracts(inf), ParseError);
}

TEST(ParseTracts, ChicagoScale) {
    std::ostringstream text;
    text << "tract_id,x_meters,y_meters\n";
    for (int i = 0; i < 809; ++i) text << "CT" << i << ',' << i * 10 << ',' << (i * 37) % 1000 << '\n';
    std::istringstream in(text.str());
    EXPECT_EQ(parse_tracts(in).size(), 809u);
}

TEST(ParseTracts, HeaderIsChecked) {
    std::istringstream in("id,x,y\nA,0,0\n");
    EXPECT_THROW(parse_tracts(in), ParseError);
    std::istringstream empty("");
    EXPECT_THROW(parse_tracts(empty), ParseError);
}

TEST(ParseCrimes, DefaultMapClassifies) {
    std::istringstream in("date,tract_id,category\n2020-03-02,T7,burglary\n2020-03-02,T7,robbery\n");
    const auto c = parse_crimes(in, default_crime_class_map());
    ASSERT_EQ(c.items.size(), 2u);
    EXPECT_EQ(c.items[0], (CrimeEvent{StudyDate(2020, 3, 2), "T7", "burglary"}));
    EXPECT_EQ(default_crime_class_map().at(c.items[0].category), CrimeClass::Property);
    EXPECT_EQ(default_crime_class_map().at(c.items[1].category), CrimeClass::Violent);
}

TEST(ParseCrimes, UnknownCategoryWarnsAndDrops) {
    std::istringstream in("date,tract_id,category\n2020-03-02,T7,graffiti\n2020-03-03,T7,graffiti\n2020-03-03,T7,arson\n");
    const auto c = parse_crimes(in, default_crime_class_map());
    EXPECT_EQ(c.items.size(), 1u);
    ASSERT_EQ(c.warnings.size(), 1u);
    EXPECT_NE(c.warnings[0].find("graffiti"), std::string::npos);
}

TEST(ParseCrimes, HeaderOnlyIsEmpty) {
    std::istringstream in("date,tract_id,category\n");
    EXPECT_TRUE(parse_crimes(in, default_crime_class_map()).items.empty());
}

TEST(ParseCrimes, MalformedDateNamesTheLine) {
    std::istringstream in("date,tract_id,category\n2020-03-02,T7,arson\n2020-02-30,T7,arson\n");
    try {
        parse_crimes(in, default_crime_class_map());
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(ParseOdFlows, Endpoints) {
    std::istringstream in("date,origin,dest,volume\n"
                          "2020-01-05,t:A,t:B,10.0\n"
                          "2020-01-05,x:MD/Howard,t:A,7.5\n"
                          "2020-01-05,x:MD/Howard,x:VA/Fairfax,3\n");
    const auto f = parse_od_flows(in);
    ASSERT_EQ(f.items.size(), 2u);
    EXPECT_EQ(f.items[0].origin, RegionRef(InCity{"A"}));
    EXPECT_EQ(f.items[0].dest, RegionRef(InCity{"B"}));
    EXPECT_EQ(f.items[0].volume, 10.0);
    EXPECT_EQ(f.items[1].origin, RegionRef(External{"MD", "Howard"}));
    EXPECT_EQ(f.items[1].volume, 7.5);
    EXPECT_EQ(f.warnings.size(), 1u);
}

TEST(ParseOdFlows, Errors) {
    std::istringstream neg("date,origin,dest,volume\n2020-01-05,t:A,t:B,-1\n");
    EXPECT_THROW(parse_od_flows(neg), ParseError);
    for (const char* bad : {"q:A", "t:", "x:MD", "x:/C", "x:MD/"}) {
        std::istringstream in(std::string("date,origin,dest,volume\n2020-01-05,") + bad + ",t:B,1\n");
        EXPECT_THROW(parse_od_flows(in), ParseError) << bad;
    }
}

TEST(ParseOdFlows, VolumeScale) {
    std::istringstream in("date,origin,dest,volume\n2020-01-05,t:A,t:B,4\n");
    EXPECT_EQ(parse_od_flows(in, 2.5).items[0].volume, 10.0);
}

TEST(Region, FormatParseRoundTrip) {
    for (const RegionRef& r : {RegionRef(InCity{"T001"}), RegionRef(External{"MD", "Howard County"})})
        EXPECT_EQ(parse_region(format_region(r)), r);
}

TEST(LoadCity, PeriodDefaultsToDataSpanAndOverride) {
    const fs::path dir = scratch_dir("span");
    write_file(dir / "tracts.csv", "tract_id,x_meters,y_meters\nB,1,1\nA,0,0\n");
    write_file(dir / "crimes.csv", "date,tract_id,category\n2020-03-05,A,arson\n");
    write_file(dir / "od.csv", "date,origin,dest,volume\n2020-02-01,t:A,t:B,1\n2020-04-01,t:B,t:A,1\n");
    IngestConfig cfg;
    cfg.tracts_path = dir / "tracts.csv";
    cfg.crimes_path = dir / "crimes.csv";
    cfg.od_path = dir / "od.csv";
    auto loaded = load_city("x", cfg);
    const CityDataset& ds = loaded.items.at(0);
    EXPECT_EQ(ds.period, (DateRange{StudyDate(2020, 2, 1), StudyDate(2020, 4, 1)}));
    EXPECT_EQ(ds.tracts.front().id, "A"); // normalized order
    cfg.period = DateRange{StudyDate(2020, 1, 1), StudyDate(2020, 12, 31)};
    EXPECT_EQ(load_city("x", cfg).items.at(0).period, *cfg.period);
    cfg.od_path = dir / "missing.csv";
    EXPECT_THROW(load_city("x", cfg), IoError);
}

TEST(LoadCity, RoundTripThroughDirectory) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        CityDataset ds = oracle::random_dataset(seed, 20, 40, 300);
        ds.city_name = "rt" + std::to_string(seed);
        // Drop unmapped categories, which the loader discards by design.
        std::erase_if(ds.crimes, [&](const CrimeEvent& e) { return !ds.crime_class_map.contains(e.category); });
        const fs::path dir = scratch_dir("rt") / ds.city_name;
        save_city_dir(ds, dir);
        const CityDataset back = load_city_dir(dir).items.at(0);
        ASSERT_EQ(back, ds) << "seed " << seed;
        EXPECT_EQ(dataset_checksum(back), dataset_checksum(ds));
    }
}

TEST(Loader, TotalOverMutatedInput) {
    // Random byte edits of valid files either parse or raise a line-numbered error.
    const std::string tracts = "tract_id,x_meters,y_meters\nA,0,0\nB,1.5,2\nC,3,4\n";
    const std::string crimes = "date,tract_id,category\n2020-01-02,A,arson\n2020-01-03,B,robbery\n";
    const std::string flows = "date,origin,dest,volume\n2020-01-05,t:A,t:B,10.0\n2020-01-05,x:MD/Howard,t:A,7.5\n";
    const std::string alphabet = "0123456789,:-./xtAB\r\n \"e";
    CounterRng rng(99);
    int parsed = 0, rejected = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        const int which = trial % 3;
        std::string text = which == 0 ? tracts : which == 1 ? crimes : flows;
        const int edits = 1 + static_cast<int>(rng.below(4));
        for (int e = 0; e < edits; ++e) {
            const auto pos = rng.below(text.size());
            switch (rng.below(3)) {
            case 0: text[pos] = alphabet[rng.below(alphabet.size())]; break;
            case 1: text.erase(pos, 1); break;
            default: text.insert(pos, 1, alphabet[rng.below(alphabet.size())]);
            }
        }
        std::istringstream in(text);
        try {
            if (which == 0) parse_tracts(in);
            else if (which == 1) parse_crimes(in, default_crime_class_map());
            else parse_od_flows(in);
            ++parsed;
        } catch (const ParseError& e) {
            EXPECT_GE(e.line(), 1u);
            ++rejected;
        } catch (const DuplicateTract&) {
            ++rejected;
        }
    }
    EXPECT_GT(parsed, 0);
    EXPECT_GT(rejected, 0);
}

TEST(IngestConfig, FromJson) {
    const auto cfg = ingest_config_from_json(R"({"ingest": {
        "crime_class_map": {"theft": "property", "assault": "violent"},
        "paths": {"tracts": "t.csv", "crimes": "/abs/c.csv", "od": "o.csv"},
        "period": {"first": "2020-01-01", "last": "2020-12-31"},
        "volume_scale": 2.0}})",
                                             "/base");
    EXPECT_EQ(cfg.crime_class_map.size(), 2u);
    EXPECT_EQ(cfg.crime_class_map.at("assault"), CrimeClass::Violent);
    EXPECT_EQ(cfg.tracts_path, fs::path("/base/t.csv"));
    EXPECT_EQ(cfg.crimes_path, fs::path("/abs/c.csv"));
    EXPECT_EQ(cfg.volume_scale, 2.0);
    EXPECT_THROW(ingest_config_from_json(R"({"volume_scale": -1})"), DataError);
    EXPECT_THROW(ingest_config_from_json(R"({"crime_class_map": {"x": "neither"}})"), DataError);
    EXPECT_THROW(ingest_config_from_json("{not json"), DataError);
}
