#include "crimexfer/error.hpp"
#include "crimexfer/rng.hpp"
#include "crimexfer/spatial.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace crimexfer;

namespace {

std::vector<Tract> random_tracts(CounterRng& rng, std::size_t n, bool lattice) {
    std::vector<Tract> t;
    for (std::size_t i = 0; i < n; ++i) {
        // Lattice coordinates produce many exact distance ties.
        const double x = lattice ? double(rng.below(6)) : rng.uniform(-1000, 1000);
        const double y = lattice ? double(rng.below(6)) : rng.uniform(-1000, 1000);
        t.push_back({"t" + std::to_string(rng()), x, y});
    }
    return t;
}

std::vector<std::string> brute_force_neighbors(const std::vector<Tract>& tracts, const std::string& target, std::size_t k) {
    const Tract& c = *std::find_if(tracts.begin(), tracts.end(), [&](const Tract& t) { return t.id == target; });
    std::vector<std::pair<double, std::string>> all;
    for (const auto& t : tracts)
        if (t.id != target) all.emplace_back((t.x - c.x) * (t.x - c.x) + (t.y - c.y) * (t.y - c.y), t.id);
    std::sort(all.begin(), all.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
    return out;
}

std::vector<std::string> eight(const char* prefix) {
    std::vector<std::string> v;
    for (int i = 2; i <= 9; ++i) v.push_back(std::string(prefix) + std::to_string(i));
    return v;
}

} // namespace

TEST(NearestNeighbors, PreSortedDistances) {
    std::vector<Tract> t{{"O", 0, 0}};
    for (int d = 8; d >= 1; --d) t.push_back({"n" + std::to_string(d), double(d), 0});
    EXPECT_EQ(nearest_neighbors(t, "O"), (std::vector<std::string>{"n1", "n2", "n3", "n4", "n5", "n6", "n7", "n8"}));
}

TEST(NearestNeighbors, TiesBreakByAscendingId) {
    std::vector<Tract> t{{"O", 0, 0}, {"B", 1, 0}, {"A", 0, 1}};
    for (int d = 2; d <= 8; ++d) t.push_back({"z" + std::to_string(d), double(d), 0});
    const auto n = nearest_neighbors(t, "O");
    EXPECT_EQ(n[0], "A");
    EXPECT_EQ(n[1], "B");
}

TEST(NearestNeighbors, TooFewTracts) {
    std::vector<Tract> t;
    for (int i = 0; i < 8; ++i) t.push_back({"t" + std::to_string(i), double(i), 0});
    EXPECT_THROW(nearest_neighbors(t, "t0"), NotEnoughTracts);
    EXPECT_THROW(NeighborMap{t}, NotEnoughTracts);
}

TEST(NearestNeighbors, MatchesBruteForceSort) {
    CounterRng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = trial < 20 ? 9 : 9 + rng.below(192);
        const auto tracts = random_tracts(rng, n, trial % 2 == 0);
        for (int probe = 0; probe < 3; ++probe) {
            const std::string& target = tracts[rng.below(n)].id;
            ASSERT_EQ(nearest_neighbors(tracts, target), brute_force_neighbors(tracts, target, 8)) << "trial " << trial;
        }
    }
}

TEST(ArrangeGrid, DeclaredCellConvention) {
    const auto arr = arrange_grid("s1", eight("s"));
    EXPECT_EQ(arr.cell(1, 1), "s1");
    EXPECT_EQ(arr.cell(1, 0), "s2");
    EXPECT_EQ(arr.cell(1, 2), "s3");
    EXPECT_EQ(arr.cell(0, 1), "s4");
    EXPECT_EQ(arr.cell(2, 1), "s5");
    EXPECT_EQ(arr.cell(0, 0), "s6");
    EXPECT_EQ(arr.cell(2, 2), "s7");
    EXPECT_EQ(arr.cell(0, 2), "s8");
    EXPECT_EQ(arr.cell(2, 0), "s9");
    EXPECT_EQ(arr.rank_of("s1"), 0);
    EXPECT_EQ(arr.rank_of("s6"), 5);
    EXPECT_THROW(arr.rank_of("nope"), DataError);
}

TEST(ArrangeGrid, WrongArity) {
    auto n = eight("s");
    n.pop_back();
    EXPECT_THROW(arrange_grid("s1", n), ArityError);
    n.push_back("a");
    n.push_back("b");
    EXPECT_THROW(arrange_grid("s1", n), ArityError);
}

TEST(ArrangeGrid, CellDependsOnlyOnRank) {
    CounterRng rng(8);
    auto n = eight("q");
    for (int trial = 0; trial < 50; ++trial) {
        std::shuffle(n.begin(), n.end(), rng);
        const auto arr = arrange_grid("c", n);
        std::set<std::string> ids;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) ids.insert(arr.cell(r, c));
        ASSERT_EQ(ids.size(), 9u);
        ASSERT_EQ(arr.cell(1, 1), "c");
        for (std::size_t r = 0; r < 8; ++r) {
            const auto [row, col] = kRankCells[r];
            ASSERT_EQ(arr.cell(row, col), n[r]);
            ASSERT_EQ(arr.rank_of(n[r]), int(r) + 1);
        }
    }
}

TEST(NeighborMap, AgreesWithPerTractFunctions) {
    CounterRng rng(5);
    const auto tracts = random_tracts(rng, 40, false);
    const NeighborMap map(tracts);
    for (std::size_t i = 0; i < tracts.size(); ++i) {
        const auto arr = arrange_grid(tracts[i].id, nearest_neighbors(tracts, tracts[i].id));
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) ASSERT_EQ(tracts[map.cells(i)[r * 3 + c]].id, arr.cell(r, c));
    }
    std::ostringstream csv;
    map.write_csv(csv, tracts);
    const std::string text = csv.str();
    EXPECT_EQ(text.rfind("target,rank,neighbor,distance_m\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 40 * 8);
}

class GridTensorTest : public ::testing::Test {
protected:
    void SetUp() override {
        for (std::uint64_t seed = 77;; ++seed) {
            ds = oracle::random_dataset(seed, 30, 30, 1000);
            if (ds.period.days() >= 10) break;
        }
        build = build_panel(ds, CrimeClass::Property);
        stats = fit_stats(build.panel, ds.period);
        map = NeighborMap(ds.tracts);
    }
    CityDataset ds;
    PanelBuild build;
    FeatureStats stats;
    NeighborMap map;
};

TEST_F(GridTensorTest, ValuesAreStandardizedPanelLookups) {
    const int T = 3;
    for (std::size_t i = 0; i < ds.tracts.size(); ++i) {
        const StudyDate t = ds.period.last;
        const auto in = grid_tensor(map.arrangement(i), build.panel, stats, t, T);
        ASSERT_EQ(in.grid.shape(), (std::vector<std::size_t>{kFeatureChannels * T, 3, 3}));
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                const std::string& id = map.arrangement(i).cell(r, c);
                for (int d = 0; d < T; ++d) {
                    const Channels z = apply_stats(stats, build.panel.at(id, t.plus_days(d - T)));
                    for (std::size_t f = 0; f < kFeatureChannels; ++f)
                        ASSERT_EQ(in.grid.at(std::size_t(d) * kFeatureChannels + f, r, c), z[f]);
                }
            }
        for (int k = 0; k < 7; ++k) ASSERT_EQ(in.dow[k], k == day_of_week(t) ? 1.0 : 0.0);
    }
}

TEST_F(GridTensorTest, ZeroPanelGivesNegativeMeanOverSd) {
    FeaturePanel zero(ds.period, build.panel.tract_ids());
    const StudyDate t = ds.period.last;
    const auto in = grid_tensor(map.arrangement(0), zero, stats, t, 1);
    for (std::size_t f = 0; f < kFeatureChannels; ++f)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) ASSERT_EQ(in.grid.at(f, r, c), -stats.mean[f] / stats.sd[f]);
}

TEST_F(GridTensorTest, ShapeForSevenDaysAndHistoryCheck) {
    const auto in = grid_tensor(map.arrangement(0), build.panel, stats, ds.period.last, 7);
    EXPECT_EQ(in.grid.size(), 77u * 9u);
    EXPECT_EQ(in.dow.size(), 7u);
    EXPECT_THROW(grid_tensor(map.arrangement(0), build.panel, stats, ds.period.first.plus_days(3), 7), InsufficientHistory);
}
