#include "crimexfer/spatial.hpp"

#include "crimexfer/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

namespace crimexfer {

int NeighborArrangement::rank_of(const std::string& id) const {
    if (id == target) return 0;
    for (std::size_t r = 0; r < by_rank.size(); ++r)
        if (by_rank[r] == id) return static_cast<int>(r) + 1;
    throw DataError("tract '" + id + "' is not in the neighborhood of '" + target + "'");
}

namespace {

struct Candidate {
    double dist2;
    const std::string* id;
    std::size_t pos;
};

std::vector<Candidate> ranked_candidates(const std::vector<Tract>& tracts, std::size_t target_pos, std::size_t k) {
    const Tract& t = tracts[target_pos];
    std::vector<Candidate> cands;
    cands.reserve(tracts.size());
    for (std::size_t i = 0; i < tracts.size(); ++i) {
        if (i == target_pos) continue;
        const double dx = tracts[i].x - t.x, dy = tracts[i].y - t.y;
        cands.push_back({dx * dx + dy * dy, &tracts[i].id, i});
    }
    auto closer = [](const Candidate& a, const Candidate& b) {
        return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : *a.id < *b.id;
    };
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(), closer);
    cands.resize(k);
    return cands;
}

std::size_t position_of(const std::vector<Tract>& tracts, const std::string& id) {
    for (std::size_t i = 0; i < tracts.size(); ++i)
        if (tracts[i].id == id) return i;
    throw DataError("unknown tract '" + id + "'");
}

} // namespace

std::vector<std::string> nearest_neighbors(const std::vector<Tract>& tracts, const std::string& target, std::size_t k) {
    if (tracts.size() < k + 1)
        throw NotEnoughTracts("need at least " + std::to_string(k + 1) + " tracts for " + std::to_string(k) +
                              " neighbors, city has " + std::to_string(tracts.size()));
    std::vector<std::string> out;
    for (const auto& c : ranked_candidates(tracts, position_of(tracts, target), k)) out.push_back(*c.id);
    return out;
}

NeighborArrangement arrange_grid(const std::string& target, const std::vector<std::string>& neighbors) {
    if (neighbors.size() != kNeighborCount)
        throw ArityError("neighbor grid needs exactly 8 neighbors, got " + std::to_string(neighbors.size()));
    NeighborArrangement arr;
    arr.target = target;
    arr.cells[1][1] = target;
    for (std::size_t r = 0; r < kNeighborCount; ++r) {
        const auto [row, col] = kRankCells[r];
        arr.cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] = neighbors[r];
        arr.by_rank[r] = neighbors[r];
    }
    return arr;
}

NeighborMap::NeighborMap(const std::vector<Tract>& tracts) {
    if (tracts.size() < kNeighborCount + 1)
        throw NotEnoughTracts("need at least 9 tracts for neighbor grids, city has " + std::to_string(tracts.size()));
    cells_.resize(tracts.size());
    arrangements_.reserve(tracts.size());
    for (std::size_t i = 0; i < tracts.size(); ++i) {
        const auto ranked = ranked_candidates(tracts, i, kNeighborCount);
        std::vector<std::string> ids;
        for (const auto& c : ranked) ids.push_back(*c.id);
        arrangements_.push_back(arrange_grid(tracts[i].id, ids));
        cells_[i][4] = i;
        for (std::size_t r = 0; r < kNeighborCount; ++r) {
            const auto [row, col] = kRankCells[r];
            cells_[i][static_cast<std::size_t>(row * 3 + col)] = ranked[r].pos;
        }
    }
}

void NeighborMap::write_csv(std::ostream& out, const std::vector<Tract>& tracts) const {
    out << "target,rank,neighbor,distance_m\n";
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto& arr = arrangements_[i];
        for (std::size_t r = 0; r < kNeighborCount; ++r) {
            const auto [row, col] = kRankCells[r];
            const Tract& n = tracts[cells_[i][static_cast<std::size_t>(row * 3 + col)]];
            out << arr.target << ',' << r + 1 << ',' << n.id << ',' << std::hypot(n.x - tracts[i].x, n.y - tracts[i].y)
                << '\n';
        }
    }
}

GridInput grid_tensor(const NeighborArrangement& arr, const FeaturePanel& panel, const FeatureStats& stats,
                      const StudyDate& t, int lookback_days) {
    const auto T = static_cast<std::size_t>(lookback_days);
    GridInput in{nn::Tensor({kFeatureChannels * T, 3, 3}), {}};
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            const auto seq = lookback_sequence(panel, arr.cells[r][c], t, lookback_days);
            for (std::size_t d = 0; d < T; ++d) {
                const Channels z = apply_stats(stats, seq[d]);
                for (std::size_t f = 0; f < kFeatureChannels; ++f) in.grid.at(d * kFeatureChannels + f, r, c) = z[f];
            }
        }
    in.dow[static_cast<std::size_t>(day_of_week(t))] = 1.0;
    return in;
}

} // namespace crimexfer
