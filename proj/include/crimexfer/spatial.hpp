#pragma once

#include "crimexfer/dataset.hpp"
#include "crimexfer/features.hpp"
#include "crimexfer/tensor.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace crimexfer {

constexpr std::size_t kNeighborCount = 8;

/// Grid cell (row, col) of the neighbor with distance rank r (1-based) is kRankCells[r - 1].
/// Ranks pair up across the center: left/right, up/down, then the two diagonals.
inline constexpr std::array<std::pair<int, int>, kNeighborCount> kRankCells{{
    {1, 0}, {1, 2}, {0, 1}, {2, 1}, {0, 0}, {2, 2}, {0, 2}, {2, 0},
}};

struct NeighborArrangement {
    std::string target;
    std::array<std::array<std::string, 3>, 3> cells;
    /// by_rank[r - 1] is the neighbor with distance rank r.
    std::array<std::string, kNeighborCount> by_rank;

    const std::string& cell(int row, int col) const { return cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]; }
    /// 1..8 for neighbors, 0 for the target; throws DataError if absent.
    int rank_of(const std::string& id) const;
};

/// The k nearest tracts by Euclidean centroid distance, ties broken by ascending id.
/// NotEnoughTracts if fewer than k + 1 tracts exist.
std::vector<std::string> nearest_neighbors(const std::vector<Tract>& tracts, const std::string& target,
                                           std::size_t k = kNeighborCount);

/// ArityError unless exactly 8 neighbors are supplied.
NeighborArrangement arrange_grid(const std::string& target, const std::vector<std::string>& neighbors);

/// Neighbor grids of every tract of a city, as tract positions (row-major cell order).
class NeighborMap {
public:
    NeighborMap() = default;
    explicit NeighborMap(const std::vector<Tract>& tracts);

    std::size_t tract_count() const { return cells_.size(); }
    /// cells(i)[r * 3 + c] = tract position at grid cell (r, c) for target i.
    const std::array<std::size_t, 9>& cells(std::size_t tract) const { return cells_[tract]; }
    const NeighborArrangement& arrangement(std::size_t tract) const { return arrangements_[tract]; }

    /// CSV `target,rank,neighbor,distance_m`.
    void write_csv(std::ostream& out, const std::vector<Tract>& tracts) const;

private:
    std::vector<std::array<std::size_t, 9>> cells_;
    std::vector<NeighborArrangement> arrangements_;
};

struct GridInput {
    nn::Tensor grid;              // (11 * T, 3, 3); channel d * 11 + f, d oldest-first
    std::array<double, 7> dow{};  // one-hot of the prediction day's weekday
};

/// Standardized look-back features of the arrangement's nine tracts for predicting day t.
GridInput grid_tensor(const NeighborArrangement& arr, const FeaturePanel& panel, const FeatureStats& stats,
                      const StudyDate& t, int lookback_days);

} // namespace crimexfer
