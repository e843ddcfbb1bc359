#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pillarnav/pointcloud.hpp"
#include "pillarnav/tensor.hpp"

namespace pillarnav {

// Vertical-pillar binning of the horizontal plane. Rows bin x, columns bin y;
// z is fully collapsed.
struct PillarConfig {
    float x_min, x_max;
    float y_min, y_max;
    float z_min, z_max;
    float cell_x, cell_y;

    int rows() const;  // H
    int cols() const;  // W
    void validate() const;  // throws unless ranges divide evenly into cells

    // Literal camera-space preset: 128x128 cells, z in (0,10) collapsed.
    static PillarConfig paper_preset();
    // Simulator preset: x lateral (-9.6,9.6)@0.15, y forward (0,9.6)@0.075,
    // z height (0,2) collapsed -> 128x128.
    static PillarConfig sim_preset();
};

// Per-pillar aggregate features, indexed by active cell.
inline constexpr int kPillarFeatureDim = 6;

struct SparseBEVGrid {
    int rows = 0;
    int cols = 0;
    // Active sites in row-major order, strictly increasing.
    std::vector<std::pair<int, int>> sites;
    Tensor features;  // [A, C]
    std::vector<int> counts;  // raw point count per active site (empty after conv stages)

    size_t active() const { return sites.size(); }
};

// Bins in-range points into pillars. Out-of-range points are dropped; a fully
// empty grid is valid. Per-cell feature: [log-normalized count, mean dx from
// cell center, mean dy from cell center, mean z, min z, max z]. Aggregation is
// order-independent (points are sorted within each cell), so any permutation
// of the input yields a bit-identical grid.
SparseBEVGrid pillarize(const PointCloud& cloud, const PillarConfig& cfg);

// Occupancy dumps for the `inspect` command.
void write_occupancy_csv(const std::string& path, const SparseBEVGrid& grid);
void write_occupancy_pgm(const std::string& path, const SparseBEVGrid& grid);

}  // namespace pillarnav
