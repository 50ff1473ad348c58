#pragma once

#include <span>
#include <vector>

#include "lgenet/cloud.hpp"

namespace lgenet {

// Voxel-grid subsampling. Cells are anchored at the global origin
// (floor(x / cell)); each occupied cell emits one point at the barycenter of
// its members, with averaged intensity/return count and majority-vote label
// and segment (ties go to the lowest id). Output order is first appearance
// of each cell in the input.
struct GridSubsampleResult {
    PointCloud cloud;
    std::vector<int32_t> cell_of_input;  // output point index per input point
};

GridSubsampleResult grid_subsample(const PointCloud& cloud, double cell_size);

// Positions-only variant used when building pyramid levels.
struct GridPositionsResult {
    std::vector<double> xyz;
    std::vector<int32_t> cell_of_input;
};

GridPositionsResult grid_subsample_positions(std::span<const double> xyz, double cell_size);

}  // namespace lgenet
