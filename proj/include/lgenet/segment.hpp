#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lgenet/cloud.hpp"

namespace lgenet {

// Per-point descriptors driving the partition: [linearity, planarity,
// sphericity, verticality, normalized intensity], each from the covariance
// of the k_adj nearest neighbors. Row-major N x 5.
std::vector<double> partition_features(const PointCloud& cloud, int k_adj,
                                       double intensity_max);

// Undirected k-NN adjacency as (i, j) pairs with i < j, sorted.
std::vector<std::pair<int32_t, int32_t>> knn_adjacency(const PointCloud& cloud, int k_adj);

// sum over points of |f_i - mean(segment(i))|^2 + lambda * (cut edge count).
double partition_objective(const std::vector<double>& features,
                           const std::vector<std::pair<int32_t, int32_t>>& adjacency,
                           const std::vector<uint32_t>& labels, double lambda);

struct PartitionResult {
    std::vector<uint32_t> segment_of_point;  // dense ids in [0, segment_count)
    int32_t segment_count = 0;
    double objective = 0.0;
};

// Greedy region merging on the k-NN adjacency graph: start from singletons
// and repeatedly apply the merge with the most negative objective delta until
// none improves. Ties break toward the lowest (min id, max id) root pair.
// Deterministic. Piecewise-constant surrogate with the same
// regularization-strength contract as L0 cut pursuit; externally supplied
// segment labels (the cloud's `segment` column) bypass it entirely.
PartitionResult partition(const PointCloud& cloud, double reg_strength, int k_adj,
                          double intensity_max = 1.0,
                          std::vector<double>* objective_trace = nullptr);

// Segment graph for SegECC: per node, directed edges to every other segment,
// subsampled to exactly max_edges out-edges (seeded) when there are more.
// Redrawn every training iteration via the seed.
struct SegmentGraph {
    int32_t segment_count = 0;
    std::vector<std::pair<int32_t, int32_t>> edges;  // (target, source), grouped by target
    std::vector<int32_t> node_offsets;               // segment_count + 1 offsets into edges
};

SegmentGraph build_edges(int32_t segment_count, int32_t max_edges, uint64_t seed);

}  // namespace lgenet
