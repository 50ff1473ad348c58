#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lgenet/tensor.hpp"

namespace lgenet {

// Static k-d tree over 3-D points for exact radius and nearest-neighbor
// queries. Immutable after construction; queries are const and safe to run
// concurrently.
class KdTree {
public:
    // xyz is a flat array of N triples; copied in.
    explicit KdTree(std::span<const double> xyz);

    int64_t size() const { return n_; }

    // Indices of all points within Euclidean distance r of q (inclusive),
    // sorted ascending.
    void radius(const double* q, double r, std::vector<int32_t>& out) const;

    // Index of the nearest point; ties broken by lowest index. -1 when empty.
    int32_t nearest(const double* q) const;

    // k nearest points ordered by (distance, index); fewer if the tree is
    // smaller than k.
    void knn(const double* q, int k, std::vector<int32_t>& out) const;

private:
    struct Node {
        int32_t left = -1;
        int32_t right = -1;
        int32_t begin = 0;
        int32_t end = 0;  // leaf: index range into order_
        double bb_min[3];
        double bb_max[3];
    };

    int32_t build(int32_t begin, int32_t end);
    void radius_rec(int32_t node, const double* q, double r2,
                    std::vector<int32_t>& out) const;
    void nearest_rec(int32_t node, const double* q, double& best_d2,
                     int32_t& best_idx) const;
    double box_dist2(const Node& nd, const double* q) const;

    int64_t n_ = 0;
    std::vector<double> pts_;       // 3 * n
    std::vector<int32_t> order_;    // permutation grouped by leaf
    std::vector<Node> nodes_;
    int32_t root_ = -1;
    static constexpr int32_t kLeafSize = 16;
};

}  // namespace lgenet
