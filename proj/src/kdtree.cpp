#include "lgenet/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lgenet {

KdTree::KdTree(std::span<const double> xyz) {
    check(xyz.size() % 3 == 0, "kdtree: point array length must be a multiple of 3");
    n_ = static_cast<int64_t>(xyz.size() / 3);
    pts_.assign(xyz.begin(), xyz.end());
    order_.resize(static_cast<size_t>(n_));
    std::iota(order_.begin(), order_.end(), 0);
    if (n_ > 0) {
        nodes_.reserve(static_cast<size_t>(2 * n_ / kLeafSize + 2));
        root_ = build(0, static_cast<int32_t>(n_));
    }
}

int32_t KdTree::build(int32_t begin, int32_t end) {
    Node nd;
    nd.begin = begin;
    nd.end = end;
    for (int a = 0; a < 3; ++a) {
        nd.bb_min[a] = std::numeric_limits<double>::infinity();
        nd.bb_max[a] = -std::numeric_limits<double>::infinity();
    }
    for (int32_t i = begin; i < end; ++i) {
        const double* p = &pts_[static_cast<size_t>(order_[static_cast<size_t>(i)]) * 3];
        for (int a = 0; a < 3; ++a) {
            nd.bb_min[a] = std::min(nd.bb_min[a], p[a]);
            nd.bb_max[a] = std::max(nd.bb_max[a], p[a]);
        }
    }
    const int32_t id = static_cast<int32_t>(nodes_.size());
    nodes_.push_back(nd);
    if (end - begin <= kLeafSize) return id;

    int axis = 0;
    double extent = nd.bb_max[0] - nd.bb_min[0];
    for (int a = 1; a < 3; ++a) {
        const double e = nd.bb_max[a] - nd.bb_min[a];
        if (e > extent) {
            extent = e;
            axis = a;
        }
    }
    if (extent == 0.0) return id;  // all points coincident

    const int32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int32_t a, int32_t b) {
                         const double pa = pts_[static_cast<size_t>(a) * 3 + axis];
                         const double pb = pts_[static_cast<size_t>(b) * 3 + axis];
                         if (pa != pb) return pa < pb;
                         return a < b;
                     });
    const int32_t left = build(begin, mid);
    const int32_t right = build(mid, end);
    nodes_[static_cast<size_t>(id)].left = left;
    nodes_[static_cast<size_t>(id)].right = right;
    return id;
}

double KdTree::box_dist2(const Node& nd, const double* q) const {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
        double d = 0.0;
        if (q[a] < nd.bb_min[a])
            d = nd.bb_min[a] - q[a];
        else if (q[a] > nd.bb_max[a])
            d = q[a] - nd.bb_max[a];
        d2 += d * d;
    }
    return d2;
}

void KdTree::radius_rec(int32_t node, const double* q, double r2,
                        std::vector<int32_t>& out) const {
    const Node& nd = nodes_[static_cast<size_t>(node)];
    if (box_dist2(nd, q) > r2) return;
    if (nd.left < 0) {
        for (int32_t i = nd.begin; i < nd.end; ++i) {
            const int32_t idx = order_[static_cast<size_t>(i)];
            const double* p = &pts_[static_cast<size_t>(idx) * 3];
            const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
            if (dx * dx + dy * dy + dz * dz <= r2) out.push_back(idx);
        }
        return;
    }
    radius_rec(nd.left, q, r2, out);
    radius_rec(nd.right, q, r2, out);
}

void KdTree::radius(const double* q, double r, std::vector<int32_t>& out) const {
    out.clear();
    if (root_ < 0 || r < 0.0) return;
    radius_rec(root_, q, r * r, out);
    std::sort(out.begin(), out.end());
}

void KdTree::nearest_rec(int32_t node, const double* q, double& best_d2,
                         int32_t& best_idx) const {
    const Node& nd = nodes_[static_cast<size_t>(node)];
    if (box_dist2(nd, q) > best_d2) return;
    if (nd.left < 0) {
        for (int32_t i = nd.begin; i < nd.end; ++i) {
            const int32_t idx = order_[static_cast<size_t>(i)];
            const double* p = &pts_[static_cast<size_t>(idx) * 3];
            const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
            const double d2 = dx * dx + dy * dy + dz * dz;
            if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
                best_d2 = d2;
                best_idx = idx;
            }
        }
        return;
    }
    // Descend into the closer child first.
    const double dl = box_dist2(nodes_[static_cast<size_t>(nd.left)], q);
    const double dr = box_dist2(nodes_[static_cast<size_t>(nd.right)], q);
    if (dl <= dr) {
        nearest_rec(nd.left, q, best_d2, best_idx);
        nearest_rec(nd.right, q, best_d2, best_idx);
    } else {
        nearest_rec(nd.right, q, best_d2, best_idx);
        nearest_rec(nd.left, q, best_d2, best_idx);
    }
}

int32_t KdTree::nearest(const double* q) const {
    if (root_ < 0) return -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    int32_t best_idx = std::numeric_limits<int32_t>::max();
    nearest_rec(root_, q, best_d2, best_idx);
    return best_idx;
}

void KdTree::knn(const double* q, int k, std::vector<int32_t>& out) const {
    out.clear();
    if (root_ < 0 || k <= 0) return;
    // (d2, idx) max-heap of current best k; ordering ensures deterministic
    // tie handling by index.
    using Cand = std::pair<double, int32_t>;
    std::vector<Cand> heap;
    heap.reserve(static_cast<size_t>(k) + 1);
    auto worse = [](const Cand& a, const Cand& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    };
    // Simple pruned traversal reusing radius logic with a shrinking bound.
    std::vector<int32_t> stack = {root_};
    while (!stack.empty()) {
        const int32_t node = stack.back();
        stack.pop_back();
        const Node& nd = nodes_[static_cast<size_t>(node)];
        const double bound = heap.size() == static_cast<size_t>(k)
                                 ? heap.front().first
                                 : std::numeric_limits<double>::infinity();
        if (box_dist2(nd, q) > bound) continue;
        if (nd.left < 0) {
            for (int32_t i = nd.begin; i < nd.end; ++i) {
                const int32_t idx = order_[static_cast<size_t>(i)];
                const double* p = &pts_[static_cast<size_t>(idx) * 3];
                const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
                const Cand c{dx * dx + dy * dy + dz * dz, idx};
                if (heap.size() < static_cast<size_t>(k)) {
                    heap.push_back(c);
                    std::push_heap(heap.begin(), heap.end(), worse);
                } else if (worse(c, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), worse);
                    heap.back() = c;
                    std::push_heap(heap.begin(), heap.end(), worse);
                }
            }
        } else {
            stack.push_back(nd.left);
            stack.push_back(nd.right);
        }
    }
    std::sort(heap.begin(), heap.end(), worse);
    out.reserve(heap.size());
    for (const auto& c : heap) out.push_back(c.second);
}

}  // namespace lgenet
