#include "lgenet/grid.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

namespace lgenet {

namespace {

struct CellKey {
    int64_t ix, iy, iz;
    bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
    size_t operator()(const CellKey& k) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (int64_t c : {k.ix, k.iy, k.iz}) {
            h ^= static_cast<uint64_t>(c);
            h *= 0x100000001b3ULL;
        }
        return static_cast<size_t>(h);
    }
};

CellKey key_of(const double* p, double cell) {
    return CellKey{static_cast<int64_t>(std::floor(p[0] / cell)),
                   static_cast<int64_t>(std::floor(p[1] / cell)),
                   static_cast<int64_t>(std::floor(p[2] / cell))};
}

// Majority vote with ties broken by the lowest value.
template <typename K>
K majority(const std::map<K, int32_t>& votes) {
    K best{};
    int32_t best_n = -1;
    for (const auto& [val, n] : votes) {
        if (n > best_n) {  // map iterates ascending, so first max wins ties
            best_n = n;
            best = val;
        }
    }
    return best;
}

}  // namespace

GridSubsampleResult grid_subsample(const PointCloud& cloud, double cell_size) {
    check(cell_size > 0.0, "grid subsample: cell size must be positive");
    const int64_t n = cloud.size();

    struct Acc {
        double x = 0, y = 0, z = 0, inten = 0;
        int64_t count = 0;
        double returns = 0;
        std::map<int32_t, int32_t> label_votes;
        std::map<uint32_t, int32_t> segment_votes;
    };
    std::unordered_map<CellKey, int32_t, CellKeyHash> cell_ids;
    std::vector<Acc> cells;
    GridSubsampleResult res;
    res.cell_of_input.resize(static_cast<size_t>(n));

    for (int64_t i = 0; i < n; ++i) {
        const double* p = cloud.point(i);
        const CellKey key = key_of(p, cell_size);
        auto [it, inserted] = cell_ids.try_emplace(key, static_cast<int32_t>(cells.size()));
        if (inserted) cells.emplace_back();
        Acc& a = cells[static_cast<size_t>(it->second)];
        a.x += p[0];
        a.y += p[1];
        a.z += p[2];
        a.inten += cloud.intensity[static_cast<size_t>(i)];
        a.returns += cloud.return_count[static_cast<size_t>(i)];
        ++a.count;
        ++a.label_votes[cloud.label[static_cast<size_t>(i)]];
        ++a.segment_votes[cloud.segment[static_cast<size_t>(i)]];
        res.cell_of_input[static_cast<size_t>(i)] = it->second;
    }

    PointCloud& out = res.cloud;
    out.resize(static_cast<int64_t>(cells.size()));
    out.has_intensity = cloud.has_intensity;
    out.has_return_count = cloud.has_return_count;
    out.has_label = cloud.has_label;
    out.has_segment = cloud.has_segment;
    for (size_t c = 0; c < cells.size(); ++c) {
        const Acc& a = cells[c];
        const double inv = 1.0 / static_cast<double>(a.count);
        out.xyz[3 * c + 0] = a.x * inv;
        out.xyz[3 * c + 1] = a.y * inv;
        out.xyz[3 * c + 2] = a.z * inv;
        out.intensity[c] = a.inten * inv;
        out.return_count[c] = static_cast<uint8_t>(std::lround(a.returns * inv));
        out.label[c] = majority(a.label_votes);
        out.segment[c] = majority(a.segment_votes);
    }
    return res;
}

GridPositionsResult grid_subsample_positions(std::span<const double> xyz, double cell_size) {
    check(cell_size > 0.0, "grid subsample: cell size must be positive");
    const int64_t n = static_cast<int64_t>(xyz.size() / 3);
    struct Acc {
        double x = 0, y = 0, z = 0;
        int64_t count = 0;
    };
    std::unordered_map<CellKey, int32_t, CellKeyHash> cell_ids;
    std::vector<Acc> cells;
    GridPositionsResult res;
    res.cell_of_input.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const double* p = &xyz[static_cast<size_t>(3 * i)];
        const CellKey key = key_of(p, cell_size);
        auto [it, inserted] = cell_ids.try_emplace(key, static_cast<int32_t>(cells.size()));
        if (inserted) cells.emplace_back();
        Acc& a = cells[static_cast<size_t>(it->second)];
        a.x += p[0];
        a.y += p[1];
        a.z += p[2];
        ++a.count;
        res.cell_of_input[static_cast<size_t>(i)] = it->second;
    }
    res.xyz.resize(3 * cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
        const double inv = 1.0 / static_cast<double>(cells[c].count);
        res.xyz[3 * c + 0] = cells[c].x * inv;
        res.xyz[3 * c + 1] = cells[c].y * inv;
        res.xyz[3 * c + 2] = cells[c].z * inv;
    }
    return res;
}

}  // namespace lgenet
