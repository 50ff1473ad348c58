#include "lgenet/pyramid.hpp"

#include <algorithm>
#include <cmath>

#include "lgenet/grid.hpp"

namespace lgenet {

NeighborList radius_search(std::span<const double> queries, const KdTree& support,
                           double r, int32_t max_neighbors, uint64_t seed) {
    check(r > 0.0, "radius search: radius must be positive");
    check(max_neighbors >= 1, "radius search: max_neighbors must be >= 1");
    const int64_t nq = static_cast<int64_t>(queries.size() / 3);
    std::vector<std::vector<int32_t>> found(static_cast<size_t>(nq));
    int64_t widest = 1;
    std::vector<int32_t> buf;
    for (int64_t q = 0; q < nq; ++q) {
        support.radius(&queries[static_cast<size_t>(3 * q)], r, buf);
        if (static_cast<int64_t>(buf.size()) > max_neighbors) {
            // seeded uniform subsample, then restore index order
            Rng rng(split_seed(seed, 0x7261, static_cast<uint64_t>(q)));
            std::vector<int64_t> keep;
            rng.sample_without_replacement<int64_t>(static_cast<int64_t>(buf.size()),
                                                    max_neighbors, keep);
            std::sort(keep.begin(), keep.end());
            std::vector<int32_t> trunc;
            trunc.reserve(static_cast<size_t>(max_neighbors));
            for (int64_t k : keep) trunc.push_back(buf[static_cast<size_t>(k)]);
            found[static_cast<size_t>(q)] = std::move(trunc);
        } else {
            found[static_cast<size_t>(q)] = buf;
        }
        widest = std::max(widest, static_cast<int64_t>(found[static_cast<size_t>(q)].size()));
    }
    NeighborList nl;
    nl.n_query = nq;
    nl.width = widest;
    nl.shadow = static_cast<int32_t>(support.size());
    nl.idx.assign(static_cast<size_t>(nq * widest), nl.shadow);
    for (int64_t q = 0; q < nq; ++q) {
        const auto& row = found[static_cast<size_t>(q)];
        std::copy(row.begin(), row.end(), nl.idx.begin() + q * widest);
    }
    return nl;
}

std::vector<int32_t> sample_sphere(const KdTree& cloud, const double* center, double R) {
    check(R > 0.0, "sample sphere: radius must be positive");
    std::vector<int32_t> out;
    cloud.radius(center, R, out);
    return out;
}

std::vector<PyramidLevel> build_pyramid(std::span<const double> sphere_xyz,
                                        const std::vector<LevelSpec>& schedule,
                                        const std::vector<int32_t>& max_neighbors,
                                        uint64_t seed) {
    check(!schedule.empty(), "pyramid: empty schedule");
    check(max_neighbors.size() == schedule.size(),
          "pyramid: need one max_neighbors entry per level");
    for (size_t l = 1; l < schedule.size(); ++l)
        check(schedule[l].grid_size > schedule[l - 1].grid_size,
              "pyramid: grid sizes must be strictly increasing");
    check(sphere_xyz.size() >= 3, "pyramid: level 0 has zero points");

    std::vector<PyramidLevel> levels(schedule.size());
    levels[0].xyz.assign(sphere_xyz.begin(), sphere_xyz.end());
    const int64_t n0 = static_cast<int64_t>(levels[0].xyz.size() / 3);
    levels[0].pool_from_prev.resize(static_cast<size_t>(n0));
    for (int64_t i = 0; i < n0; ++i)
        levels[0].pool_from_prev[static_cast<size_t>(i)] = static_cast<int32_t>(i);

    std::vector<KdTree> trees;
    trees.emplace_back(levels[0].xyz);
    levels[0].self_neighbors = radius_search(levels[0].xyz, trees[0], schedule[0].radius,
                                             max_neighbors[0], split_seed(seed, 0));

    for (size_t l = 1; l < schedule.size(); ++l) {
        const auto sub = grid_subsample_positions(levels[l - 1].xyz, schedule[l].grid_size);
        check(!sub.xyz.empty(), "pyramid: level " + std::to_string(l) + " has zero points");
        levels[l].xyz = sub.xyz;
        trees.emplace_back(levels[l].xyz);
        const KdTree& fine = trees[l - 1];
        const KdTree& coarse = trees[l];

        levels[l].self_neighbors = radius_search(
            levels[l].xyz, coarse, schedule[l].radius, max_neighbors[l], split_seed(seed, 2 * l));
        levels[l].strided_neighbors = radius_search(
            levels[l].xyz, fine, schedule[l].radius, max_neighbors[l], split_seed(seed, 2 * l + 1));

        const int64_t nc = static_cast<int64_t>(levels[l].xyz.size() / 3);
        levels[l].pool_from_prev.resize(static_cast<size_t>(nc));
        for (int64_t i = 0; i < nc; ++i)
            levels[l].pool_from_prev[static_cast<size_t>(i)] =
                fine.nearest(&levels[l].xyz[static_cast<size_t>(3 * i)]);

        const int64_t nf = static_cast<int64_t>(levels[l - 1].xyz.size() / 3);
        levels[l].up_from_this.resize(static_cast<size_t>(nf));
        for (int64_t i = 0; i < nf; ++i)
            levels[l].up_from_this[static_cast<size_t>(i)] =
                coarse.nearest(&levels[l - 1].xyz[static_cast<size_t>(3 * i)]);
    }
    return levels;
}

void rotate_z(std::span<double> xyz, double angle, double cx, double cy) {
    const double c = std::cos(angle), s = std::sin(angle);
    const int64_t n = static_cast<int64_t>(xyz.size() / 3);
    for (int64_t i = 0; i < n; ++i) {
        const double x = xyz[static_cast<size_t>(3 * i)] - cx;
        const double y = xyz[static_cast<size_t>(3 * i + 1)] - cy;
        xyz[static_cast<size_t>(3 * i)] = cx + c * x - s * y;
        xyz[static_cast<size_t>(3 * i + 1)] = cy + s * x + c * y;
    }
}

void jitter_xyz(std::span<double> xyz, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    for (auto& v : xyz) v += rng.normal(0.0, sigma);
}

void augment_sphere(std::span<double> xyz, const double* center, uint64_t seed,
                    double jitter_sigma, bool rotate) {
    Rng rng(split_seed(seed, 0x6175));
    if (rotate) {
        const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        rotate_z(xyz, angle, center[0], center[1]);
    }
    jitter_xyz(xyz, jitter_sigma, rng);
}

}  // namespace lgenet
