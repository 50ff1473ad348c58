#pragma once

#include <span>
#include <vector>

#include "lgenet/kdtree.hpp"
#include "lgenet/kpconv.hpp"
#include "lgenet/rng.hpp"
#include "lgenet/tensor.hpp"

namespace lgenet {

// One (grid size, convolution radius) pair per level; Table-1 style.
struct LevelSpec {
    double grid_size = 0.0;
    double radius = 0.0;
};

// Exact radius neighbors for every query, sorted by index, truncated to
// max_neighbors by a seeded uniform subsample and padded with the shadow
// index. Truncation draws an independent stream per query so results do not
// depend on evaluation order.
NeighborList radius_search(std::span<const double> queries, const KdTree& support,
                           double r, int32_t max_neighbors, uint64_t seed);

// Indices of all cloud points within R of center (3-D distance).
std::vector<int32_t> sample_sphere(const KdTree& cloud, const double* center, double R);

struct PyramidLevel {
    std::vector<double> xyz;               // M x 3 points of this level
    NeighborList self_neighbors;           // queries == support == this level
    NeighborList strided_neighbors;        // queries = this level, support = previous
    std::vector<int32_t> pool_from_prev;   // per point: nearest previous-level point
    std::vector<int32_t> up_from_this;     // per previous-level point: nearest point here
};

// Multi-level point pyramid. Level 0 is the input (already at schedule[0]'s
// grid resolution); level l >= 1 is the grid subsample of level l-1 at
// schedule[l].grid_size. Self neighbors use the level radius; strided
// neighbors query level l over level l-1 support at the level-l radius.
std::vector<PyramidLevel> build_pyramid(std::span<const double> sphere_xyz,
                                        const std::vector<LevelSpec>& schedule,
                                        const std::vector<int32_t>& max_neighbors,
                                        uint64_t seed);

// Input feature columns: [1, intensity, absolute z, z normalized within the
// sphere]. Degenerate spheres (z_max == z_min) get a zero normalized column.
template <typename T>
Tensor<T> assemble_input_features(std::span<const double> xyz,
                                  std::span<const double> intensity) {
    const int64_t n = static_cast<int64_t>(xyz.size() / 3);
    check(n > 0, "input features: empty sphere");
    check(static_cast<int64_t>(intensity.size()) == n,
          "input features: intensity length mismatch");
    double zmin = xyz[2], zmax = xyz[2];
    for (int64_t i = 1; i < n; ++i) {
        zmin = std::min(zmin, xyz[static_cast<size_t>(3 * i + 2)]);
        zmax = std::max(zmax, xyz[static_cast<size_t>(3 * i + 2)]);
    }
    const double span = zmax - zmin;
    Tensor<T> f({n, 4});
    for (int64_t i = 0; i < n; ++i) {
        const double z = xyz[static_cast<size_t>(3 * i + 2)];
        f.at(i, 0) = T(1);
        f.at(i, 1) = static_cast<T>(intensity[static_cast<size_t>(i)]);
        f.at(i, 2) = static_cast<T>(z);
        f.at(i, 3) = span > 0.0 ? static_cast<T>((z - zmin) / span) : T(0);
    }
    return f;
}

// Rotation about the vertical axis through (cx, cy); z untouched.
void rotate_z(std::span<double> xyz, double angle, double cx, double cy);

// I.i.d. Gaussian jitter on all three coordinates.
void jitter_xyz(std::span<double> xyz, double sigma, Rng& rng);

// Training augmentation: uniform rotation in [0, 2pi) about the sphere
// center's vertical axis, then sigma-jitter. Deterministic per seed.
void augment_sphere(std::span<double> xyz, const double* center, uint64_t seed,
                    double jitter_sigma, bool rotate);

}  // namespace lgenet
