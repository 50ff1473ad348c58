#include "lgenet/synth.hpp"

#include <algorithm>
#include <cmath>

#include "lgenet/rng.hpp"

namespace lgenet {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Emitter {
    PointCloud& cloud;
    Rng& rng;
    double intensity_mean[4] = {0.45, 0.62, 0.30, 0.75};
    double intensity_sigma = 0.09;

    void emit(double x, double y, double z, int32_t cls, uint8_t returns) {
        const int64_t n = cloud.size();
        cloud.resize(n + 1);
        cloud.xyz[static_cast<size_t>(3 * n) + 0] = x;
        cloud.xyz[static_cast<size_t>(3 * n) + 1] = y;
        cloud.xyz[static_cast<size_t>(3 * n) + 2] = z;
        const double inten =
            std::clamp(rng.normal(intensity_mean[cls], intensity_sigma), 0.0, 1.0);
        cloud.intensity[static_cast<size_t>(n)] = inten;
        cloud.return_count[static_cast<size_t>(n)] = returns;
        cloud.label[static_cast<size_t>(n)] = cls;
    }
};

bool inside_footprint(const SynthSceneInfo::Building& b, double x, double y,
                      double margin = 0.0) {
    return std::abs(x - b.cx) <= b.w / 2 + margin && std::abs(y - b.cy) <= b.d / 2 + margin;
}

}  // namespace

double SynthSceneInfo::ground_height(double x, double y) const {
    return ground_a1 * std::sin(ground_wx * x) * std::cos(ground_wy * y) +
           ground_a2 * std::sin(ground_wy2 * y + ground_phase);
}

double SynthSceneInfo::roof_height(const Building& b, double x, double y) const {
    (void)y;
    double h = b.base_z + b.height;
    if (b.gabled) {
        // ridge runs along y through the footprint center
        const double t = 1.0 - std::abs(x - b.cx) / (b.w / 2);
        h += b.ridge_rise * std::max(0.0, t);
    }
    return h;
}

PointCloud synth_scene(uint64_t seed, double extent, double density,
                       SynthSceneInfo* info_out) {
    check(density > 0.0, "synth: density must be positive");
    check(extent >= 16.0,
          "synth: extent " + std::to_string(extent) +
              " m is too small to place any object (needs >= 16 m)");
    Rng rng(split_seed(seed, 0x517e));
    SynthSceneInfo info;
    info.surface_noise = 0.03;
    info.ground_a1 = rng.uniform(0.25, 0.5);
    info.ground_a2 = rng.uniform(0.15, 0.35);
    info.ground_wx = 2 * kPi / rng.uniform(28.0, 45.0);
    info.ground_wy = 2 * kPi / rng.uniform(28.0, 45.0);
    info.ground_wy2 = 2 * kPi / rng.uniform(20.0, 33.0);
    info.ground_phase = rng.uniform(0.0, 2 * kPi);

    // Buildings: rejection-place axis-aligned rectangles.
    const auto n_buildings = static_cast<int>(std::max(1.0, extent * extent / 450.0));
    for (int b = 0; b < n_buildings; ++b) {
        for (int attempt = 0; attempt < 40; ++attempt) {
            SynthSceneInfo::Building bd;
            bd.w = rng.uniform(6.0, 14.0);
            bd.d = rng.uniform(6.0, 14.0);
            bd.cx = rng.uniform(bd.w / 2 + 1.0, extent - bd.w / 2 - 1.0);
            bd.cy = rng.uniform(bd.d / 2 + 1.0, extent - bd.d / 2 - 1.0);
            bd.base_z = info.ground_height(bd.cx, bd.cy);
            bd.height = rng.uniform(4.0, 8.0);
            bd.gabled = rng.uniform() < 0.5;
            bd.ridge_rise = bd.gabled ? rng.uniform(1.0, 2.5) : 0.0;
            bool overlaps = false;
            for (const auto& other : info.buildings)
                overlaps = overlaps || (std::abs(bd.cx - other.cx) < (bd.w + other.w) / 2 + 2 &&
                                        std::abs(bd.cy - other.cy) < (bd.d + other.d) / 2 + 2);
            if (!overlaps) {
                info.buildings.push_back(bd);
                break;
            }
        }
    }

    // Trees: canopy ellipsoids clear of buildings.
    const auto n_trees = static_cast<int>(std::max(2.0, extent * extent / 140.0));
    for (int t = 0; t < n_trees; ++t) {
        for (int attempt = 0; attempt < 40; ++attempt) {
            SynthSceneInfo::Tree tr;
            tr.rx = rng.uniform(1.3, 2.8);
            tr.ry = rng.uniform(1.3, 2.8);
            tr.rz = rng.uniform(1.4, 2.8);
            tr.cx = rng.uniform(tr.rx + 0.5, extent - tr.rx - 0.5);
            tr.cy = rng.uniform(tr.ry + 0.5, extent - tr.ry - 0.5);
            const double trunk = rng.uniform(1.5, 3.0);
            tr.cz = info.ground_height(tr.cx, tr.cy) + trunk + tr.rz;
            bool blocked = false;
            for (const auto& b : info.buildings)
                blocked = blocked || inside_footprint(b, tr.cx, tr.cy, std::max(tr.rx, tr.ry));
            if (!blocked) {
                info.trees.push_back(tr);
                break;
            }
        }
    }

    // Wires: catenary strands crossing the tile, above canopies.
    const int n_wires = 2 + static_cast<int>(rng.uniform_index(2));
    for (int w = 0; w < n_wires; ++w) {
        SynthSceneInfo::Wire wr;
        const bool along_x = rng.uniform() < 0.5;
        const double offset = rng.uniform(0.15 * extent, 0.85 * extent);
        const double z0 = rng.uniform(11.0, 14.0);
        const double z1 = z0 + rng.uniform(-0.8, 0.8);
        if (along_x) {
            wr.a = {0.0, offset, z0};
            wr.b = {extent, offset + rng.uniform(-4.0, 4.0), z1};
        } else {
            wr.a = {offset, 0.0, z0};
            wr.b = {offset + rng.uniform(-4.0, 4.0), extent, z1};
        }
        wr.sag = rng.uniform(0.5, 1.4);
        info.wires.push_back(wr);
    }

    PointCloud cloud;
    Emitter em{cloud, rng};

    // Ground, skipping building footprints.
    const auto n_ground = static_cast<int64_t>(density * extent * extent);
    for (int64_t i = 0; i < n_ground; ++i) {
        const double x = rng.uniform(0.0, extent);
        const double y = rng.uniform(0.0, extent);
        bool covered = false;
        for (const auto& b : info.buildings) covered = covered || inside_footprint(b, x, y);
        if (covered) continue;
        const double z = info.ground_height(x, y) + rng.normal(0.0, info.surface_noise);
        em.emit(x, y, z, kGround, rng.uniform() < 0.88 ? 1 : 2);
    }

    // Roofs and facade strips.
    for (const auto& b : info.buildings) {
        const auto n_roof = static_cast<int64_t>(density * b.w * b.d);
        for (int64_t i = 0; i < n_roof; ++i) {
            const double x = rng.uniform(b.cx - b.w / 2, b.cx + b.w / 2);
            const double y = rng.uniform(b.cy - b.d / 2, b.cy + b.d / 2);
            const double z = info.roof_height(b, x, y) + rng.normal(0.0, info.surface_noise);
            em.emit(x, y, z, kBuilding, 1);
        }
        // Sparse vertical strips on the two walls facing the scan direction.
        const double facade_density = density * 0.30;
        for (int wall = 0; wall < 4; ++wall) {
            const bool x_wall = wall < 2;
            const double wall_len = x_wall ? b.d : b.w;
            const double wall_height = b.height;
            const auto n_wall = static_cast<int64_t>(facade_density * wall_len * wall_height * 0.5);
            for (int64_t i = 0; i < n_wall; ++i) {
                const double along = rng.uniform(-wall_len / 2, wall_len / 2);
                const double up = rng.uniform(0.2, wall_height - 0.1);
                double x, y;
                if (x_wall) {
                    x = b.cx + (wall == 0 ? -b.w / 2 : b.w / 2) + rng.normal(0.0, info.surface_noise);
                    y = b.cy + along;
                } else {
                    x = b.cx + along;
                    y = b.cy + (wall == 2 ? -b.d / 2 : b.d / 2) + rng.normal(0.0, info.surface_noise);
                }
                em.emit(x, y, b.base_z + up, kBuilding, 1);
            }
        }
    }

    // Canopies: volumetric ellipsoid samples, biased to the upper shell as an
    // airborne scanner sees them.
    for (const auto& tr : info.trees) {
        const auto n_pts = static_cast<int64_t>(density * kPi * tr.rx * tr.ry * 1.5);
        for (int64_t i = 0; i < n_pts; ++i) {
            // random direction, radius biased outward
            const double u = rng.uniform();
            const double rho = std::cbrt(0.3 + 0.7 * u);
            const double theta = rng.uniform(0.0, 2 * kPi);
            const double phi = std::acos(std::clamp(rng.uniform(-0.35, 1.0), -1.0, 1.0));
            const double sx = std::sin(phi) * std::cos(theta) * rho;
            const double sy = std::sin(phi) * std::sin(theta) * rho;
            const double sz = std::cos(phi) * rho;
            const double x = tr.cx + sx * tr.rx;
            const double y = tr.cy + sy * tr.ry;
            const double z = tr.cz + sz * tr.rz + rng.normal(0.0, info.surface_noise);
            const double r = rng.uniform();
            em.emit(x, y, z, kTree, r < 0.45 ? 1 : (r < 0.8 ? 2 : 3));
        }
    }

    // Wire strands.
    for (const auto& wr : info.wires) {
        const double dx = wr.b[0] - wr.a[0], dy = wr.b[1] - wr.a[1];
        const double len = std::sqrt(dx * dx + dy * dy);
        const auto n_pts = static_cast<int64_t>(std::max(2.0, len * std::min(density, 3.0)));
        for (int64_t i = 0; i < n_pts; ++i) {
            const double t = rng.uniform();
            const double x = wr.a[0] + t * dx;
            const double y = wr.a[1] + t * dy;
            const double z = wr.a[2] + t * (wr.b[2] - wr.a[2]) - 4.0 * wr.sag * t * (1.0 - t) +
                             rng.normal(0.0, 0.015);
            em.emit(x, y, z, kWire, 1);
        }
    }

    cloud.has_intensity = true;
    cloud.has_return_count = true;
    cloud.has_label = true;
    if (info_out) *info_out = info;
    return cloud;
}

}  // namespace lgenet
