#pragma once

#include <cstdint>
#include <vector>

#include "lgenet/tensor.hpp"

namespace lgenet {

// Fixed kernel-point positions in the unit ball (dim 3) or unit disk
// (dim 2). Point 0 is pinned at the origin. Positions are rescaled to the
// layer radius at use; influence is the correlation support sigma in meters.
struct KernelLayout {
    int dim = 3;
    int32_t count = 0;
    std::vector<double> points;  // count * dim, unit scale
    double influence = 1.0;
    bool converged = true;

    std::vector<double> scaled(double radius) const {
        std::vector<double> out(points.size());
        for (size_t i = 0; i < points.size(); ++i) out[i] = points[i] * radius;
        return out;
    }
    // 2-D layouts padded to xyz triples (z = 0) for geometry helpers.
    std::vector<double> scaled_xyz(double radius) const;
};

struct KernelInitTrace {
    std::vector<double> energies;  // energy after each accepted step
    int iterations = 0;
};

// Repulsive-energy layout: minimizes sum_{i<j} 1/|xi-xj| + sum_i |xi|^2 by
// gradient descent with backtracking line search, point 0 pinned at the
// origin and all points projected back into the unit ball after each step.
// Stops when the largest point displacement falls below 1e-6 or after 1e4
// iterations (converged flag cleared, best iterate returned).
KernelLayout init_kernel_points(int32_t count, int dim, uint64_t seed,
                                KernelInitTrace* trace = nullptr);

// Per-kernel-point linear correlation h(x, pk) = max(0, 1 - |x - pk|/sigma)
// for an offset x (length = layout dim).
std::vector<double> correlation(const std::vector<double>& offset,
                                const KernelLayout& layout, double sigma);

}  // namespace lgenet
