#include "lgenet/kernel_points.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

#include "lgenet/rng.hpp"

namespace lgenet {

namespace {

double layout_energy(const std::vector<double>& x, int dim, int32_t k) {
    double e = 0.0;
    for (int32_t i = 0; i < k; ++i) {
        double n2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double xi = x[static_cast<size_t>(i * dim + d)];
            n2 += xi * xi;
        }
        e += n2;
        for (int32_t j = i + 1; j < k; ++j) {
            double d2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double diff = x[static_cast<size_t>(i * dim + d)] -
                                    x[static_cast<size_t>(j * dim + d)];
                d2 += diff * diff;
            }
            e += 1.0 / std::sqrt(d2);
        }
    }
    return e;
}

void layout_gradient(const std::vector<double>& x, int dim, int32_t k,
                     std::vector<double>& g) {
    g.assign(x.size(), 0.0);
    for (int32_t i = 0; i < k; ++i)
        for (int d = 0; d < dim; ++d)
            g[static_cast<size_t>(i * dim + d)] = 2.0 * x[static_cast<size_t>(i * dim + d)];
    for (int32_t i = 0; i < k; ++i) {
        for (int32_t j = i + 1; j < k; ++j) {
            double d2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double diff = x[static_cast<size_t>(i * dim + d)] -
                                    x[static_cast<size_t>(j * dim + d)];
                d2 += diff * diff;
            }
            const double inv_d3 = 1.0 / (d2 * std::sqrt(d2));
            for (int d = 0; d < dim; ++d) {
                const double diff = x[static_cast<size_t>(i * dim + d)] -
                                    x[static_cast<size_t>(j * dim + d)];
                g[static_cast<size_t>(i * dim + d)] -= diff * inv_d3;
                g[static_cast<size_t>(j * dim + d)] += diff * inv_d3;
            }
        }
    }
}

// Pin point 0 at the origin and project the rest back into the unit ball.
void constrain(std::vector<double>& x, int dim, int32_t k) {
    for (int d = 0; d < dim; ++d) x[static_cast<size_t>(d)] = 0.0;
    for (int32_t i = 1; i < k; ++i) {
        double n2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double xi = x[static_cast<size_t>(i * dim + d)];
            n2 += xi * xi;
        }
        if (n2 > 1.0) {
            const double inv = 1.0 / std::sqrt(n2);
            for (int d = 0; d < dim; ++d) x[static_cast<size_t>(i * dim + d)] *= inv;
        }
    }
}

}  // namespace

std::vector<double> KernelLayout::scaled_xyz(double radius) const {
    std::vector<double> out(static_cast<size_t>(count) * 3, 0.0);
    for (int32_t i = 0; i < count; ++i)
        for (int d = 0; d < dim; ++d)
            out[static_cast<size_t>(i * 3 + d)] =
                points[static_cast<size_t>(i * dim + d)] * radius;
    return out;
}

namespace {

struct DescentResult {
    std::vector<double> points;
    double energy = 0.0;
    int iterations = 0;
    bool converged = true;
};

DescentResult descend(int32_t count, int dim, Rng& rng, KernelInitTrace* trace) {
    std::vector<double> x(static_cast<size_t>(count) * static_cast<size_t>(dim), 0.0);
    // random start strictly inside the ball, point 0 at origin
    for (int32_t i = 1; i < count; ++i) {
        while (true) {
            double n2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                x[static_cast<size_t>(i * dim + d)] = rng.uniform(-1.0, 1.0);
                n2 += x[static_cast<size_t>(i * dim + d)] * x[static_cast<size_t>(i * dim + d)];
            }
            if (n2 <= 1.0 && n2 > 1e-4) break;
        }
    }

    constexpr int kMaxIter = 10000;
    constexpr double kStopDisp = 1e-6;
    std::vector<double> grad, trial(x.size());
    double energy = layout_energy(x, dim, count);
    if (trace) trace->energies.push_back(energy);
    double step = 0.01;
    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
        layout_gradient(x, dim, count, grad);
        for (int d = 0; d < dim; ++d) grad[static_cast<size_t>(d)] = 0.0;  // pinned

        // backtracking line search so energy never increases
        double max_disp = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - step * grad[i];
            constrain(trial, dim, count);
            const double e_new = layout_energy(trial, dim, count);
            if (e_new < energy) {
                max_disp = 0.0;
                for (size_t i = 0; i < x.size(); ++i)
                    max_disp = std::max(max_disp, std::abs(trial[i] - x[i]));
                x.swap(trial);
                energy = e_new;
                accepted = true;
                step *= 1.2;  // cautiously grow after success
                break;
            }
            step *= 0.5;
        }
        if (trace) trace->energies.push_back(energy);
        if (!accepted || max_disp < kStopDisp) break;
    }
    DescentResult r;
    r.points = std::move(x);
    r.energy = energy;
    r.iterations = iter;
    r.converged = iter < kMaxIter;
    return r;
}

}  // namespace

KernelLayout init_kernel_points(int32_t count, int dim, uint64_t seed,
                                KernelInitTrace* trace) {
    check(count >= 1, "kernel layout: need at least one kernel point");
    check(dim == 2 || dim == 3, "kernel layout: dim must be 2 or 3");
    KernelLayout layout;
    layout.dim = dim;
    layout.count = count;
    layout.points.assign(static_cast<size_t>(count) * static_cast<size_t>(dim), 0.0);
    if (count == 1) return layout;  // pinned center only

    // The energy has near-degenerate local minima, so a single descent lands
    // in arbitrary isomers. Optimize one disposition from fixed internal
    // restart streams (best of N, identical on every call), then orient it by
    // a seed-derived random rotation: layouts from different seeds are the
    // same arrangement up to a global rotation.
    constexpr int kRestarts = 50;
    constexpr uint64_t kMasterSeed = 0x6b65726e656cULL;
    DescentResult best;
    best.energy = std::numeric_limits<double>::infinity();
    for (int r = 0; r < kRestarts; ++r) {
        Rng rng(split_seed(kMasterSeed, static_cast<uint64_t>(r),
                           static_cast<uint64_t>(dim) * 1000 + static_cast<uint64_t>(count)));
        KernelInitTrace local_trace;
        DescentResult res = descend(count, dim, rng, trace && r == 0 ? trace : &local_trace);
        if (res.energy < best.energy) best = std::move(res);
    }

    Rng rot_rng(split_seed(seed, 0x726f74, static_cast<uint64_t>(dim)));
    std::vector<double>& x = best.points;
    if (dim == 2) {
        const double a = rot_rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double c = std::cos(a), s = std::sin(a);
        for (int32_t i = 0; i < count; ++i) {
            const double px = x[static_cast<size_t>(i * 2)];
            const double py = x[static_cast<size_t>(i * 2 + 1)];
            x[static_cast<size_t>(i * 2)] = c * px - s * py;
            x[static_cast<size_t>(i * 2 + 1)] = s * px + c * py;
        }
    } else {
        // uniform rotation from a random unit quaternion
        double q[4];
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (double& qi : q) {
                qi = rot_rng.normal();
                n2 += qi * qi;
            }
        } while (n2 < 1e-12);
        const double inv = 1.0 / std::sqrt(n2);
        for (double& qi : q) qi *= inv;
        const double w = q[0], a = q[1], b = q[2], c = q[3];
        const double R[3][3] = {
            {1 - 2 * (b * b + c * c), 2 * (a * b - w * c), 2 * (a * c + w * b)},
            {2 * (a * b + w * c), 1 - 2 * (a * a + c * c), 2 * (b * c - w * a)},
            {2 * (a * c - w * b), 2 * (b * c + w * a), 1 - 2 * (a * a + b * b)}};
        for (int32_t i = 0; i < count; ++i) {
            double p[3] = {x[static_cast<size_t>(i * 3)], x[static_cast<size_t>(i * 3 + 1)],
                           x[static_cast<size_t>(i * 3 + 2)]};
            for (int r = 0; r < 3; ++r)
                x[static_cast<size_t>(i * 3 + r)] =
                    R[r][0] * p[0] + R[r][1] * p[1] + R[r][2] * p[2];
        }
    }

    layout.points = std::move(best.points);
    layout.converged = best.converged;
    if (trace) trace->iterations = best.iterations;
    if (!layout.converged)
        std::fprintf(stderr,
                     "[lgenet] warning: kernel layout (K=%d, dim=%d) hit the iteration cap; "
                     "returning best iterate\n",
                     count, dim);
    return layout;
}

std::vector<double> correlation(const std::vector<double>& offset,
                                const KernelLayout& layout, double sigma) {
    check(sigma > 0.0, "correlation: sigma must be positive");
    check(static_cast<int>(offset.size()) == layout.dim,
          "correlation: offset dimension does not match layout");
    std::vector<double> h(static_cast<size_t>(layout.count));
    for (int32_t k = 0; k < layout.count; ++k) {
        double d2 = 0.0;
        for (int d = 0; d < layout.dim; ++d) {
            const double diff =
                offset[static_cast<size_t>(d)] - layout.points[static_cast<size_t>(k * layout.dim + d)];
            d2 += diff * diff;
        }
        h[static_cast<size_t>(k)] = std::max(0.0, 1.0 - std::sqrt(d2) / sigma);
    }
    return h;
}

}  // namespace lgenet
