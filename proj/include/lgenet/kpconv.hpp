#pragma once

#include <span>
#include <vector>

#include "lgenet/ops.hpp"

namespace lgenet {

// Fixed-width neighbor table. idx is n_query * width, padded with the shadow
// index (== support point count).
struct NeighborList {
    int64_t n_query = 0;
    int64_t width = 0;
    int32_t shadow = 0;  // == n_support
    std::vector<int32_t> idx;

    const int32_t* row(int64_t q) const { return idx.data() + q * width; }
};

// Point-to-kernel correlation h(x, pk) = max(0, 1 - |x - pk| / sigma).
inline double kp_correlation(double dist, double sigma) {
    const double h = 1.0 - dist / sigma;
    return h > 0.0 ? h : 0.0;
}

// Precomputed sparse correlation table for one convolution: for every
// (query, neighbor, kernel point) with h > 0 one entry. Geometry is fixed
// during a step (rigid kernels), so this is built once per sphere per level
// and shared by every block operating there.
struct KpConvGeometry {
    int64_t n_query = 0;
    int64_t n_support = 0;
    int32_t num_kernel_points = 0;
    std::vector<int64_t> offsets;      // n_query + 1
    std::vector<int32_t> support_row;  // per entry
    std::vector<int32_t> kernel;       // per entry
    std::vector<double> influence;     // per entry, h in (0, 1]
};

// queries/supports/kernel_points are xyz triples (2-D layouts carry z = 0);
// kernel_points are already scaled to the layer radius. kp_dim selects 3-D
// offsets or their 2-D projection (the neighbor set is identical either way,
// per the hybrid-block contract).
inline KpConvGeometry build_kpconv_geometry(std::span<const double> queries,
                                            std::span<const double> supports,
                                            const NeighborList& neighbors,
                                            std::span<const double> kernel_points,
                                            int kp_dim, double sigma) {
    check(kp_dim == 2 || kp_dim == 3, "kpconv geometry: kernel dim must be 2 or 3");
    check(sigma > 0.0, "kpconv geometry: sigma must be positive");
    const int64_t nq = neighbors.n_query;
    const int64_t ns = static_cast<int64_t>(supports.size()) / 3;
    const int32_t K = static_cast<int32_t>(kernel_points.size()) / 3;
    KpConvGeometry g;
    g.n_query = nq;
    g.n_support = ns;
    g.num_kernel_points = K;
    g.offsets.resize(static_cast<size_t>(nq) + 1, 0);
    for (int64_t q = 0; q < nq; ++q) {
        const double qx = queries[q * 3 + 0];
        const double qy = queries[q * 3 + 1];
        const double qz = queries[q * 3 + 2];
        const int32_t* row = neighbors.row(q);
        for (int64_t h = 0; h < neighbors.width; ++h) {
            const int32_t s = row[h];
            if (s == neighbors.shadow) continue;
            check(s >= 0 && s < ns, "kpconv geometry: neighbor index out of range");
            const double dx = supports[s * 3 + 0] - qx;
            const double dy = supports[s * 3 + 1] - qy;
            const double dz = supports[s * 3 + 2] - qz;
            for (int32_t k = 0; k < K; ++k) {
                const double ex = dx - kernel_points[k * 3 + 0];
                const double ey = dy - kernel_points[k * 3 + 1];
                double d2 = ex * ex + ey * ey;
                if (kp_dim == 3) {
                    const double ez = dz - kernel_points[k * 3 + 2];
                    d2 += ez * ez;
                }
                const double corr = kp_correlation(std::sqrt(d2), sigma);
                if (corr <= 0.0) continue;
                g.support_row.push_back(s);
                g.kernel.push_back(k);
                g.influence.push_back(corr);
            }
        }
        g.offsets[static_cast<size_t>(q) + 1] = static_cast<int64_t>(g.support_row.size());
    }
    return g;
}

// Kernel point convolution:
//   out(q) = sum_{neighbors i} sum_k h(p_i - q, pk) * f_i W_k
// features: n_support x C_in, weights: [K, C_in, C_out]. Shadow neighbors
// contribute nothing; there is no bias term.
template <typename T>
Var kpconv(Tape<T>& t, Var features, Var weights, const KpConvGeometry& geom) {
    const Tensor<T>& F = t.val(features);
    const Tensor<T>& W = t.val(weights);
    check(W.rank() == 3, "kpconv: weights must be [K, C_in, C_out]");
    const int64_t K = W.shape[0], Cin = W.shape[1], Cout = W.shape[2];
    check(K == geom.num_kernel_points, "kpconv: kernel point count mismatch");
    check(F.rank() == 2 && F.rows() == geom.n_support && F.cols() == Cin,
          "kpconv: feature shape " + F.shape_str() + " does not match weights/geometry");

    // Stage 1: correlation-weighted neighbor sums per kernel point,
    // A[q, k*Cin + c] = sum_i h(q,i,k) * F[i, c].
    Tensor<T> A({geom.n_query, K * Cin});
    for (int64_t q = 0; q < geom.n_query; ++q) {
        T* arow = A.row_ptr(q);
        for (int64_t e = geom.offsets[static_cast<size_t>(q)];
             e < geom.offsets[static_cast<size_t>(q) + 1]; ++e) {
            const T h = static_cast<T>(geom.influence[static_cast<size_t>(e)]);
            const T* frow = F.row_ptr(geom.support_row[static_cast<size_t>(e)]);
            T* dst = arow + geom.kernel[static_cast<size_t>(e)] * Cin;
            for (int64_t c = 0; c < Cin; ++c) dst[c] += h * frow[c];
        }
    }
    // Stage 2: one dense product against the stacked weights,
    // out = A * reshape(W, [K*Cin, Cout]).
    Tensor<T> Wflat({K * Cin, Cout}, W.v);
    Tensor<T> out({geom.n_query, Cout});
    matmul_into(A, false, Wflat, false, out, true);

    const Var o = t.next_id();
    return t.emit(std::move(out), {features, weights},
                  [features, weights, o, K, Cin, Cout, A = std::move(A),
                   geomp = &geom](Tape<T>& tp) {
        const Tensor<T>& g = tp.grad(o);
        const Tensor<T>& W2 = tp.val(weights);
        Tensor<T> Wflat2({K * Cin, Cout}, W2.v);
        if (tp.needs_grad(weights)) {
            Tensor<T> dW({K * Cin, Cout});
            matmul_into(A, true, g, false, dW, true);
            auto& gw = tp.grad(weights).v;
            for (size_t i = 0; i < gw.size(); ++i) gw[i] += dW.v[i];
        }
        if (tp.needs_grad(features)) {
            Tensor<T> dA({geomp->n_query, K * Cin});
            matmul_into(g, false, Wflat2, true, dA, true);
            Tensor<T>& gf = tp.grad(features);
            for (int64_t q = 0; q < geomp->n_query; ++q) {
                const T* darow = dA.row_ptr(q);
                for (int64_t e = geomp->offsets[static_cast<size_t>(q)];
                     e < geomp->offsets[static_cast<size_t>(q) + 1]; ++e) {
                    const T h = static_cast<T>(geomp->influence[static_cast<size_t>(e)]);
                    T* gfrow = gf.row_ptr(geomp->support_row[static_cast<size_t>(e)]);
                    const T* src = darow + geomp->kernel[static_cast<size_t>(e)] * Cin;
                    for (int64_t c = 0; c < Cin; ++c) gfrow[c] += h * src[c];
                }
            }
        }
    });
}

}  // namespace lgenet
