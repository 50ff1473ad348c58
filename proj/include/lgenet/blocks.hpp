#pragma once

#include <optional>
#include <utility>

#include "lgenet/kpconv.hpp"
#include "lgenet/loss.hpp"
#include "lgenet/ops.hpp"
#include "lgenet/rng.hpp"

namespace lgenet {

// ---------------------------------------------------------------------------
// Small trainable building blocks
// ---------------------------------------------------------------------------

// 1x1 convolution (a per-point linear map). Bias only where asked for; the
// convolutional paths leave shifting to batch norm.
template <typename T>
struct Dense {
    Parameter<T>* weight = nullptr;
    Parameter<T>* bias = nullptr;

    static Dense create(ParameterStore<T>& store, const std::string& name, int64_t in,
                        int64_t out, Rng& rng, bool with_bias = false) {
        Dense d;
        Tensor<T> w({in, out});
        const double std = std::sqrt(2.0 / static_cast<double>(in));
        for (auto& x : w.v) x = static_cast<T>(rng.normal(0.0, std));
        d.weight = &store.add(name + ".weight", std::move(w));
        if (with_bias) d.bias = &store.add(name + ".bias", Tensor<T>({out}));
        return d;
    }

    Var apply(Tape<T>& t, Var x) const {
        Var y = matmul(t, x, t.param(*weight));
        if (bias) y = add_row_bias(t, y, t.param(*bias));
        return y;
    }
};

// Batch normalization over the point axis with running statistics.
template <typename T>
struct BatchNorm {
    Parameter<T>* gamma = nullptr;
    Parameter<T>* beta = nullptr;
    Buffer<T>* running_mean = nullptr;
    Buffer<T>* running_var = nullptr;
    T momentum = T(0.98);
    T eps = T(1e-6);

    static BatchNorm create(ParameterStore<T>& store, const std::string& name, int64_t c,
                            T momentum, T eps) {
        BatchNorm bn;
        Tensor<T> ones({c});
        ones.fill(T(1));
        bn.gamma = &store.add(name + ".gamma", std::move(ones));
        bn.beta = &store.add(name + ".beta", Tensor<T>({c}));
        bn.running_mean = &store.add_buffer(name + ".running_mean", Tensor<T>({c}));
        Tensor<T> var1({c});
        var1.fill(T(1));
        bn.running_var = &store.add_buffer(name + ".running_var", std::move(var1));
        bn.momentum = momentum;
        bn.eps = eps;
        return bn;
    }

    // training uses batch statistics; update_stats=false keeps the forward
    // pure (gradient-check mode).
    Var apply(Tape<T>& t, Var x, bool training, bool update_stats) const {
        if (!training)
            return batch_norm_eval(t, x, t.param(*gamma), t.param(*beta),
                                   running_mean->value, running_var->value, eps);
        Tensor<T> mean, var;
        Var y = batch_norm_train(t, x, t.param(*gamma), t.param(*beta), eps, &mean, &var);
        if (update_stats) {
            auto& rm = running_mean->value.v;
            auto& rv = running_var->value.v;
            for (size_t j = 0; j < rm.size(); ++j) {
                rm[j] = momentum * rm[j] + (T(1) - momentum) * mean.v[j];
                rv[j] = momentum * rv[j] + (T(1) - momentum) * var.v[j];
            }
        }
        return y;
    }
};

// 1x1 + batch norm + leaky rectifier (the decoder's unary block).
template <typename T>
struct UnaryBlock {
    Dense<T> dense;
    BatchNorm<T> bn;
    T slope = T(0.1);

    static UnaryBlock create(ParameterStore<T>& store, const std::string& name, int64_t in,
                             int64_t out, Rng& rng, T bn_momentum, T bn_eps, T slope) {
        UnaryBlock u;
        u.dense = Dense<T>::create(store, name, in, out, rng);
        u.bn = BatchNorm<T>::create(store, name + ".bn", out, bn_momentum, bn_eps);
        u.slope = slope;
        return u;
    }

    Var apply(Tape<T>& t, Var x, bool training, bool update_stats) const {
        return leaky_relu(t, bn.apply(t, dense.apply(t, x), training, update_stats), slope);
    }
};

// ---------------------------------------------------------------------------
// Hybrid 2D/3D KPConv residual block
// ---------------------------------------------------------------------------

template <typename T>
struct HybridBlock {
    int64_t c_in = 0, c_mid = 0, c_out = 0;
    bool with_2d = true;
    UnaryBlock<T> reduce;           // c_in -> c_mid
    Parameter<T>* w3d = nullptr;    // [K3, c_mid, c_mid]
    Parameter<T>* w2d = nullptr;    // [K2, c_mid, c_mid]
    Dense<T> merge;                 // (2*c_mid or c_mid) -> c_out
    BatchNorm<T> merge_bn;
    std::optional<Dense<T>> shortcut;  // 1x1 when c_in != c_out
    std::optional<BatchNorm<T>> shortcut_bn;
    T slope = T(0.1);

    static HybridBlock create(ParameterStore<T>& store, const std::string& name,
                              int64_t c_in, int64_t c_mid, int64_t c_out, int32_t k3,
                              int32_t k2, bool with_2d, Rng& rng, T bn_momentum, T bn_eps,
                              T slope) {
        HybridBlock b;
        b.c_in = c_in;
        b.c_mid = c_mid;
        b.c_out = c_out;
        b.with_2d = with_2d;
        b.slope = slope;
        b.reduce =
            UnaryBlock<T>::create(store, name + ".reduce", c_in, c_mid, rng, bn_momentum,
                                  bn_eps, slope);
        auto kp_init = [&](const std::string& nm, int32_t k) {
            Tensor<T> w({k, c_mid, c_mid});
            const double std = std::sqrt(2.0 / static_cast<double>(c_mid * k));
            for (auto& x : w.v) x = static_cast<T>(rng.normal(0.0, std));
            return &store.add(nm, std::move(w));
        };
        b.w3d = kp_init(name + ".w3d", k3);
        if (with_2d) b.w2d = kp_init(name + ".w2d", k2);
        const int64_t merged = with_2d ? 2 * c_mid : c_mid;
        b.merge = Dense<T>::create(store, name + ".merge", merged, c_out, rng);
        b.merge_bn = BatchNorm<T>::create(store, name + ".merge.bn", c_out, bn_momentum, bn_eps);
        if (c_in != c_out) {
            b.shortcut = Dense<T>::create(store, name + ".shortcut", c_in, c_out, rng);
            b.shortcut_bn =
                BatchNorm<T>::create(store, name + ".shortcut.bn", c_out, bn_momentum, bn_eps);
        }
        return b;
    }

    // geom3d/geom2d share one neighbor list (the 2-D branch reuses the 3-D
    // radius search, offsets projected). pool_to_out maps output rows to
    // input rows for the strided variant's shortcut; nullptr for same-level
    // blocks.
    Var apply(Tape<T>& t, Var x, const KpConvGeometry& geom3d, const KpConvGeometry& geom2d,
              const std::vector<int32_t>* pool_to_out, bool training, bool update_stats) const {
        check(t.val(x).cols() == c_in, "hybrid block: feature width " +
                                           t.val(x).shape_str() + " does not match c_in=" +
                                           std::to_string(c_in));
        Var reduced = reduce.apply(t, x, training, update_stats);
        Var branch3 = kpconv(t, reduced, t.param(*w3d), geom3d);
        Var cat = branch3;
        if (with_2d) {
            Var branch2 = kpconv(t, reduced, t.param(*w2d), geom2d);
            cat = concat_cols(t, branch3, branch2);
        }
        Var merged = leaky_relu(
            t, merge_bn.apply(t, merge.apply(t, cat), training, update_stats), slope);

        Var sc = x;
        if (pool_to_out) sc = gather_rows(t, sc, *pool_to_out);
        if (shortcut) {
            sc = shortcut->apply(t, sc);
            sc = shortcut_bn->apply(t, sc, training, update_stats);
        }
        return add(t, merged, sc);
    }
};

// ---------------------------------------------------------------------------
// SegECC: segment-graph edge-conditioned convolution
// ---------------------------------------------------------------------------

template <typename T>
struct SegEcc {
    int64_t c_r = 32;
    int64_t hidden = 64;
    Dense<T> reduce;  // C -> c_r
    Dense<T> theta1;  // c_r -> hidden (with bias)
    Dense<T> theta2;  // hidden -> c_r * c_r (with bias)
    T slope = T(0.1);

    static SegEcc create(ParameterStore<T>& store, const std::string& name, int64_t c_in,
                         int64_t c_r, int64_t hidden, Rng& rng, T slope) {
        SegEcc s;
        s.c_r = c_r;
        s.hidden = hidden;
        s.slope = slope;
        s.reduce = Dense<T>::create(store, name + ".reduce", c_in, c_r, rng);
        s.theta1 = Dense<T>::create(store, name + ".theta1", c_r, hidden, rng, true);
        s.theta2 = Dense<T>::create(store, name + ".theta2", hidden, c_r * c_r, rng, true);
        return s;
    }

    // edges are directed (target i, source j) pairs of segment ids; node
    // features are segment means of the reduced point features. A node with
    // no in-edges gets a zero vector. Returns per-point features (N x c_r)
    // for the caller to concatenate.
    Var apply(Tape<T>& t, Var x, const std::vector<int32_t>& segment_of_point,
              int64_t n_segments,
              const std::vector<std::pair<int32_t, int32_t>>& edges) const {
        check(n_segments > 0, "segecc: no segments");
        Var xr = reduce.apply(t, x);
        Var m = scatter_mean_rows(t, xr, segment_of_point, n_segments);
        if (edges.empty()) {
            // single segment in the sphere: no neighbors, zero global feature
            Var zeros = t.leaf(Tensor<T>({t.val(x).rows(), c_r}), false);
            return zeros;
        }
        std::vector<int32_t> targets, sources;
        targets.reserve(edges.size());
        sources.reserve(edges.size());
        for (const auto& [i, j] : edges) {
            check(i != j, "segecc: self-edge");
            check(i >= 0 && i < n_segments && j >= 0 && j < n_segments,
                  "segecc: edge endpoint out of range");
            targets.push_back(i);
            sources.push_back(j);
        }
        Var mi = gather_rows(t, m, targets);
        Var mj = gather_rows(t, m, sources);
        Var e = sub(t, mi, mj);  // e_ij = m_i - m_ij
        Var h1 = leaky_relu(t, theta1.apply(t, e), slope);
        Var th = theta2.apply(t, h1);
        Var weighted = edge_matvec(t, th, mj);
        Var m_out = scatter_mean_rows(t, weighted, targets, n_segments);
        return gather_rows(t, m_out, segment_of_point);
    }
};

// ---------------------------------------------------------------------------
// Spatial-channel attention head
// ---------------------------------------------------------------------------

template <typename T>
struct AttentionHead {
    bool enabled = true;
    Dense<T> fc_u, fc_v, fc_t;
    Parameter<T>* alpha = nullptr;  // init exactly 0
    Parameter<T>* beta = nullptr;   // init exactly 0
    Dense<T> head_fc;

    static AttentionHead create(ParameterStore<T>& store, const std::string& name,
                                int64_t c, int64_t num_classes, bool enabled, Rng& rng) {
        AttentionHead a;
        a.enabled = enabled;
        if (enabled) {
            a.fc_u = Dense<T>::create(store, name + ".fc_u", c, c, rng);
            a.fc_v = Dense<T>::create(store, name + ".fc_v", c, c, rng);
            a.fc_t = Dense<T>::create(store, name + ".fc_t", c, c, rng);
            a.alpha = &store.add(name + ".alpha", Tensor<T>({1}));
            a.beta = &store.add(name + ".beta", Tensor<T>({1}));
        }
        a.head_fc = Dense<T>::create(store, name + ".fc", c, num_classes, rng);
        return a;
    }

    // The seeded row subset attention runs on for one sphere; all rows when
    // the sphere fits under the cap.
    static std::vector<int32_t> selected_rows(int32_t begin, int32_t end, int64_t cap,
                                              uint64_t seed, uint64_t sphere) {
        const int64_t n = end - begin;
        std::vector<int32_t> sel;
        if (cap > 0 && n > cap) {
            Rng rng(split_seed(seed, 0xa77e, sphere));
            std::vector<int64_t> keep;
            rng.sample_without_replacement<int64_t>(n, cap, keep);
            std::sort(keep.begin(), keep.end());
            sel.reserve(static_cast<size_t>(cap));
            for (int64_t k : keep) sel.push_back(begin + static_cast<int32_t>(k));
        } else {
            sel.resize(static_cast<size_t>(n));
            for (int64_t i = 0; i < n; ++i)
                sel[static_cast<size_t>(i)] = begin + static_cast<int32_t>(i);
        }
        return sel;
    }

    // F_sa = alpha * (SA T) + F with sa_ij = softmax_j(U_i . V_j), applied to
    // the selected rows of each sphere; untouched rows pass through.
    Var spatial_attention(Tape<T>& t, Var f,
                          const std::vector<std::pair<int32_t, int32_t>>& sphere_ranges,
                          int64_t cap, uint64_t seed) const {
        Var f_sa = f;
        for (size_t s = 0; s < sphere_ranges.size(); ++s) {
            const auto [begin, end] = sphere_ranges[s];
            if (end <= begin) continue;
            const auto sel = selected_rows(begin, end, cap, seed, s);
            Var fs = gather_rows(t, f, sel);
            Var u = fc_u.apply(t, fs);
            Var v = fc_v.apply(t, fs);
            Var tt = fc_t.apply(t, fs);
            Var sa = softmax_rows(t, matmul(t, u, v, false, true));
            Var sa_out = matmul(t, sa, tt);
            f_sa = row_scatter_add(t, f_sa, scale(t, sa_out, t.param(*alpha)), sel);
        }
        return f_sa;
    }

    // F_ca = beta * (F CA^T) + F with ca_ij = softmax_j(F_i . F_j) taken over
    // channel columns (CA is C x C, computed from F with no transformation).
    Var channel_attention(Tape<T>& t, Var f,
                          const std::vector<std::pair<int32_t, int32_t>>& sphere_ranges,
                          int64_t cap, uint64_t seed) const {
        Var f_ca = f;
        for (size_t s = 0; s < sphere_ranges.size(); ++s) {
            const auto [begin, end] = sphere_ranges[s];
            if (end <= begin) continue;
            const auto sel = selected_rows(begin, end, cap, seed, s);
            Var fs = gather_rows(t, f, sel);
            Var ca = softmax_rows(t, matmul(t, fs, fs, true, false));
            Var ca_out = matmul(t, fs, ca, false, true);
            f_ca = row_scatter_add(t, f_ca, scale(t, ca_out, t.param(*beta)), sel);
        }
        return f_ca;
    }

    // logits = (F_sa + F_ca) head_fc; softmax is left to the loss/inference.
    Var apply(Tape<T>& t, Var f,
              const std::vector<std::pair<int32_t, int32_t>>& sphere_ranges, int64_t cap,
              uint64_t seed) const {
        if (!enabled) return head_fc.apply(t, f);
        Var f_sa = spatial_attention(t, f, sphere_ranges, cap, seed);
        Var f_ca = channel_attention(t, f, sphere_ranges, cap, seed);
        return head_fc.apply(t, add(t, f_sa, f_ca));
    }
};

}  // namespace lgenet
