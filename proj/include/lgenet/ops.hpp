#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lgenet/tape.hpp"

namespace lgenet {

// Index of the zero "shadow" row used to pad neighbor lists: one past the
// last support row.
constexpr int32_t kShadowOffset = 0;  // shadow index == support row count

// ---------------------------------------------------------------------------
// Dense kernels
// ---------------------------------------------------------------------------

// C (MxN) = opA(A) * opB(B), optionally accumulating. Loop orders are chosen
// so the innermost loop runs over contiguous memory.
template <typename T>
void matmul_into(const Tensor<T>& A, bool ta, const Tensor<T>& B, bool tb,
                 Tensor<T>& C, bool accum) {
    const int64_t M = ta ? A.cols() : A.rows();
    const int64_t K = ta ? A.rows() : A.cols();
    const int64_t Kb = tb ? B.cols() : B.rows();
    const int64_t N = tb ? B.rows() : B.cols();
    check(K == Kb, "matmul: inner dimensions disagree " + A.shape_str() + " vs " +
                       B.shape_str());
    check(C.rows() == M && C.cols() == N, "matmul: bad output shape");
    if (!accum) C.fill(T(0));
    T* c = C.v.data();
    const T* a = A.v.data();
    const T* b = B.v.data();
    if (!ta && !tb) {
        for (int64_t m = 0; m < M; ++m) {
            T* crow = c + m * N;
            const T* arow = a + m * K;
            for (int64_t k = 0; k < K; ++k) {
                const T s = arow[k];
                const T* brow = b + k * N;
                for (int64_t n = 0; n < N; ++n) crow[n] += s * brow[n];
            }
        }
    } else if (!ta && tb) {
        for (int64_t m = 0; m < M; ++m) {
            const T* arow = a + m * K;
            T* crow = c + m * N;
            for (int64_t n = 0; n < N; ++n) {
                const T* brow = b + n * K;
                T acc = T(0);
                for (int64_t k = 0; k < K; ++k) acc += arow[k] * brow[k];
                crow[n] += acc;
            }
        }
    } else if (ta && !tb) {
        for (int64_t k = 0; k < K; ++k) {
            const T* arow = a + k * M;
            const T* brow = b + k * N;
            for (int64_t m = 0; m < M; ++m) {
                const T s = arow[m];
                T* crow = c + m * N;
                for (int64_t n = 0; n < N; ++n) crow[n] += s * brow[n];
            }
        }
    } else {
        for (int64_t m = 0; m < M; ++m)
            for (int64_t n = 0; n < N; ++n) {
                T acc = T(0);
                for (int64_t k = 0; k < K; ++k) acc += a[k * M + m] * b[n * K + k];
                c[m * N + n] += acc;
            }
    }
}

template <typename T>
Tensor<T> matmul_val(const Tensor<T>& A, bool ta, const Tensor<T>& B, bool tb) {
    Tensor<T> C({ta ? A.cols() : A.rows(), tb ? B.rows() : B.cols()});
    matmul_into(A, ta, B, tb, C, true);
    return C;
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
    check(t.val(a).same_shape(t.val(b)), "add: shape mismatch");
    Tensor<T> out = t.val(a);
    const auto& bv = t.val(b).v;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += bv[i];
    const Var o = t.next_id();
    return t.emit(std::move(out), {a, b}, [a, b, o](Tape<T>& tp) {
        const auto& g = tp.grad(o).v;
        if (tp.needs_grad(a)) {
            auto& ga = tp.grad(a).v;
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (tp.needs_grad(b)) {
            auto& gb = tp.grad(b).v;
            for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    });
}

template <typename T>
Var sub(Tape<T>& t, Var a, Var b) {
    check(t.val(a).same_shape(t.val(b)), "sub: shape mismatch");
    Tensor<T> out = t.val(a);
    const auto& bv = t.val(b).v;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= bv[i];
    const Var o = t.next_id();
    return t.emit(std::move(out), {a, b}, [a, b, o](Tape<T>& tp) {
        const auto& g = tp.grad(o).v;
        if (tp.needs_grad(a)) {
            auto& ga = tp.grad(a).v;
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (tp.needs_grad(b)) {
            auto& gb = tp.grad(b).v;
            for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

template <typename T>
Var mul(Tape<T>& t, Var a, Var b) {
    check(t.val(a).same_shape(t.val(b)), "mul: shape mismatch");
    Tensor<T> out = t.val(a);
    const auto& bv = t.val(b).v;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= bv[i];
    const Var o = t.next_id();
    return t.emit(std::move(out), {a, b}, [a, b, o](Tape<T>& tp) {
        const auto& g = tp.grad(o).v;
        const auto& av = tp.val(a).v;
        const auto& bv2 = tp.val(b).v;
        if (tp.needs_grad(a)) {
            auto& ga = tp.grad(a).v;
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
        }
        if (tp.needs_grad(b)) {
            auto& gb = tp.grad(b).v;
            for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

// x scaled by a 1-element tensor (the attention alpha/beta parameters).
template <typename T>
Var scale(Tape<T>& t, Var x, Var s) {
    check(t.val(s).numel() == 1, "scale: scale factor must be a 1-element tensor");
    const T sv = t.val(s).v[0];
    Tensor<T> out = t.val(x);
    for (auto& e : out.v) e *= sv;
    const Var o = t.next_id();
    return t.emit(std::move(out), {x, s}, [x, s, o](Tape<T>& tp) {
        const auto& g = tp.grad(o).v;
        const T sv2 = tp.val(s).v[0];
        const auto& xv = tp.val(x).v;
        if (tp.needs_grad(x)) {
            auto& gx = tp.grad(x).v;
            for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * sv2;
        }
        if (tp.needs_grad(s)) {
            T acc = T(0);
            for (size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
            tp.grad(s).v[0] += acc;
        }
    });
}

template <typename T>
Var leaky_relu(Tape<T>& t, Var x, T slope) {
    Tensor<T> out = t.val(x);
    for (auto& e : out.v)
        if (e < T(0)) e *= slope;
    const Var o = t.next_id();
    return t.emit(std::move(out), {x}, [x, o, slope](Tape<T>& tp) {
        if (!tp.needs_grad(x)) return;
        const auto& g = tp.grad(o).v;
        const auto& xv = tp.val(x).v;
        auto& gx = tp.grad(x).v;
        for (size_t i = 0; i < g.size(); ++i)
            gx[i] += g[i] * (xv[i] > T(0) ? T(1) : slope);
    });
}

// Broadcast row bias: out[i, :] = x[i, :] + b.
template <typename T>
Var add_row_bias(Tape<T>& t, Var x, Var b) {
    const int64_t N = t.val(x).rows(), C = t.val(x).cols();
    check(t.val(b).numel() == C, "add_row_bias: bias width mismatch");
    Tensor<T> out = t.val(x);
    const auto& bv = t.val(b).v;
    for (int64_t i = 0; i < N; ++i) {
        T* row = out.row_ptr(i);
        for (int64_t j = 0; j < C; ++j) row[j] += bv[static_cast<size_t>(j)];
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {x, b}, [x, b, o, N, C](Tape<T>& tp) {
        const Tensor<T>& g = tp.grad(o);
        if (tp.needs_grad(x)) {
            auto& gx = tp.grad(x).v;
            for (size_t i = 0; i < g.v.size(); ++i) gx[i] += g.v[i];
        }
        if (tp.needs_grad(b)) {
            auto& gb = tp.grad(b).v;
            for (int64_t i = 0; i < N; ++i) {
                const T* row = g.row_ptr(i);
                for (int64_t j = 0; j < C; ++j) gb[static_cast<size_t>(j)] += row[j];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Matrix ops
// ---------------------------------------------------------------------------

template <typename T>
Var matmul(Tape<T>& t, Var a, Var b, bool ta = false, bool tb = false) {
    check(t.val(a).rank() == 2 && t.val(b).rank() == 2, "matmul: inputs must be matrices");
    Tensor<T> out = matmul_val(t.val(a), ta, t.val(b), tb);
    const Var o = t.next_id();
    return t.emit(std::move(out), {a, b}, [a, b, o, ta, tb](Tape<T>& tp) {
        const Tensor<T>& g = tp.grad(o);
        const Tensor<T>& A = tp.val(a);
        const Tensor<T>& B = tp.val(b);
        if (tp.needs_grad(a)) {
            if (!ta)
                matmul_into(g, false, B, !tb, tp.grad(a), true);
            else if (!tb)
                matmul_into(B, false, g, true, tp.grad(a), true);
            else
                matmul_into(B, true, g, true, tp.grad(a), true);
        }
        if (tp.needs_grad(b)) {
            if (!tb)
                matmul_into(A, !ta, g, false, tp.grad(b), true);
            else if (!ta)
                matmul_into(g, true, A, false, tp.grad(b), true);
            else
                matmul_into(g, true, A, true, tp.grad(b), true);
        }
    });
}

template <typename T>
Var concat_cols(Tape<T>& t, Var a, Var b) {
    const Tensor<T>& A = t.val(a);
    const Tensor<T>& B = t.val(b);
    check(A.rank() == 2 && B.rank() == 2 && A.rows() == B.rows(),
          "concat_cols: row counts differ");
    const int64_t N = A.rows(), Ca = A.cols(), Cb = B.cols();
    Tensor<T> out({N, Ca + Cb});
    for (int64_t i = 0; i < N; ++i) {
        std::copy_n(A.row_ptr(i), Ca, out.row_ptr(i));
        std::copy_n(B.row_ptr(i), Cb, out.row_ptr(i) + Ca);
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {a, b}, [a, b, o, N, Ca, Cb](Tape<T>& tp) {
        const Tensor<T>& g = tp.grad(o);
        if (tp.needs_grad(a)) {
            Tensor<T>& ga = tp.grad(a);
            for (int64_t i = 0; i < N; ++i)
                for (int64_t j = 0; j < Ca; ++j) ga.at(i, j) += g.at(i, j);
        }
        if (tp.needs_grad(b)) {
            Tensor<T>& gb = tp.grad(b);
            for (int64_t i = 0; i < N; ++i)
                for (int64_t j = 0; j < Cb; ++j) gb.at(i, j) += g.at(i, Ca + j);
        }
    });
}

// Numerically stabilized row softmax (max subtraction).
template <typename T>
Var softmax_rows(Tape<T>& t, Var x) {
    const Tensor<T>& X = t.val(x);
    check(X.rank() == 2, "softmax_rows: input must be 2-D, got " + X.shape_str());
    const int64_t N = X.rows(), C = X.cols();
    Tensor<T> out({N, C});
    for (int64_t i = 0; i < N; ++i) {
        const T* xr = X.row_ptr(i);
        T* yr = out.row_ptr(i);
        T mx = xr[0];
        for (int64_t j = 1; j < C; ++j) mx = std::max(mx, xr[j]);
        T sum = T(0);
        for (int64_t j = 0; j < C; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        const T inv = T(1) / sum;
        for (int64_t j = 0; j < C; ++j) yr[j] *= inv;
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {x}, [x, o, N, C](Tape<T>& tp) {
        if (!tp.needs_grad(x)) return;
        const Tensor<T>& y = tp.val(o);
        const Tensor<T>& g = tp.grad(o);
        Tensor<T>& gx = tp.grad(x);
        for (int64_t i = 0; i < N; ++i) {
            const T* yr = y.row_ptr(i);
            const T* gr = g.row_ptr(i);
            T* gxr = gx.row_ptr(i);
            T dot = T(0);
            for (int64_t j = 0; j < C; ++j) dot += gr[j] * yr[j];
            for (int64_t j = 0; j < C; ++j) gxr[j] += yr[j] * (gr[j] - dot);
        }
    });
}

// ---------------------------------------------------------------------------
// Indexed ops
// ---------------------------------------------------------------------------

// Row gather. An index equal to x.rows() selects the all-zero shadow row,
// which also receives no gradient.
template <typename T>
Var gather_rows(Tape<T>& t, Var x, const std::vector<int32_t>& rows) {
    const Tensor<T>& X = t.val(x);
    check(X.rank() == 2, "gather_rows: input must be 2-D");
    const int64_t S = X.rows(), C = X.cols();
    Tensor<T> out({static_cast<int64_t>(rows.size()), C});
    for (size_t r = 0; r < rows.size(); ++r) {
        const int32_t idx = rows[r];
        check(idx >= 0 && idx <= S, "gather_rows: index out of range");
        if (idx < S) std::copy_n(X.row_ptr(idx), C, out.row_ptr(static_cast<int64_t>(r)));
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {x}, [x, o, rows, S, C](Tape<T>& tp) {
        if (!tp.needs_grad(x)) return;
        const Tensor<T>& g = tp.grad(o);
        Tensor<T>& gx = tp.grad(x);
        for (size_t r = 0; r < rows.size(); ++r) {
            const int32_t idx = rows[r];
            if (idx >= S) continue;  // shadow row
            const T* gr = g.row_ptr(static_cast<int64_t>(r));
            T* gxr = gx.row_ptr(idx);
            for (int64_t j = 0; j < C; ++j) gxr[j] += gr[j];
        }
    });
}

// Mean of rows per group; a group with no members yields a zero row.
template <typename T>
Var scatter_mean_rows(Tape<T>& t, Var x, const std::vector<int32_t>& group,
                      int64_t n_groups) {
    const Tensor<T>& X = t.val(x);
    check(X.rank() == 2, "scatter_mean_rows: input must be 2-D");
    check(static_cast<int64_t>(group.size()) == X.rows(),
          "scatter_mean_rows: one group id per row required");
    const int64_t C = X.cols();
    Tensor<T> out({n_groups, C});
    std::vector<int32_t> count(static_cast<size_t>(n_groups), 0);
    for (size_t r = 0; r < group.size(); ++r) {
        const int32_t gid = group[r];
        check(gid >= 0 && gid < n_groups, "scatter_mean_rows: group id out of range");
        const T* xr = X.row_ptr(static_cast<int64_t>(r));
        T* orow = out.row_ptr(gid);
        for (int64_t j = 0; j < C; ++j) orow[j] += xr[j];
        ++count[static_cast<size_t>(gid)];
    }
    for (int64_t gidx = 0; gidx < n_groups; ++gidx) {
        const int32_t n = count[static_cast<size_t>(gidx)];
        if (n == 0) continue;
        const T inv = T(1) / static_cast<T>(n);
        T* orow = out.row_ptr(gidx);
        for (int64_t j = 0; j < C; ++j) orow[j] *= inv;
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {x}, [x, o, group, count, C](Tape<T>& tp) {
        if (!tp.needs_grad(x)) return;
        const Tensor<T>& g = tp.grad(o);
        Tensor<T>& gx = tp.grad(x);
        for (size_t r = 0; r < group.size(); ++r) {
            const int32_t gid = group[r];
            const T inv = T(1) / static_cast<T>(count[static_cast<size_t>(gid)]);
            const T* gr = g.row_ptr(gid);
            T* gxr = gx.row_ptr(static_cast<int64_t>(r));
            for (int64_t j = 0; j < C; ++j) gxr[j] += gr[j] * inv;
        }
    });
}

// out = base with updates[r] added onto row rows[r]. Used to write attention
// results for a row subset back into the full feature map.
template <typename T>
Var row_scatter_add(Tape<T>& t, Var base, Var updates, const std::vector<int32_t>& rows) {
    const Tensor<T>& B = t.val(base);
    const Tensor<T>& U = t.val(updates);
    check(B.rank() == 2 && U.rank() == 2 && B.cols() == U.cols(),
          "row_scatter_add: width mismatch");
    check(static_cast<int64_t>(rows.size()) == U.rows(),
          "row_scatter_add: one target row per update row required");
    Tensor<T> out = B;
    const int64_t C = B.cols();
    for (size_t r = 0; r < rows.size(); ++r) {
        check(rows[r] >= 0 && rows[r] < B.rows(), "row_scatter_add: row out of range");
        T* orow = out.row_ptr(rows[r]);
        const T* ur = U.row_ptr(static_cast<int64_t>(r));
        for (int64_t j = 0; j < C; ++j) orow[j] += ur[j];
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {base, updates}, [base, updates, o, rows, C](Tape<T>& tp) {
        const Tensor<T>& g = tp.grad(o);
        if (tp.needs_grad(base)) {
            auto& gb = tp.grad(base).v;
            for (size_t i = 0; i < g.v.size(); ++i) gb[i] += g.v[i];
        }
        if (tp.needs_grad(updates)) {
            Tensor<T>& gu = tp.grad(updates);
            for (size_t r = 0; r < rows.size(); ++r) {
                const T* gr = g.row_ptr(rows[r]);
                T* gur = gu.row_ptr(static_cast<int64_t>(r));
                for (int64_t j = 0; j < C; ++j) gur[j] += gr[j];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Batch normalization over the point axis
// ---------------------------------------------------------------------------

// Training-mode batch norm: per-channel mean/variance over rows. Batch
// statistics of this call are written to *out_mean / *out_var so the caller
// can maintain running estimates.
template <typename T>
Var batch_norm_train(Tape<T>& t, Var x, Var gamma, Var beta, T eps,
                     Tensor<T>* out_mean = nullptr, Tensor<T>* out_var = nullptr) {
    const Tensor<T>& X = t.val(x);
    check(X.rank() == 2, "batch_norm: input must be 2-D");
    const int64_t N = X.rows(), C = X.cols();
    check(N >= 1, "batch_norm: empty input");
    check(t.val(gamma).numel() == C && t.val(beta).numel() == C,
          "batch_norm: gamma/beta width mismatch");
    Tensor<T> mean({C}), var({C});
    for (int64_t i = 0; i < N; ++i) {
        const T* xr = X.row_ptr(i);
        for (int64_t j = 0; j < C; ++j) mean.v[static_cast<size_t>(j)] += xr[j];
    }
    for (int64_t j = 0; j < C; ++j) mean.v[static_cast<size_t>(j)] /= static_cast<T>(N);
    for (int64_t i = 0; i < N; ++i) {
        const T* xr = X.row_ptr(i);
        for (int64_t j = 0; j < C; ++j) {
            const T d = xr[j] - mean.v[static_cast<size_t>(j)];
            var.v[static_cast<size_t>(j)] += d * d;
        }
    }
    for (int64_t j = 0; j < C; ++j) var.v[static_cast<size_t>(j)] /= static_cast<T>(N);
    if (out_mean) *out_mean = mean;
    if (out_var) *out_var = var;

    Tensor<T> inv_std({C});
    for (int64_t j = 0; j < C; ++j)
        inv_std.v[static_cast<size_t>(j)] =
            T(1) / std::sqrt(var.v[static_cast<size_t>(j)] + eps);

    const Tensor<T>& G = t.val(gamma);
    const Tensor<T>& Bv = t.val(beta);
    Tensor<T> out({N, C});
    for (int64_t i = 0; i < N; ++i) {
        const T* xr = X.row_ptr(i);
        T* yr = out.row_ptr(i);
        for (int64_t j = 0; j < C; ++j) {
            const size_t sj = static_cast<size_t>(j);
            yr[j] = G.v[sj] * (xr[j] - mean.v[sj]) * inv_std.v[sj] + Bv.v[sj];
        }
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, o, N, C, mean, inv_std](Tape<T>& tp) {
        const Tensor<T>& g = tp.grad(o);
        const Tensor<T>& X2 = tp.val(x);
        const Tensor<T>& G2 = tp.val(gamma);
        // per-channel sums of dy and dy*xhat
        std::vector<T> sum_dy(static_cast<size_t>(C), T(0));
        std::vector<T> sum_dyxh(static_cast<size_t>(C), T(0));
        for (int64_t i = 0; i < N; ++i) {
            const T* gr = g.row_ptr(i);
            const T* xr = X2.row_ptr(i);
            for (int64_t j = 0; j < C; ++j) {
                const size_t sj = static_cast<size_t>(j);
                const T xh = (xr[j] - mean.v[sj]) * inv_std.v[sj];
                sum_dy[sj] += gr[j];
                sum_dyxh[sj] += gr[j] * xh;
            }
        }
        if (tp.needs_grad(gamma)) {
            auto& gg = tp.grad(gamma).v;
            for (int64_t j = 0; j < C; ++j) gg[static_cast<size_t>(j)] += sum_dyxh[static_cast<size_t>(j)];
        }
        if (tp.needs_grad(beta)) {
            auto& gb = tp.grad(beta).v;
            for (int64_t j = 0; j < C; ++j) gb[static_cast<size_t>(j)] += sum_dy[static_cast<size_t>(j)];
        }
        if (tp.needs_grad(x)) {
            Tensor<T>& gx = tp.grad(x);
            const T invN = T(1) / static_cast<T>(N);
            for (int64_t i = 0; i < N; ++i) {
                const T* gr = g.row_ptr(i);
                const T* xr = X2.row_ptr(i);
                T* gxr = gx.row_ptr(i);
                for (int64_t j = 0; j < C; ++j) {
                    const size_t sj = static_cast<size_t>(j);
                    const T xh = (xr[j] - mean.v[sj]) * inv_std.v[sj];
                    gxr[j] += G2.v[sj] * inv_std.v[sj] *
                              (gr[j] - invN * sum_dy[sj] - xh * invN * sum_dyxh[sj]);
                }
            }
        }
    });
}

// Inference-mode batch norm: affine transform using frozen running stats.
template <typename T>
Var batch_norm_eval(Tape<T>& t, Var x, Var gamma, Var beta,
                    const Tensor<T>& running_mean, const Tensor<T>& running_var, T eps) {
    const Tensor<T>& X = t.val(x);
    check(X.rank() == 2, "batch_norm: input must be 2-D");
    const int64_t N = X.rows(), C = X.cols();
    Tensor<T> inv_std({C});
    for (int64_t j = 0; j < C; ++j)
        inv_std.v[static_cast<size_t>(j)] =
            T(1) / std::sqrt(running_var.v[static_cast<size_t>(j)] + eps);
    const Tensor<T>& G = t.val(gamma);
    const Tensor<T>& Bv = t.val(beta);
    Tensor<T> out({N, C});
    for (int64_t i = 0; i < N; ++i) {
        const T* xr = X.row_ptr(i);
        T* yr = out.row_ptr(i);
        for (int64_t j = 0; j < C; ++j) {
            const size_t sj = static_cast<size_t>(j);
            yr[j] = G.v[sj] * (xr[j] - running_mean.v[sj]) * inv_std.v[sj] + Bv.v[sj];
        }
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, o, N, C, running_mean, inv_std](Tape<T>& tp) {
        const Tensor<T>& g = tp.grad(o);
        const Tensor<T>& X2 = tp.val(x);
        const Tensor<T>& G2 = tp.val(gamma);
        if (tp.needs_grad(x)) {
            Tensor<T>& gx = tp.grad(x);
            for (int64_t i = 0; i < N; ++i) {
                const T* gr = g.row_ptr(i);
                T* gxr = gx.row_ptr(i);
                for (int64_t j = 0; j < C; ++j) {
                    const size_t sj = static_cast<size_t>(j);
                    gxr[j] += gr[j] * G2.v[sj] * inv_std.v[sj];
                }
            }
        }
        if (tp.needs_grad(gamma)) {
            auto& gg = tp.grad(gamma).v;
            for (int64_t i = 0; i < N; ++i) {
                const T* gr = g.row_ptr(i);
                const T* xr = X2.row_ptr(i);
                for (int64_t j = 0; j < C; ++j) {
                    const size_t sj = static_cast<size_t>(j);
                    gg[sj] += gr[j] * (xr[j] - running_mean.v[sj]) * inv_std.v[sj];
                }
            }
        }
        if (tp.needs_grad(beta)) {
            auto& gb = tp.grad(beta).v;
            for (int64_t i = 0; i < N; ++i) {
                const T* gr = g.row_ptr(i);
                for (int64_t j = 0; j < C; ++j) gb[static_cast<size_t>(j)] += gr[j];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Edge-wise matrix-vector product (SegECC filter application)
// ---------------------------------------------------------------------------

// theta: E x (C*C) per-edge filter matrices (row-major C x C), mj: E x C
// neighbor features. out[e] = Theta_e * mj[e].
template <typename T>
Var edge_matvec(Tape<T>& t, Var theta, Var mj) {
    const Tensor<T>& Th = t.val(theta);
    const Tensor<T>& M = t.val(mj);
    const int64_t E = M.rows(), C = M.cols();
    check(Th.rows() == E && Th.cols() == C * C,
          "edge_matvec: theta must be E x C^2 with matching E");
    Tensor<T> out({E, C});
    for (int64_t e = 0; e < E; ++e) {
        const T* th = Th.row_ptr(e);
        const T* m = M.row_ptr(e);
        T* orow = out.row_ptr(e);
        for (int64_t i = 0; i < C; ++i) {
            T acc = T(0);
            const T* thr = th + i * C;
            for (int64_t j = 0; j < C; ++j) acc += thr[j] * m[j];
            orow[i] = acc;
        }
    }
    const Var o = t.next_id();
    return t.emit(std::move(out), {theta, mj}, [theta, mj, o, E, C](Tape<T>& tp) {
        const Tensor<T>& g = tp.grad(o);
        const Tensor<T>& Th2 = tp.val(theta);
        const Tensor<T>& M2 = tp.val(mj);
        const bool ng_th = tp.needs_grad(theta);
        const bool ng_m = tp.needs_grad(mj);
        for (int64_t e = 0; e < E; ++e) {
            const T* gr = g.row_ptr(e);
            const T* m = M2.row_ptr(e);
            const T* th = Th2.row_ptr(e);
            if (ng_th) {
                T* gth = tp.grad(theta).row_ptr(e);
                for (int64_t i = 0; i < C; ++i) {
                    const T gi = gr[i];
                    T* gthr = gth + i * C;
                    for (int64_t j = 0; j < C; ++j) gthr[j] += gi * m[j];
                }
            }
            if (ng_m) {
                T* gm = tp.grad(mj).row_ptr(e);
                for (int64_t i = 0; i < C; ++i) {
                    const T gi = gr[i];
                    const T* thr = th + i * C;
                    for (int64_t j = 0; j < C; ++j) gm[j] += gi * thr[j];
                }
            }
        }
    });
}

}  // namespace lgenet
