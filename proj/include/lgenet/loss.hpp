#pragma once

#include <cstdio>
#include <vector>

#include "lgenet/tape.hpp"

namespace lgenet {

// Points carrying this label are excluded from loss and metrics.
constexpr int32_t kUnlabeled = 255;

enum class LossForm {
    kCategorical,  // mean over points of -w_y * log(p_y)
    kLiteralEq10,  // per-class binary sum exactly as printed, no leading minus
};

// w_c = (1/gamma_c) / sum(1/gamma_c) with gamma_c the class share of the
// total point count. The total cancels, so this is inverse-frequency
// normalized to sum 1.
inline std::vector<double> compute_class_weights(const std::vector<int64_t>& counts) {
    check(!counts.empty(), "class weights: empty count vector");
    double denom = 0.0;
    for (size_t c = 0; c < counts.size(); ++c) {
        check(counts[c] > 0,
              "class weights: class " + std::to_string(c) +
                  " has zero points; drop the class from the manifest or floor its "
                  "count before weighting");
        denom += 1.0 / static_cast<double>(counts[c]);
    }
    std::vector<double> w(counts.size());
    for (size_t c = 0; c < counts.size(); ++c)
        w[c] = (1.0 / static_cast<double>(counts[c])) / denom;
    return w;
}

// Weighted cross-entropy over class probabilities (rows of probs sum to 1).
// Unlabeled points are skipped. Probabilities are clamped at eps before the
// log; clamping is counted and reported once per call.
template <typename T>
Var weighted_cross_entropy(Tape<T>& t, Var probs, const std::vector<int32_t>& labels,
                           const std::vector<T>& class_weights,
                           LossForm form = LossForm::kCategorical) {
    const Tensor<T>& P = t.val(probs);
    check(P.rank() == 2, "cross entropy: probs must be N x C");
    const int64_t N = P.rows(), C = P.cols();
    check(static_cast<int64_t>(labels.size()) == N, "cross entropy: one label per row");
    check(static_cast<int64_t>(class_weights.size()) == C,
          "cross entropy: one weight per class");
    const T eps = static_cast<T>(1e-12);

    int64_t counted = 0;
    int64_t clamped = 0;
    double acc = 0.0;
    for (int64_t i = 0; i < N; ++i) {
        const int32_t y = labels[static_cast<size_t>(i)];
        if (y == kUnlabeled) continue;
        check(y >= 0 && y < C, "cross entropy: label out of range");
        ++counted;
        const T* row = P.row_ptr(i);
        if (form == LossForm::kCategorical) {
            T p = row[y];
            if (p < eps) {
                p = eps;
                ++clamped;
            }
            acc -= static_cast<double>(class_weights[static_cast<size_t>(y)]) *
                   std::log(static_cast<double>(p));
        } else {
            for (int64_t c = 0; c < C; ++c) {
                T p = row[c];
                if (p < eps) { p = eps; ++clamped; }
                T q = T(1) - row[c];
                if (q < eps) { q = eps; ++clamped; }
                const double w = static_cast<double>(class_weights[static_cast<size_t>(c)]);
                if (c == y)
                    acc += w * std::log(static_cast<double>(p));
                else
                    acc += w * std::log(static_cast<double>(q));
            }
        }
    }
    check(counted > 0, "cross entropy: no labeled points");
    if (clamped > 0)
        std::fprintf(stderr,
                     "[lgenet] warning: cross entropy clamped %lld probabilities at 1e-12\n",
                     static_cast<long long>(clamped));
    const T loss_val = static_cast<T>(
        form == LossForm::kCategorical ? acc / static_cast<double>(counted) : acc);

    const Var o = t.next_id();
    return t.emit(Tensor<T>({1}, {loss_val}), {probs},
                  [probs, o, labels, class_weights, form, N, C, counted, eps](Tape<T>& tp) {
        if (!tp.needs_grad(probs)) return;
        const T g = tp.grad(o).v[0];
        const Tensor<T>& P2 = tp.val(probs);
        Tensor<T>& gp = tp.grad(probs);
        const T invM = T(1) / static_cast<T>(counted);
        for (int64_t i = 0; i < N; ++i) {
            const int32_t y = labels[static_cast<size_t>(i)];
            if (y == kUnlabeled) continue;
            const T* row = P2.row_ptr(i);
            T* grow = gp.row_ptr(i);
            if (form == LossForm::kCategorical) {
                const T p = std::max(row[y], eps);
                grow[y] += g * (-class_weights[static_cast<size_t>(y)] * invM / p);
            } else {
                for (int64_t c = 0; c < C; ++c) {
                    const T w = class_weights[static_cast<size_t>(c)];
                    if (c == y)
                        grow[c] += g * w / std::max(row[c], eps);
                    else
                        grow[c] += g * (-w / std::max(T(1) - row[c], eps));
                }
            }
        }
    });
}

}  // namespace lgenet
