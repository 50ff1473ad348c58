#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lgenet/rng.hpp"
#include "lgenet/tape.hpp"

namespace lgenet {

// Builds a scalar-valued graph over the given leaves. Called repeatedly by
// the checker, so it must be pure (no running-stat updates, no RNG).
using GraphFn = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    size_t worst_input = 0;
    int64_t worst_coord = -1;
    double ad = 0.0;  // tape gradient at the worst coordinate
    double fd = 0.0;  // central difference at the worst coordinate

    std::string describe() const {
        return "max rel err " + std::to_string(max_rel_err) + " at input " +
               std::to_string(worst_input) + " coord " + std::to_string(worst_coord) +
               " (tape " + std::to_string(ad) + ", central diff " + std::to_string(fd) + ")";
    }
};

namespace detail {
inline double forward_value(const GraphFn& f, const std::vector<Tensor<double>>& inputs) {
    Tape<double> t;
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const auto& x : inputs) leaves.push_back(t.leaf(x, false));
    return t.val(f(t, leaves)).v[0];
}
}  // namespace detail

// Compares tape gradients against central differences
// (f(x+eps) - f(x-eps)) / (2 eps), coordinate by coordinate. 64-bit only.
// max_coords_per_input > 0 checks a seeded random coordinate subset instead
// of every coordinate (used for whole-network checks).
inline GradCheckResult finite_difference_check(const GraphFn& f,
                                               std::vector<Tensor<double>> inputs,
                                               double eps = 1e-5,
                                               int64_t max_coords_per_input = 0,
                                               uint64_t coord_seed = 0) {
    // Reference gradients from one taped pass.
    Tape<double> tape;
    std::vector<Var> leaves;
    for (const auto& x : inputs) leaves.push_back(tape.leaf(x, true));
    const Var loss = f(tape, leaves);
    check(tape.val(loss).numel() == 1, "gradcheck: graph must produce a scalar");
    tape.backward(loss);

    GradCheckResult res;
    for (size_t i = 0; i < inputs.size(); ++i) {
        const int64_t n = inputs[i].numel();
        std::vector<int64_t> coords;
        if (max_coords_per_input > 0 && n > max_coords_per_input) {
            Rng rng(split_seed(coord_seed, 0x6fd7, i));
            std::vector<int64_t> all;
            rng.sample_without_replacement<int64_t>(n, max_coords_per_input, all);
            coords = std::move(all);
        } else {
            coords.resize(static_cast<size_t>(n));
            for (int64_t c = 0; c < n; ++c) coords[static_cast<size_t>(c)] = c;
        }
        const Tensor<double>& g =
            tape.has_grad(leaves[i]) ? tape.grad(leaves[i]) : Tensor<double>::zeros(inputs[i].shape);
        for (int64_t c : coords) {
            const double x0 = inputs[i].v[static_cast<size_t>(c)];
            const double h = eps * std::max(1.0, std::abs(x0));
            inputs[i].v[static_cast<size_t>(c)] = x0 + h;
            const double fp = detail::forward_value(f, inputs);
            inputs[i].v[static_cast<size_t>(c)] = x0 - h;
            const double fm = detail::forward_value(f, inputs);
            inputs[i].v[static_cast<size_t>(c)] = x0;
            const double fd = (fp - fm) / (2.0 * h);
            const double ad = g.numel() ? g.v[static_cast<size_t>(c)] : 0.0;
            const double rel =
                std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 0.1});
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_input = i;
                res.worst_coord = c;
                res.ad = ad;
                res.fd = fd;
            }
        }
    }
    return res;
}

inline void require_gradients_match(const GraphFn& f, std::vector<Tensor<double>> inputs,
                                    double tol = 1e-5, double eps = 1e-5) {
    const GradCheckResult r = finite_difference_check(f, std::move(inputs), eps);
    check(r.max_rel_err < tol, "gradient check failed: " + r.describe());
}

}  // namespace lgenet
