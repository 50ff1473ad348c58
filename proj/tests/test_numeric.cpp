#include <cmath>

#include "doctest.h"
#include "lgenet/gradcheck.hpp"
#include "lgenet/kpconv.hpp"
#include "lgenet/loss.hpp"
#include "lgenet/ops.hpp"
#include "lgenet/optim.hpp"
#include "lgenet/rng.hpp"

using namespace lgenet;

namespace {

Tensor<double> random_tensor(std::vector<int64_t> shape, Rng& rng, double lo = -1.0,
                             double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& x : t.v) x = rng.uniform(lo, hi);
    return t;
}

// Scalar head used to reduce any matrix output to a loss for gradient checks:
// weighted sum with fixed pseudo-random coefficients.
Var reduce_to_scalar(Tape<double>& t, Var x, uint64_t salt = 1) {
    // copy shape up front: references into the tape go stale as nodes append
    const std::vector<int64_t> shape = t.val(x).shape;
    const int64_t N = shape[0], C = shape[1];
    Rng rng(split_seed(0xabcdef, salt));
    Tensor<double> w(shape);
    for (auto& e : w.v) e = rng.uniform(-1.0, 1.0);
    Var wv = t.leaf(std::move(w), false);
    Var prod = mul(t, x, wv);
    Var ones_r = t.leaf(Tensor<double>({C, 1}, std::vector<double>(static_cast<size_t>(C), 1.0)));
    Var ones_l = t.leaf(Tensor<double>({1, N}, std::vector<double>(static_cast<size_t>(N), 1.0)));
    return matmul(t, ones_l, matmul(t, prod, ones_r));
}

}  // namespace

TEST_CASE("softmax rows: forced values and shift invariance") {
    Tape<double> t;
    Var x = t.leaf(Tensor<double>({1, 3}, {0.0, 0.0, 0.0}));
    Var y = softmax_rows(t, x);
    for (int j = 0; j < 3; ++j) CHECK(t.val(y).v[j] == doctest::Approx(1.0 / 3).epsilon(1e-12));

    Var x2 = t.leaf(Tensor<double>({1, 2}, {0.0, std::log(3.0)}));
    Var y2 = softmax_rows(t, x2);
    CHECK(t.val(y2).v[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(t.val(y2).v[1] == doctest::Approx(0.75).epsilon(1e-12));

    for (double c : {-7.5, 0.0, 3.25, 1e6}) {
        Var a = t.leaf(Tensor<double>({1, 3}, {c, c + 1, c + 2}));
        Var b = t.leaf(Tensor<double>({1, 3}, {0.0, 1.0, 2.0}));
        auto ya = t.val(softmax_rows(t, a));
        auto yb = t.val(softmax_rows(t, b));
        for (int j = 0; j < 3; ++j) CHECK(ya.v[j] == doctest::Approx(yb.v[j]).epsilon(1e-12));
    }
}

TEST_CASE("softmax rows: rows sum to one on random input; non-2D rejected") {
    Rng rng(11);
    Tape<double> t;
    Var x = t.leaf(random_tensor({17, 9}, rng, -30.0, 30.0));
    const auto& y = t.val(softmax_rows(t, x));
    for (int64_t i = 0; i < 17; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < 9; ++j) {
            CHECK(y.at(i, j) >= 0.0);
            s += y.at(i, j);
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
    Var bad = t.leaf(Tensor<double>({4}));
    CHECK_THROWS_AS(softmax_rows(t, bad), Error);
}

TEST_CASE("class weights: hand values, normalization, scale invariance") {
    auto w1 = compute_class_weights({5, 5, 5});
    for (double w : w1) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-14));

    auto w2 = compute_class_weights({900, 100});
    CHECK(w2[0] == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(w2[1] == doctest::Approx(0.9).epsilon(1e-14));

    auto w3 = compute_class_weights({1, 1, 2});
    CHECK(w3[0] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(w3[1] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(w3[2] == doctest::Approx(0.2).epsilon(1e-14));

    Rng rng(3);
    for (int it = 0; it < 20; ++it) {
        std::vector<int64_t> counts;
        const int c = 2 + static_cast<int>(rng.uniform_index(6));
        for (int i = 0; i < c; ++i)
            counts.push_back(1 + static_cast<int64_t>(rng.uniform_index(10000)));
        auto w = compute_class_weights(counts);
        double s = 0.0;
        for (double x : w) s += x;
        CHECK(std::abs(s - 1.0) < 1e-12);
        // uniform count scaling leaves the weights unchanged
        std::vector<int64_t> scaled;
        for (int64_t x : counts) scaled.push_back(7 * x);
        auto ws = compute_class_weights(scaled);
        for (size_t i = 0; i < w.size(); ++i)
            CHECK(w[i] == doctest::Approx(ws[i]).epsilon(1e-12));
    }
    CHECK_THROWS_WITH_AS(compute_class_weights({3, 0, 1}),
                         doctest::Contains("zero points"), Error);
}

TEST_CASE("weighted cross entropy: hand values") {
    // perfect one-hot prediction -> clamped log(1) = 0
    {
        Tape<double> t;
        Var p = t.leaf(Tensor<double>({2, 2}, {1.0, 0.0, 0.0, 1.0}));
        Var l = weighted_cross_entropy(t, p, {0, 1}, {0.5, 0.5});
        CHECK(t.val(l).v[0] == doctest::Approx(0.0).epsilon(1e-12));
    }
    // two points, uniform probabilities, weights (0.5, 0.5)
    {
        Tape<double> t;
        Var p = t.leaf(Tensor<double>({2, 2}, {0.5, 0.5, 0.5, 0.5}));
        Var l = weighted_cross_entropy(t, p, {0, 1}, {0.5, 0.5});
        CHECK(t.val(l).v[0] == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    }
    // doubling the class weights doubles the loss
    {
        Rng rng(17);
        Tape<double> t;
        Tensor<double> raw = random_tensor({5, 3}, rng, 0.05, 1.0);
        for (int64_t i = 0; i < 5; ++i) {
            double s = 0;
            for (int64_t j = 0; j < 3; ++j) s += raw.at(i, j);
            for (int64_t j = 0; j < 3; ++j) raw.at(i, j) /= s;
        }
        Var p = t.leaf(raw);
        std::vector<int32_t> labels = {0, 2, 1, 1, 0};
        Var l1 = weighted_cross_entropy(t, p, labels, {0.2, 0.3, 0.5});
        Var l2 = weighted_cross_entropy(t, p, labels, {0.4, 0.6, 1.0});
        CHECK(t.val(l2).v[0] == doctest::Approx(2.0 * t.val(l1).v[0]).epsilon(1e-12));
    }
    // unlabeled points are excluded
    {
        Tape<double> t;
        Var p = t.leaf(Tensor<double>({2, 2}, {0.5, 0.5, 0.9, 0.1}));
        Var l = weighted_cross_entropy(t, p, {0, kUnlabeled}, {1.0, 1.0});
        CHECK(t.val(l).v[0] == doctest::Approx(-std::log(0.5)).epsilon(1e-12));
    }
}

TEST_CASE("sgd: identity, hand step, schedule, NaN abort") {
    ParameterStore<double> store;
    auto& p = store.add("w", Tensor<double>({1}, {1.0}));

    // zero gradient, zero momentum -> unchanged
    sgd_step(store, 0.1, 0.9);
    CHECK(p.value.v[0] == 1.0);

    // w=1, grad=2, lr=0.1, momentum=0 -> w=0.8
    p.grad.v[0] = 2.0;
    sgd_step(store, 0.1, 0.0);
    CHECK(p.value.v[0] == doctest::Approx(0.8).epsilon(1e-15));

    // momentum accumulates classically
    p.value.v[0] = 0.0;
    p.momentum.v[0] = 0.0;
    p.grad.v[0] = 1.0;
    sgd_step(store, 1.0, 0.5);
    CHECK(p.value.v[0] == doctest::Approx(-1.0));
    sgd_step(store, 1.0, 0.5);  // buf = 0.5*1 + 1 = 1.5
    CHECK(p.value.v[0] == doctest::Approx(-2.5));

    p.grad.v[0] = std::nan("");
    CHECK_THROWS_WITH_AS(sgd_step(store, 0.1, 0.9), doctest::Contains("w"), Error);

    CHECK(lr_at_epoch(0.001, 0.9, 5, 0) == doctest::Approx(0.001));
    CHECK(lr_at_epoch(0.001, 0.9, 5, 4) == doctest::Approx(0.001));
    CHECK(lr_at_epoch(0.001, 0.9, 5, 5) == doctest::Approx(0.0009));
    CHECK(lr_at_epoch(0.001, 0.9, 5, 10) == doctest::Approx(0.00081));
}

TEST_CASE("zero_grad then backward of a detached constant leaves grads zero") {
    ParameterStore<double> store;
    auto& p = store.add("w", Tensor<double>({2, 2}, {1, 2, 3, 4}));
    p.grad.fill(7.0);
    store.zero_grad();
    for (double g : p.grad.v) CHECK(g == 0.0);

    Tape<double> t;
    Var c = t.leaf(Tensor<double>({1}, {5.0}), false);  // detached constant
    t.backward(c);
    for (double g : p.grad.v) CHECK(g == 0.0);
}

TEST_CASE("gather: shadow row contributes zero forward and backward") {
    Tape<double> t;
    ParameterStore<double> store;
    auto& f = store.add("f", Tensor<double>({3, 2}, {1, 2, 3, 4, 5, 6}));
    Var fv = t.param(f);
    // indices: one real row, the shadow row (== 3), another real row
    Var g = gather_rows(t, fv, {1, 3, 0});
    CHECK(t.val(g).at(0, 0) == 3.0);
    CHECK(t.val(g).at(1, 0) == 0.0);
    CHECK(t.val(g).at(1, 1) == 0.0);
    CHECK(t.val(g).at(2, 1) == 2.0);
    Var loss = reduce_to_scalar(t, g);
    t.backward(loss);
    // row 2 of f was never gathered: zero grad
    CHECK(f.grad.at(2, 0) == 0.0);
    CHECK(f.grad.at(2, 1) == 0.0);
    // gathered rows received gradient
    CHECK(f.grad.at(0, 0) != 0.0);
}

TEST_CASE("gradient soundness: elementwise, matmul, concat, leaky, softmax") {
    Rng rng(23);
    for (uint64_t seed = 0; seed < 3; ++seed) {
        Rng srng(split_seed(100, seed));
        const int64_t n = 2 + static_cast<int64_t>(srng.uniform_index(6));
        const int64_t c = 1 + static_cast<int64_t>(srng.uniform_index(7));

        // add / sub / mul
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, add(t, in[0], in[1]));
            },
            {random_tensor({n, c}, rng), random_tensor({n, c}, rng)});
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, sub(t, in[0], in[1]));
            },
            {random_tensor({n, c}, rng), random_tensor({n, c}, rng)});
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, mul(t, in[0], in[1]));
            },
            {random_tensor({n, c}, rng), random_tensor({n, c}, rng)});

        // matmul, all transpose combinations
        const int64_t m = 2 + static_cast<int64_t>(srng.uniform_index(5));
        for (bool ta : {false, true})
            for (bool tb : {false, true}) {
                std::vector<int64_t> sa = ta ? std::vector<int64_t>{c, n}
                                             : std::vector<int64_t>{n, c};
                std::vector<int64_t> sb = tb ? std::vector<int64_t>{m, c}
                                             : std::vector<int64_t>{c, m};
                require_gradients_match(
                    [ta, tb](Tape<double>& t, const std::vector<Var>& in) {
                        return reduce_to_scalar(t, matmul(t, in[0], in[1], ta, tb));
                    },
                    {random_tensor(sa, rng), random_tensor(sb, rng)});
            }

        // concat along the channel axis
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, concat_cols(t, in[0], in[1]));
            },
            {random_tensor({n, c}, rng), random_tensor({n, c + 1}, rng)});

        // leaky rectifier, slope 0.1 (inputs kept away from the kink)
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, leaky_relu(t, in[0], 0.1));
            },
            {random_tensor({n, c}, rng, 0.05, 1.0)},
            1e-5, 1e-6);
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, leaky_relu(t, in[0], 0.1));
            },
            {random_tensor({n, c}, rng, -1.0, -0.05)},
            1e-5, 1e-6);

        // softmax
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, softmax_rows(t, in[0]));
            },
            {random_tensor({n, c}, rng, -2.0, 2.0)});

        // scale by learnable scalar
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, scale(t, in[0], in[1]));
            },
            {random_tensor({n, c}, rng), random_tensor({1}, rng)});
    }
}

TEST_CASE("gradient soundness: gather, scatter mean, row scatter, edge matvec") {
    Rng rng(31);
    for (uint64_t seed = 0; seed < 3; ++seed) {
        Rng srng(split_seed(200, seed));
        const int64_t s = 3 + static_cast<int64_t>(srng.uniform_index(6));
        const int64_t c = 1 + static_cast<int64_t>(srng.uniform_index(6));
        std::vector<int32_t> idx;
        for (int i = 0; i < 9; ++i)
            idx.push_back(static_cast<int32_t>(srng.uniform_index(static_cast<uint64_t>(s) + 1)));
        require_gradients_match(
            [idx](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, gather_rows(t, in[0], idx));
            },
            {random_tensor({s, c}, rng)});

        std::vector<int32_t> groups;
        const int64_t ng = 3;
        for (int64_t i = 0; i < s; ++i)
            groups.push_back(static_cast<int32_t>(srng.uniform_index(2)));  // group 2 stays empty
        require_gradients_match(
            [groups, ng](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, scatter_mean_rows(t, in[0], groups, ng));
            },
            {random_tensor({s, c}, rng)});

        std::vector<int32_t> targets = {1, 0, 2};
        require_gradients_match(
            [targets](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, row_scatter_add(t, in[0], in[1], targets));
            },
            {random_tensor({4, c}, rng), random_tensor({3, c}, rng)});

        const int64_t e = 5;
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, edge_matvec(t, in[0], in[1]));
            },
            {random_tensor({e, c * c}, rng), random_tensor({e, c}, rng)});
    }
}

TEST_CASE("gradient soundness: batch norm, both modes") {
    Rng rng(41);
    for (uint64_t seed = 0; seed < 3; ++seed) {
        const int64_t n = 5, c = 4;
        require_gradients_match(
            [](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t,
                                        batch_norm_train(t, in[0], in[1], in[2], 1e-6));
            },
            {random_tensor({n, c}, rng), random_tensor({c}, rng, 0.5, 1.5),
             random_tensor({c}, rng)});
        Tensor<double> rm = random_tensor({c}, rng);
        Tensor<double> rv = random_tensor({c}, rng, 0.5, 2.0);
        require_gradients_match(
            [rm, rv](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(
                    t, batch_norm_eval(t, in[0], in[1], in[2], rm, rv, 1e-6));
            },
            {random_tensor({n, c}, rng), random_tensor({c}, rng, 0.5, 1.5),
             random_tensor({c}, rng)});
    }
}

TEST_CASE("gradient soundness: weighted cross entropy, both forms") {
    Rng rng(53);
    for (uint64_t seed = 0; seed < 3; ++seed) {
        const int64_t n = 6, c = 4;
        std::vector<int32_t> labels;
        Rng srng(split_seed(300, seed));
        for (int64_t i = 0; i < n; ++i)
            labels.push_back(static_cast<int32_t>(srng.uniform_index(c)));
        labels[2] = kUnlabeled;
        std::vector<double> weights = {0.1, 0.2, 0.3, 0.4};
        for (LossForm form : {LossForm::kCategorical, LossForm::kLiteralEq10}) {
            require_gradients_match(
                [labels, weights, form](Tape<double>& t, const std::vector<Var>& in) {
                    Var p = softmax_rows(t, in[0]);
                    return weighted_cross_entropy(t, p, labels, weights, form);
                },
                {random_tensor({n, c}, rng, -1.5, 1.5)});
        }
    }
}

TEST_CASE("finite differences: linear map is exact, constant has zero gradient") {
    Rng rng(61);
    // linear map: tape and central differences agree to eps^2 noise
    auto res = finite_difference_check(
        [](Tape<double>& t, const std::vector<Var>& in) {
            return reduce_to_scalar(t, matmul(t, in[0], in[1]));
        },
        {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
    CHECK(res.max_rel_err < 1e-8);

    // constant function: zero gradient both ways
    auto res2 = finite_difference_check(
        [](Tape<double>& t, const std::vector<Var>& in) {
            (void)in;
            return t.leaf(Tensor<double>({1}, {3.0}), true);
        },
        {random_tensor({2, 2}, rng)});
    CHECK(res2.max_rel_err < 1e-10);
}

TEST_CASE("kpconv: random 5-point instance gradient check") {
    Rng rng(71);
    for (uint64_t seed = 0; seed < 3; ++seed) {
        Rng g(split_seed(400, seed));
        const int64_t nq = 3, ns = 5, K = 4, cin = 3, cout = 2;
        std::vector<double> queries, supports;
        for (int64_t i = 0; i < nq * 3; ++i) queries.push_back(g.uniform(-1, 1));
        for (int64_t i = 0; i < ns * 3; ++i) supports.push_back(g.uniform(-1, 1));
        NeighborList nl;
        nl.n_query = nq;
        nl.width = 4;
        nl.shadow = static_cast<int32_t>(ns);
        for (int64_t q = 0; q < nq; ++q)
            for (int64_t h = 0; h < nl.width; ++h)
                nl.idx.push_back(h < 3 ? static_cast<int32_t>(g.uniform_index(ns))
                                       : nl.shadow);
        std::vector<double> kp;
        for (int64_t i = 0; i < K * 3; ++i) kp.push_back(g.uniform(-0.8, 0.8));
        const KpConvGeometry geom =
            build_kpconv_geometry(queries, supports, nl, kp, 3, 1.7);
        auto res = finite_difference_check(
            [&geom](Tape<double>& t, const std::vector<Var>& in) {
                return reduce_to_scalar(t, kpconv(t, in[0], in[1], geom));
            },
            {random_tensor({ns, cin}, rng), random_tensor({K, cin, cout}, rng)});
        CHECK(res.max_rel_err < 1e-5);
    }
}

TEST_CASE("tape rejects non-finite forward values") {
    Tape<double> t;
    Var a = t.leaf(Tensor<double>({1, 2}, {1e308, 1e308}));
    Var b = t.leaf(Tensor<double>({1, 2}, {1e308, 1e308}));
    CHECK_THROWS_AS(add(t, a, b), Error);
}
