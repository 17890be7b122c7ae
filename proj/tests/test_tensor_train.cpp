#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rgtn/random.hpp"
#include "rgtn/tensor_train.hpp"

using namespace rgtn;

namespace {

Tensor outer3(const Tensor& u, const Tensor& v, const Tensor& w) {
    Tensor t(Shape{u.size(), v.size(), w.size()});
    for (Index k = 0; k < w.size(); ++k)
        for (Index j = 0; j < v.size(); ++j)
            for (Index i = 0; i < u.size(); ++i) t.at({i, j, k}) = u[i] * v[j] * w[k];
    return t;
}

// Left-to-right chain product by explicit loops.
Tensor reconstruct_oracle(const TTNetwork& tt) {
    std::vector<Index> dims = tt.mode_sizes();
    const Shape shape(dims);
    Tensor out(shape);
    for (Index flat = 0; flat < shape.size(); ++flat) {
        const auto idx = oracle::unravel(flat, shape);
        std::vector<double> row{1.0};
        for (Index k = 0; k < tt.order(); ++k) {
            const Tensor& g = tt.cores[k];
            std::vector<double> next(g.shape()[2], 0.0);
            for (Index b = 0; b < g.shape()[2]; ++b)
                for (Index a = 0; a < g.shape()[0]; ++a) next[b] += row[a] * g.at({a, idx[k], b});
            row = next;
        }
        out[flat] = row[0];
    }
    return out;
}

void check_rank_validity(const TTNetwork& tt) {
    const auto r = tt.ranks();
    CHECK(r.front() == 1);
    CHECK(r.back() == 1);
    CHECK_NOTHROW(tt.validate());
}

}  // namespace

TEST_CASE("tt_svd of a rank-1 tensor") {
    Rng rng(1);
    const Tensor x = outer3(rng.normal_tensor(Shape{3}), rng.normal_tensor(Shape{4}),
                            rng.normal_tensor(Shape{5}));
    const TTNetwork tt = tt_svd(x);
    CHECK(tt.ranks() == std::vector<Index>{1, 1, 1, 1});
    CHECK(relative_error(tt_reconstruct(tt), x) <= 1e-12);
}

TEST_CASE("tt_svd at full rank reconstructs") {
    Rng rng(2);
    const Tensor x = rng.normal_tensor(Shape{3, 4, 5, 2});
    const TTNetwork tt = tt_svd(x);
    check_rank_validity(tt);
    CHECK(relative_error(tt_reconstruct(tt), x) <= 1e-10);
    for (int rep = 0; rep < 10; ++rep) {
        const Tensor y = rng.normal_tensor(Shape{2 + rng.below(3), 2 + rng.below(3),
                                                 2 + rng.below(3), 2 + rng.below(3)});
        CHECK(relative_error(tt_reconstruct(tt_svd(y)), y) <= 1e-10);
    }
}

TEST_CASE("tt_svd of a zero tensor") {
    const Tensor z(Shape{2, 3, 4});
    const TTNetwork tt = tt_svd(z);
    check_rank_validity(tt);
    for (const auto& g : tt.cores) CHECK(frobenius_norm(g) == 0.0);
    CHECK(frobenius_norm(tt_reconstruct(tt)) == 0.0);
}

TEST_CASE("tt_svd errors and edge cases") {
    Tensor bad(Shape{2, 2});
    bad[1] = std::nan("");
    CHECK_THROWS(tt_svd(bad));
    CHECK_THROWS(tt_svd(Tensor::scalar(1.0)));

    Rng rng(4);
    const Tensor v = rng.normal_tensor(Shape{5});
    const TTNetwork one = tt_svd(v);
    CHECK(one.order() == 1);
    CHECK(relative_error(tt_reconstruct(one), v) <= 1e-14);
}

TEST_CASE("tt_svd respects the tolerance") {
    Rng rng(3);
    const Tensor x = rng.normal_tensor(Shape{4, 4, 4, 4});
    for (double tol : {0.5, 0.3, 0.1, 0.01}) {
        const TTNetwork tt = tt_svd(x, {tol, std::nullopt});
        check_rank_validity(tt);
        CHECK(relative_error(tt_reconstruct(tt), x) <= tol);
    }
}

TEST_CASE("compression monotonicity") {
    Rng rng(7);
    // Decaying spectrum so truncation actually changes something.
    Tensor x(Shape{4, 5, 4, 3});
    for (int term = 0; term < 6; ++term) {
        const double weight = std::pow(0.4, term);
        Tensor a = rng.normal_tensor(Shape{4}), b = rng.normal_tensor(Shape{5});
        Tensor c = rng.normal_tensor(Shape{4}), d = rng.normal_tensor(Shape{3});
        for (Index l = 0; l < 3; ++l)
            for (Index k = 0; k < 4; ++k)
                for (Index j = 0; j < 5; ++j)
                    for (Index i = 0; i < 4; ++i)
                        x.at({i, j, k, l}) += weight * a[i] * b[j] * c[k] * d[l];
    }
    double previous = INFINITY;
    for (double tol : {0.9, 0.5, 0.2, 0.05, 0.01, 1e-4, 1e-8}) {
        const double err = relative_error(tt_reconstruct(tt_svd(x, {tol, std::nullopt})), x);
        CHECK(err <= previous + 1e-15);
        previous = err;
    }
    previous = -1.0;
    for (Index cap = 6; cap >= 1; --cap) {
        const TTNetwork tt = tt_svd(x, {1e-12, cap});
        for (Index r : tt.ranks()) CHECK(r <= cap);
        const double err = relative_error(tt_reconstruct(tt), x);
        CHECK(err >= previous - 1e-15);
        previous = err;
    }
}

TEST_CASE("tt_reconstruct") {
    Rng rng(5);
    SUBCASE("single core") {
        TTNetwork tt{{make_tensor(Shape{1, 3, 1}, {1, 2, 3})}};
        const Tensor x = tt_reconstruct(tt);
        CHECK(x.shape() == Shape{3});
        CHECK(x.values() == std::vector<double>{1, 2, 3});
    }
    SUBCASE("all-ones cores with unit modes") {
        for (Index n = 2; n <= 5; ++n) {
            TTNetwork tt;
            for (Index k = 0; k < n; ++k) {
                const Index r0 = k == 0 ? 1 : 2, r1 = k + 1 == n ? 1 : 2;
                tt.cores.push_back(Tensor::filled(Shape{r0, 1, r1}, 1.0));
            }
            const Tensor x = tt_reconstruct(tt);
            CHECK(x.size() == 1);
            CHECK(x[0] == std::pow(2.0, static_cast<double>(n - 1)));
            CHECK(x[0] == reconstruct_oracle(tt)[0]);
        }
    }
    SUBCASE("random cores against the loop oracle") {
        TTNetwork tt{{rng.normal_tensor(Shape{1, 3, 2}), rng.normal_tensor(Shape{2, 4, 3}),
                      rng.normal_tensor(Shape{3, 2, 1})}};
        CHECK(max_abs_diff(tt_reconstruct(tt), reconstruct_oracle(tt)) <= 1e-12);
    }
    SUBCASE("rank mismatch") {
        TTNetwork tt{{rng.normal_tensor(Shape{1, 3, 2}), rng.normal_tensor(Shape{3, 4, 1})}};
        CHECK_THROWS_AS(tt_reconstruct(tt), ShapeError);
        TTNetwork open{{rng.normal_tensor(Shape{2, 3, 1})}};
        CHECK_THROWS_AS(tt_reconstruct(open), ShapeError);
    }
}

TEST_CASE("parameter counts") {
    CHECK(tt_param_count({4, 4, 4, 4}, {1, 2, 2, 2, 1}) == 48);
    CHECK(dense_param_count(Shape{4, 4, 4, 4}) == 256);
    CHECK(tt_param_count({3, 5, 7}, {1, 1, 1, 1}) == 15);

    Rng rng(6);
    const TTNetwork tt = tt_svd(rng.normal_tensor(Shape{3, 2, 4}));
    Index sum = 0;
    for (const auto& g : tt.cores) sum += g.size();
    CHECK(tt_param_count(tt) == sum);

    // Interior ranks below the extents compress for N >= 3.
    for (Index n = 3; n <= 5; ++n)
        for (Index ext = 2; ext <= 4; ++ext)
            for (Index r = 1; r < ext; ++r) {
                std::vector<Index> dims(n, ext), ranks(n + 1, r);
                ranks.front() = ranks.back() = 1;
                CHECK(tt_param_count(dims, ranks) < dense_param_count(Shape(dims)));
            }
}

TEST_CASE("tt_layer_forward matches the dense oracle") {
    Rng rng(8);
    for (int rep = 0; rep < 25; ++rep) {
        const Index n = 1 + rng.below(3);
        std::vector<Index> in_dims, out_dims, ranks{1};
        for (Index k = 0; k < n; ++k) {
            in_dims.push_back(1 + rng.below(4));
            out_dims.push_back(1 + rng.below(3));
            ranks.push_back(k + 1 == n ? 1 : 1 + rng.below(3));
        }
        TTLinearLayer layer;
        layer.in_shape = Shape(in_dims);
        layer.out_shape = Shape(out_dims);
        for (Index k = 0; k < n; ++k)
            layer.tt.cores.push_back(
                rng.normal_tensor(Shape{ranks[k], in_dims[k] * out_dims[k], ranks[k + 1]}));
        if (rep % 2) layer.bias = rng.normal_tensor(layer.out_shape);

        const Tensor x = rng.normal_tensor(layer.in_shape);
        const Tensor W = oracle::tt_dense_weight(layer.tt.cores, layer.in_shape, layer.out_shape);
        CHECK(max_abs_diff(layer.dense_weight(), W) <= 1e-12);
        Tensor want(layer.out_shape);
        for (Index o = 0; o < want.size(); ++o) {
            double s = layer.bias ? (*layer.bias)[o] : 0.0;
            for (Index i = 0; i < x.size(); ++i) s += W(i, o) * x[i];
            want[o] = s;
        }
        const Tensor got = tt_layer_forward(layer, x);
        REQUIRE(got.shape() == want.shape());
        CHECK(relative_error(got, want) <= 1e-10);
    }
}

TEST_CASE("tt layer identity, zero and shape errors") {
    TTLinearLayer layer;
    layer.in_shape = Shape{2, 3};
    layer.out_shape = Shape{2, 3};
    for (Index k = 0; k < 2; ++k) {
        const Index d = layer.in_shape[k];
        Tensor core(Shape{1, d * d, 1});
        for (Index i = 0; i < d; ++i) core[i + d * i] = 1.0;
        layer.tt.cores.push_back(core);
    }
    Rng rng(9);
    const Tensor x = rng.normal_tensor(Shape{2, 3});
    CHECK(tt_layer_forward(layer, x).values() == x.values());
    layer.bias = Tensor(Shape{2, 3});
    CHECK(frobenius_norm(tt_layer_forward(layer, Tensor(Shape{2, 3}))) == 0.0);
    CHECK_THROWS_AS(tt_layer_forward(layer, rng.normal_tensor(Shape{3, 2})), ShapeError);
}

TEST_CASE("batched chain equals per-sample forward") {
    Rng rng(10);
    const Shape in{3, 2, 4}, out{1, 2, 1};
    std::vector<Tensor> cores{rng.normal_tensor(Shape{1, 3, 2}), rng.normal_tensor(Shape{2, 4, 2}),
                              rng.normal_tensor(Shape{2, 4, 1})};
    const Index B = 5;
    const Tensor xb = rng.normal_tensor(Shape{B, 3, 2, 4});
    const Tensor yb = tt_chain_apply(cores, in, out, xb);
    REQUIRE(yb.shape() == Shape{B, 1, 2, 1});
    const Tensor W = oracle::tt_dense_weight(cores, in, out);
    for (Index b = 0; b < B; ++b)
        for (Index o = 0; o < out.size(); ++o) {
            double s = 0.0;
            for (Index i = 0; i < in.size(); ++i) s += W(i, o) * xb[b + B * i];
            CHECK(std::abs(yb[b + B * o] - s) <= 1e-12);
        }
}
