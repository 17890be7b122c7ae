#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rgtn/autodiff.hpp"
#include "rgtn/detail/tt_chain.hpp"
#include "rgtn/model.hpp"
#include "rgtn/param_store.hpp"
#include "rgtn/random.hpp"
#include "rgtn/tensor_train.hpp"

using namespace rgtn;

namespace {

// Scalar probe <y, R> with a fixed random R, so every output entry matters.
ad::Var probe(const ad::Var& y, std::uint64_t seed) {
    Rng rng(seed);
    const Tensor R = rng.normal_tensor(y.shape());
    std::vector<Index> modes;
    for (Index k = 1; k <= y.shape().order(); ++k) modes.push_back(k);
    if (modes.empty()) return ad::scale(y, R.item());
    return ad::contract_multi(y, ad::constant(R), modes, modes);
}

constexpr double kTol = 1e-5;

}  // namespace

TEST_CASE("backward basics") {
    Rng rng(1);
    ParamStore store;
    ad::Var& W = store.add("W", rng.normal_tensor(Shape{3, 4}));
    const Tensor x = rng.normal_tensor(Shape{4});

    SUBCASE("linear map gradient is an outer product") {
        ad::backward(ad::sum(ad::contract(W, ad::constant(x), 2, 1)));
        for (Index i = 0; i < 3; ++i)
            for (Index j = 0; j < 4; ++j) CHECK(W.grad()(i, j) == doctest::Approx(x[j]));
    }
    SUBCASE("non-scalar root") {
        CHECK_THROWS(ad::backward(ad::contract(W, ad::constant(x), 2, 1)));
    }
    SUBCASE("root independent of the parameter") {
        ad::Var& other = store.add("other", rng.normal_tensor(Shape{2}));
        ad::backward(ad::sum(other));
        CHECK_FALSE(W.has_grad());
        CHECK(frobenius_norm(W.grad()) == 0.0);
        CHECK(W.grad().shape() == W.shape());
    }
    SUBCASE("gradients accumulate through shared subexpressions") {
        const ad::Var y = ad::sum(W);
        ad::backward(ad::add(y, y));
        for (double g : W.grad().values()) CHECK(g == 2.0);
    }
}

TEST_CASE("finite differences: tensor operations") {
    Rng rng(2);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        ParamStore s;
        auto& a = s.add("a", rng.normal_tensor(Shape{2, 3, 4}));
        auto& b = s.add("b", rng.normal_tensor(Shape{4, 3}));
        auto& v = s.add("v", rng.normal_tensor(Shape{3}));
        auto& m = s.add("m", rng.normal_tensor(Shape{2, 3, 4}));

        CHECK(oracle::gradient_check(s, [&] { return probe(ad::contract(a, b, 3, 1), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] {
                  return probe(ad::contract_multi(a, b, {2, 3}, {2, 1}), seed);
              }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] {
                  return probe(ad::contract_multi(a, m, {1, 3}, {1, 3}), seed);
              }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::reshape(a, Shape{6, 4}), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::permute(a, {3, 1, 2}), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::add(a, m), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::subtract(a, m), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::scale(a, -1.7), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::add_along(a, v, 2), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::select(a, 2, 1), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::stack({a, m, a}, 2), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::sum(a), seed); }) <= kTol);
    }
}

TEST_CASE("finite differences: activations") {
    Rng rng(3);
    ParamStore s;
    auto& a = s.add("a", rng.normal_tensor(Shape{3, 5}));
    for (auto act : {Activation::identity, Activation::tanh, Activation::sigmoid, Activation::relu}) {
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::activate(a, act), 5); }) <= kTol);
    }
    CHECK_THROWS(ad::activate(a, Activation::softmax));
}

TEST_CASE("finite differences: coupling tensor and filters") {
    Rng rng(4);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Index tau = 2 + rng.below(4), m = 1 + rng.below(3), n = 1 + rng.below(3);
        const TimeGraph tg = build_time_adjacency(tau, 0.5);
        ParamStore s;
        auto& W_r = s.add("W_r", rng.normal_tensor(Shape{m, m}));
        auto& W_x = s.add("W_x", rng.normal_tensor(Shape{m, n}));
        const Tensor X = rng.normal_tensor(Shape{tau, n});
        CHECK(oracle::gradient_check(s, [&] { return probe(ad::coupling(tg.adjacency, W_r), seed); }) <= kTol);
        CHECK(oracle::gradient_check(s, [&] {
                  const ad::Var xh = ad::contract(ad::constant(X), W_x, 2, 2);
                  return probe(ad::contract_multi(ad::coupling(tg.adjacency, W_r), xh, {3, 4}, {1, 2}), seed);
              }) <= kTol);
        // The differentiable filter reproduces grgtn_filter.
        const ad::Var xh = ad::contract(ad::constant(X), W_x, 2, 2);
        const Tensor H = ad::contract_multi(ad::coupling(tg.adjacency, W_r), xh, {3, 4}, {1, 2}).value();
        CHECK(max_abs_diff(H, grgtn_filter(build_coupling(tg, W_r.value()), X, W_x.value())) <= 1e-12);
    }
}

TEST_CASE("finite differences: TT chain") {
    Rng rng(5);
    const Shape in{3, 2, 4}, out{1, 2, 2};
    const std::vector<Index> ranks{1, 2, 3, 1};
    ParamStore s;
    std::vector<ad::Var> cores;
    for (Index k = 0; k < 3; ++k)
        cores.push_back(s.add("core" + std::to_string(k + 1),
                              rng.normal_tensor(Shape{ranks[k], in[k] * out[k], ranks[k + 1]})));
    const Index B = 3;
    const Tensor x = rng.normal_tensor(Shape{B, 3, 2, 4});
    auto forward = [&] { return detail::tt_chain(cores, ranks, in, out, ad::constant(x), B); };
    CHECK(oracle::gradient_check(s, [&] { return probe(forward(), 9); }) <= kTol);

    std::vector<Tensor> plain;
    for (const auto& c : cores) plain.push_back(c.value());
    CHECK(max_abs_diff(forward().value(), tt_chain_apply(plain, in, out, x)) <= 1e-13);
}

TEST_CASE("losses") {
    const Tensor target = make_tensor(Shape{2, 2}, {1, 2, 3, 4});
    CHECK(ad::mae_loss(ad::constant(target), target).value().item() == 0.0);
    Tensor shifted = target;
    for (double& v : shifted.data()) v += 1.0;
    CHECK(ad::mae_loss(ad::constant(shifted), target).value().item() == 1.0);
    CHECK(ad::mse_loss(ad::constant(shifted), target).value().item() == 1.0);
    CHECK_THROWS(ad::mae_loss(ad::constant(Tensor(Shape{2, 3})), target));
    CHECK_THROWS(ad::mae_loss(ad::constant(Tensor(Shape{0, 2})), Tensor(Shape{0, 2})));

    const Tensor logits(Shape{3, 4});
    CHECK(ad::cross_entropy_loss(ad::constant(logits), {0, 3, 1}).value().item() ==
          doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK_THROWS(ad::cross_entropy_loss(ad::constant(logits), {0, 4, 1}));
    CHECK_THROWS(ad::cross_entropy_loss(ad::constant(logits), {0, 1}));
    CHECK_THROWS(ad::cross_entropy_loss(ad::constant(Tensor(Shape{0, 4})), {}));

    Rng rng(6);
    ParamStore s;
    auto& p = s.add("p", rng.normal_tensor(Shape{5, 3}));
    const Tensor t = rng.normal_tensor(Shape{5, 3});
    CHECK(oracle::gradient_check(s, [&] { return ad::mae_loss(p, t); }) <= kTol);
    CHECK(oracle::gradient_check(s, [&] { return ad::mse_loss(p, t); }) <= kTol);
    CHECK(oracle::gradient_check(s, [&] { return ad::cross_entropy_loss(p, {0, 2, 1, 1, 0}); }) <= kTol);

    // Large logits stay finite.
    const Tensor big = make_tensor(Shape{1, 2}, {1000.0, -1000.0});
    CHECK(std::isfinite(ad::cross_entropy_loss(ad::constant(big), {1}).value().item()));
}

TEST_CASE("finite differences: whole models") {
    ModelSpec spec;
    spec.tau = 4;
    spec.physical = 3;
    spec.features = 2;
    spec.hidden = 3;
    spec.head_out_shape = {1, 3, 1};
    Rng rng(7);
    const Tensor X = rng.normal_tensor(Shape{4, 4, 3, 2});
    const Tensor Y = rng.normal_tensor(Shape{4, 3});
    for (auto v : {ModelVariant::grgtn, ModelVariant::srgtn, ModelVariant::rnn}) {
        spec.variant = v;
        spec.head = v == ModelVariant::rnn ? HeadKind::dense : HeadKind::tt;
        spec.head_out_shape = v == ModelVariant::rnn ? std::vector<Index>{3} : std::vector<Index>{1, 3, 1};
        Model model(spec, 11);
        // Nonzero biases so their gradients are exercised away from zero.
        for (auto& p : model.params().entries())
            if (p.name.find("b") != std::string::npos && p.var.shape().order() == 1)
                p.var.mutable_value() = rng.normal_tensor(p.var.shape(), 0.1);
        CHECK(oracle::gradient_check(model.params(),
                                     [&] { return ad::mae_loss(model.forward(X), Y); }) <= kTol);
    }
}
