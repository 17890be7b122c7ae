#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rgtn/random.hpp"
#include "rgtn/train.hpp"

using namespace rgtn;

namespace {

// Regression dataset whose target is an exact linear function of the last
// input step, so a linear model can reach zero loss.
WindowedDataset linear_dataset(Index samples, std::uint64_t seed) {
    Rng rng(seed);
    WindowedDataset ds;
    ds.task = Task::regression;
    ds.tau = 2;
    ds.inputs = rng.normal_tensor(Shape{samples, 2, 2, 3});
    ds.targets = Tensor(Shape{samples, 2});
    const Tensor W = rng.normal_tensor(Shape{3});
    for (Index s = 0; s < samples; ++s)
        for (Index p = 0; p < 2; ++p) {
            double y = 0.0;
            for (Index f = 0; f < 3; ++f) y += W[f] * ds.inputs.at({s, 1, p, f});
            ds.targets.at({s, p}) = y;
        }
    for (Index s = 0; s < samples; ++s) {
        ds.window_end_times.push_back(static_cast<double>(s));
        ds.target_times.push_back(static_cast<double>(s + 1));
    }
    split_chronological(ds);
    return ds;
}

ModelSpec linear_spec() {
    ModelSpec spec;
    spec.variant = ModelVariant::srgtn;
    spec.tau = 2;
    spec.physical = 2;
    spec.features = 3;
    spec.hidden = 3;
    spec.activation = Activation::identity;
    spec.head = HeadKind::tt;
    spec.head_out_shape = {1, 2, 1};
    spec.head_ranks = {2, 2};
    return spec;
}

}  // namespace

TEST_CASE("adam_step") {
    TrainConfig cfg;
    SUBCASE("zero gradients leave parameters unchanged") {
        ParamStore s;
        auto& p = s.add("p", make_tensor(Shape{3}, {1, 2, 3}));
        ad::backward(ad::scale(ad::sum(p), 0.0));
        adam_step(s, cfg);
        CHECK(p.value().values() == std::vector<double>{1, 2, 3});
    }
    SUBCASE("learning rate zero leaves parameters unchanged") {
        ParamStore s;
        auto& p = s.add("p", make_tensor(Shape{2}, {1, -1}));
        cfg.learning_rate = 0.0;
        ad::backward(ad::sum(p));
        adam_step(s, cfg);
        CHECK(p.value().values() == std::vector<double>{1, -1});
    }
    SUBCASE("constant gradient matches a hand-rolled iteration") {
        ParamStore s;
        auto& p = s.add("p", Tensor::scalar(0.3));
        const double g = 0.7;
        double theta = 0.3, m = 0.0, v = 0.0;
        for (int k = 1; k <= 25; ++k) {
            s.zero_grad();
            ad::backward(ad::scale(p, g));
            adam_step(s, cfg);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            const double mh = m / (1.0 - std::pow(0.9, k));
            const double vh = v / (1.0 - std::pow(0.999, k));
            theta -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
            CHECK(p.value().item() == doctest::Approx(theta).epsilon(1e-15));
        }
        CHECK(s.entries()[0].state.steps == 25);
    }
    SUBCASE("parameters without a gradient are untouched") {
        ParamStore s;
        auto& used = s.add("used", Tensor::scalar(1.0));
        auto& idle = s.add("idle", Tensor::scalar(2.0));
        ad::backward(ad::scale(used, 3.0));
        adam_step(s, cfg);
        CHECK(used.value().item() != 1.0);
        CHECK(idle.value().item() == 2.0);
        CHECK(s.entries()[1].state.steps == 0);
    }
    SUBCASE("non-finite gradient names the parameter") {
        ParamStore s;
        auto& p = s.add("filter.W_r", Tensor::scalar(1.0));
        ad::backward(ad::scale(p, std::nan("")));
        CHECK_THROWS_WITH(adam_step(s, cfg), doctest::Contains("filter.W_r"));
    }
}

TEST_CASE("clip_gradients") {
    ParamStore s;
    auto& a = s.add("a", Tensor::scalar(0.0));
    auto& b = s.add("b", Tensor::scalar(0.0));
    ad::backward(ad::add(ad::scale(a, 3.0), ad::scale(b, 4.0)));
    CHECK(clip_gradients(s, 1.0) == doctest::Approx(5.0));
    CHECK(a.grad().item() == doctest::Approx(0.6));
    CHECK(b.grad().item() == doctest::Approx(0.8));
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.beta1 = 1.0;
    CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("training.beta1"));
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("training.batch_size"));
    cfg = {};
    cfg.learning_rate = -1.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("zero epochs return the initial parameters") {
    const WindowedDataset ds = linear_dataset(40, 1);
    Model model(linear_spec(), 3);
    const Model fresh(linear_spec(), 3);
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainResult r = train(model, ds, cfg);
    CHECK(r.trace.empty());
    for (Index i = 0; i < model.params().entries().size(); ++i)
        CHECK(model.params().entries()[i].var.value().values() ==
              fresh.params().entries()[i].var.value().values());
}

TEST_CASE("linear task reaches near-zero loss") {
    const WindowedDataset ds = linear_dataset(200, 2);
    Model model(linear_spec(), 5);
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 200;
    cfg.learning_rate = 0.02;
    cfg.loss = LossKind::mse;
    const TrainResult r = train(model, ds, cfg);
    CHECK(r.trace.back().train_loss <= 1e-6);
}

TEST_CASE("training is deterministic") {
    const WindowedDataset ds = linear_dataset(60, 3);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 7;
    Model a(linear_spec(), 9), b(linear_spec(), 9);
    const TrainResult ra = train(a, ds, cfg);
    const TrainResult rb = train(b, ds, cfg);
    REQUIRE(ra.trace.size() == rb.trace.size());
    std::ostringstream ta, tb;
    write_trace(ta, ra.trace);
    write_trace(tb, rb.trace);
    CHECK(ta.str() == tb.str());
    CHECK(ra.rng_state == rb.rng_state);
}

TEST_CASE("divergence aborts with the trace so far") {
    const WindowedDataset ds = linear_dataset(40, 4);
    Model model(linear_spec(), 1);
    model.params().get("filter.W_x").mutable_value()[0] = INFINITY;
    TrainConfig cfg;
    cfg.epochs = 3;
    try {
        train(model, ds, cfg);
        FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
        CHECK(e.trace().empty());
    }
}

TEST_CASE("evaluate") {
    WindowedDataset ds = linear_dataset(50, 6);
    Model model(linear_spec(), 2);
    const Metrics m = evaluate(model, ds, Split::test, LossKind::mae);
    CHECK(m.samples == ds.test.size());
    CHECK(m.parameters == model.params().scalar_count());
    // Recompute from saved predictions.
    const Tensor pred = predict_split(model, ds, Split::test);
    CHECK(m.mae == doctest::Approx(mean_absolute_error(pred, gather_targets(ds, ds.test))).epsilon(1e-15));

    SUBCASE("constant zero predictor gives mean |target|") {
        for (auto& p : model.params().entries())
            for (double& v : p.var.mutable_value().data()) v = 0.0;
        const Metrics z = evaluate(model, ds, Split::test, LossKind::mae);
        const Tensor t = gather_targets(ds, ds.test);
        double s = 0.0;
        for (double v : t.values()) s += std::abs(v);
        CHECK(z.mae == doctest::Approx(s / static_cast<double>(t.size())).epsilon(1e-14));
    }
    SUBCASE("empty split") {
        ds.test.clear();
        CHECK_THROWS(evaluate(model, ds, Split::test, LossKind::mae));
    }
    SUBCASE("parameters are not mutated") {
        std::vector<std::vector<double>> before;
        for (const auto& p : model.params().entries()) before.push_back(p.var.value().values());
        evaluate(model, ds, Split::validation, LossKind::mae);
        for (Index i = 0; i < before.size(); ++i)
            CHECK(model.params().entries()[i].var.value().values() == before[i]);
    }
}

TEST_CASE("accuracy") {
    const Tensor logits = make_tensor(Shape{3, 2}, {2, 0, 5, 1, 3, 0});  // rows (2,1) (0,3) (5,0)
    CHECK(accuracy(logits, {0, 1, 0}) == 1.0);
    CHECK(accuracy(logits, {1, 1, 0}) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS(accuracy(logits, {0, 1}));
}

TEST_CASE("trace and key-value round trips") {
    std::vector<EpochRecord> trace{{1, 0.5, 0.25, 0.125}, {2, 1.0 / 3.0, NAN, 0.1}};
    std::stringstream ss;
    write_trace(ss, trace);
    const auto back = read_trace(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[1].train_loss == trace[1].train_loss);
    CHECK(std::isnan(back[1].val_loss));

    Metrics m;
    m.samples = 10;
    m.loss = 0.1 + 0.2;
    m.mae = 1.0 / 7.0;
    m.parameters = 128;
    const KeyValues kv = metrics_key_values(m, ModelVariant::srgtn);
    std::stringstream out;
    write_key_values(out, kv);
    const KeyValues read = read_key_values(out);
    CHECK(read == kv);
    CHECK(std::stod(read[5].second) == m.mae);
    std::vector<std::string> keys;
    for (const auto& e : kv) keys.push_back(e.first);
    CHECK(keys == std::vector<std::string>{"variant", "task", "split", "samples", "loss", "mae",
                                           "rmse", "parameters", "wall_time_s"});
}
