#include "rgtn/model.hpp"

#include <cmath>
#include <numeric>

#include "rgtn/detail/tt_chain.hpp"
#include "rgtn/random.hpp"

namespace rgtn {

ModelVariant parse_variant(const std::string& name) {
    if (name == "grgtn") return ModelVariant::grgtn;
    if (name == "srgtn") return ModelVariant::srgtn;
    if (name == "rnn") return ModelVariant::rnn;
    throw std::invalid_argument("unknown model variant '" + name + "' (grgtn | srgtn | rnn)");
}

std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::grgtn: return "grgtn";
        case ModelVariant::srgtn: return "srgtn";
        case ModelVariant::rnn: return "rnn";
    }
    return "grgtn";
}

HeadKind parse_head(const std::string& name) {
    if (name == "none") return HeadKind::none;
    if (name == "tt") return HeadKind::tt;
    if (name == "dense") return HeadKind::dense;
    throw std::invalid_argument("unknown head '" + name + "' (none | tt | dense)");
}

std::string to_string(HeadKind h) {
    switch (h) {
        case HeadKind::none: return "none";
        case HeadKind::tt: return "tt";
        case HeadKind::dense: return "dense";
    }
    return "none";
}

void ModelSpec::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("model." + msg); };
    if (tau < 1) fail("tau must be >= 1");
    if (physical < 1) fail("physical must be >= 1");
    if (features < 1) fail("features must be >= 1");
    if (hidden < 1) fail("hidden must be >= 1");
    if (variant != ModelVariant::rnn && !(c > 0.0 && c < 1.0)) fail("c must lie in (0, 1)");
    if (activation == Activation::softmax) fail("activation: softmax is not a hidden activation");
    if (variant == ModelVariant::rnn && head == HeadKind::tt) {
        fail("head: the rnn baseline uses a dense head");
    }
    if (head != HeadKind::none) {
        if (head_out_shape.empty()) fail("head.out_shape must not be empty");
        for (Index d : head_out_shape)
            if (d < 1) fail("head.out_shape extents must be >= 1");
    }
    if (head == HeadKind::tt) {
        const Index n = hidden_shape().order();
        if (head_out_shape.size() != n) {
            fail("head.out_shape needs " + std::to_string(n) + " extents (one per hidden mode)");
        }
        if (head_ranks.size() != n - 1) {
            fail("head.ranks needs " + std::to_string(n - 1) + " interior ranks");
        }
        for (Index r : head_ranks)
            if (r < 1) fail("head.ranks must be >= 1");
    }
}

Shape ModelSpec::hidden_shape() const {
    if (variant == ModelVariant::rnn) return Shape{tau, hidden};
    return Shape{tau, physical, hidden};
}

Index ModelSpec::output_size() const {
    if (head == HeadKind::none) return hidden_shape().size();
    return std::accumulate(head_out_shape.begin(), head_out_shape.end(), Index{1},
                           std::multiplies<>());
}

namespace {

struct ParamLayout {
    std::string name;
    Shape shape;
    double init_scale;  // 0 for zero-initialized biases
    bool in_head;
};

std::vector<ParamLayout> layout(const ModelSpec& spec) {
    spec.validate();
    std::vector<ParamLayout> out;
    const Index m = spec.hidden;
    auto fan = [](Index fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
    if (spec.variant == ModelVariant::rnn) {
        const Index inputs = spec.physical * spec.features;
        out.push_back({"rnn.W_x", Shape{m, inputs}, fan(inputs), false});
        out.push_back({"rnn.W_h", Shape{m, m}, fan(m), false});
        if (spec.hidden_bias) out.push_back({"rnn.b_h", Shape{m}, 0.0, false});
    } else {
        out.push_back({"filter.W_x", Shape{m, spec.features}, fan(spec.features), false});
        if (spec.variant == ModelVariant::grgtn) {
            out.push_back({"filter.W_r", Shape{m, m}, fan(m), false});
        }
        if (spec.hidden_bias) out.push_back({"filter.b_h", Shape{m}, 0.0, false});
    }

    const Shape in = spec.hidden_shape();
    const Index outputs = spec.output_size();
    if (spec.head == HeadKind::tt) {
        std::vector<Index> ranks{1};
        ranks.insert(ranks.end(), spec.head_ranks.begin(), spec.head_ranks.end());
        ranks.push_back(1);
        for (Index k = 0; k < in.order(); ++k) {
            out.push_back({"head.core" + std::to_string(k + 1),
                           Shape{ranks[k], in[k] * spec.head_out_shape[k], ranks[k + 1]},
                           fan(ranks[k] * in[k]), true});
        }
        if (spec.head_bias) out.push_back({"head.bias", Shape{outputs}, 0.0, true});
    } else if (spec.head == HeadKind::dense) {
        out.push_back({"head.W_y", Shape{outputs, in.size()}, fan(in.size()), true});
        if (spec.head_bias) out.push_back({"head.b_y", Shape{outputs}, 0.0, true});
    }
    return out;
}

}  // namespace

ParamCount param_count(const ModelSpec& spec) {
    ParamCount count;
    for (const auto& p : layout(spec)) {
        const Index n = p.shape.size();
        count.entries.emplace_back(p.name, n);
        (p.in_head ? count.head : count.filter) += n;
        count.total += n;
    }
    return count;
}

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    const auto params = layout(spec_);
    if (spec_.variant != ModelVariant::rnn) time_graph_ = build_time_adjacency(spec_.tau, spec_.c);
    Rng rng(seed);
    for (const auto& p : params) {
        Tensor init = p.init_scale > 0.0 ? rng.uniform_tensor(p.shape, -p.init_scale, p.init_scale)
                                         : Tensor(p.shape);
        params_.add(p.name, std::move(init));
    }
}

ad::Var Model::hidden(const Tensor& inputs) const {
    const Shape expected{spec_.tau, spec_.physical, spec_.features};
    if (inputs.order() != 4 || inputs.shape()[1] != spec_.tau ||
        inputs.shape()[2] != spec_.physical || inputs.shape()[3] != spec_.features) {
        throw ShapeError("model input " + inputs.shape().str() + " is not a batch of windows " +
                         expected.str());
    }
    const Index batch = inputs.shape()[0];
    const Index tau = spec_.tau;
    const Index m = spec_.hidden;
    ad::Var x = ad::constant(inputs);

    if (spec_.variant == ModelVariant::rnn) {
        const ad::Var flat = ad::reshape(x, Shape{batch, tau, spec_.physical * spec_.features});
        const ad::Var projected = ad::contract(flat, params_.get("rnn.W_x"), 3, 2);  // (B,tau,M)
        std::vector<ad::Var> states;
        for (Index t = 0; t < tau; ++t) {
            ad::Var pre = ad::select(projected, 2, t);
            if (t > 0) pre = ad::add(pre, ad::contract(states.back(), params_.get("rnn.W_h"), 2, 2));
            if (spec_.hidden_bias) pre = ad::add_along(pre, params_.get("rnn.b_h"), 2);
            states.push_back(ad::activate(pre, spec_.activation));
        }
        return ad::stack(states, 2);
    }

    const ad::Var projected = ad::contract(x, params_.get("filter.W_x"), 4, 2);  // (B,tau,P,M)
    ad::Var filtered;
    if (spec_.variant == ModelVariant::grgtn && tau * m <= RecurrentCoupling::kMaterializeLimit) {
        const ad::Var coupled = ad::coupling(time_graph_.adjacency, params_.get("filter.W_r"));
        filtered = ad::permute(ad::contract_multi(coupled, projected, {3, 4}, {2, 4}), {3, 1, 4, 2});
    } else if (spec_.variant == ModelVariant::grgtn) {
        const ad::Var propagated = ad::contract(projected, params_.get("filter.W_r"), 4, 2);
        const ad::Var shifted = ad::contract(ad::constant(time_graph_.adjacency), propagated, 2, 2);
        filtered = ad::add(projected, ad::permute(shifted, {2, 1, 3, 4}));
    } else {
        const ad::Var shift = ad::constant(add(Tensor::identity(tau), time_graph_.adjacency));
        filtered = ad::permute(ad::contract(shift, projected, 2, 2), {2, 1, 3, 4});
    }
    if (spec_.hidden_bias) filtered = ad::add_along(filtered, params_.get("filter.b_h"), 4);
    return ad::activate(filtered, spec_.activation);
}

ad::Var Model::head(const ad::Var& hidden, Index batch) const {
    const Shape in = spec_.hidden_shape();
    const Index outputs = spec_.output_size();
    switch (spec_.head) {
        case HeadKind::none:
            return ad::reshape(hidden, Shape{batch, outputs});
        case HeadKind::dense: {
            const ad::Var flat = ad::reshape(hidden, Shape{batch, in.size()});
            ad::Var y = ad::contract(flat, params_.get("head.W_y"), 2, 2);
            if (spec_.head_bias) y = ad::add_along(y, params_.get("head.b_y"), 2);
            return y;
        }
        case HeadKind::tt: {
            std::vector<ad::Var> cores;
            std::vector<Index> ranks{1};
            for (Index k = 0; k < in.order(); ++k) {
                cores.push_back(params_.get("head.core" + std::to_string(k + 1)));
                ranks.push_back(cores.back().shape()[2]);
            }
            const Shape out_shape(spec_.head_out_shape);
            ad::Var y = ad::reshape(detail::tt_chain(cores, ranks, in, out_shape, hidden, batch),
                                    Shape{batch, outputs});
            if (spec_.head_bias) y = ad::add_along(y, params_.get("head.bias"), 2);
            return y;
        }
    }
    return hidden;
}

ad::Var Model::forward(const Tensor& inputs) const {
    return head(hidden(inputs), inputs.shape()[0]);
}

void Model::load_parameters(const std::vector<std::pair<std::string, Tensor>>& values) {
    for (auto& entry : params_.entries()) {
        const Tensor* found = nullptr;
        for (const auto& [name, value] : values)
            if (name == entry.name) found = &value;
        if (!found) throw ShapeError("parameter '" + entry.name + "' missing from checkpoint");
        const Shape& want = entry.var.shape();
        const Shape& got = found->shape();
        if (want.order() != got.order()) {
            throw ShapeError("parameter '" + entry.name + "': checkpoint has order " +
                             std::to_string(got.order()) + " " + got.str() + ", model expects " +
                             want.str());
        }
        for (Index k = 0; k < want.order(); ++k) {
            if (want[k] != got[k]) {
                throw ShapeError("parameter '" + entry.name + "': mode " + std::to_string(k + 1) +
                                 " has extent " + std::to_string(got[k]) +
                                 " in the checkpoint but the model expects " +
                                 std::to_string(want[k]));
            }
        }
        entry.var.mutable_value() = *found;
        entry.state = AdamState{Tensor(want), Tensor(want), 0};
    }
}

}  // namespace rgtn
