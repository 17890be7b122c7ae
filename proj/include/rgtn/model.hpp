#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rgtn/autodiff.hpp"
#include "rgtn/graph.hpp"
#include "rgtn/layers.hpp"
#include "rgtn/param_store.hpp"

namespace rgtn {

enum class ModelVariant { grgtn, srgtn, rnn };
enum class HeadKind { none, tt, dense };

ModelVariant parse_variant(const std::string& name);
std::string to_string(ModelVariant v);
HeadKind parse_head(const std::string& name);
std::string to_string(HeadKind h);

/// Sequence model over order-3 windows (time x physical x feature).
///
/// RGTN variants project every physical slice with a shared W_x (M x F),
/// filter along time with the coupling of the chosen variant, add b_h and
/// apply the activation; the hidden tensor (tau, physical, M) then feeds the
/// head. The RNN baseline flattens each step to physical*F inputs, runs the
/// recurrence with M hidden units, and feeds the (tau, M) hidden sequence to
/// a dense head.
struct ModelSpec {
    ModelVariant variant = ModelVariant::grgtn;
    Index tau = 6;
    Index physical = 1;
    Index features = 1;
    Index hidden = 8;
    double c = 0.5;
    Activation activation = Activation::tanh;
    bool hidden_bias = true;

    HeadKind head = HeadKind::tt;
    /// TT head: one extent per input mode (tau, physical, M). Dense head:
    /// only the product matters.
    std::vector<Index> head_out_shape{1, 1, 1};
    /// Interior TT ranks (R1, ..., R(N-1)).
    std::vector<Index> head_ranks{2, 2};
    bool head_bias = true;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    Index output_size() const;
    /// Extents of the hidden tensor that feeds the head (without batch).
    Shape hidden_shape() const;
};

struct ParamCount {
    std::vector<std::pair<std::string, Index>> entries;  // per parameter
    Index filter = 0;  // everything before the head
    Index head = 0;
    Index total = 0;
};

/// Trainable scalar count from the configuration alone.
ParamCount param_count(const ModelSpec& spec);

class Model {
public:
    /// Parameters are initialized U(-s, s) with s = fan_in^(-1/2); biases
    /// start at zero.
    Model(ModelSpec spec, std::uint64_t seed);

    const ModelSpec& spec() const { return spec_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const TimeGraph& time_graph() const { return time_graph_; }

    /// inputs (B, tau, physical, features) -> outputs (B, output_size).
    ad::Var forward(const Tensor& inputs) const;
    /// Hidden tensor after filtering, bias and activation:
    /// (B, tau, physical, M) for RGTN variants, (B, tau, M) for the RNN.
    ad::Var hidden(const Tensor& inputs) const;
    Tensor predict(const Tensor& inputs) const { return forward(inputs).value(); }

    /// Copies named tensors into the store. Every model parameter must be
    /// present with an identical shape; errors name the mismatching mode.
    void load_parameters(const std::vector<std::pair<std::string, Tensor>>& values);

private:
    ad::Var head(const ad::Var& hidden, Index batch) const;

    ModelSpec spec_;
    TimeGraph time_graph_;
    ParamStore params_;
};

}  // namespace rgtn
