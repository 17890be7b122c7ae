#pragma once

#include <optional>
#include <string>

#include "rgtn/graph.hpp"
#include "rgtn/tensor.hpp"

namespace rgtn {

enum class Activation { identity, tanh, sigmoid, relu, softmax };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Elementwise activation; softmax normalizes along the last mode.
Tensor apply_activation(const Tensor& x, Activation a);

// ---------------------------------------------------------------------------
// Vanilla RNN baseline
// ---------------------------------------------------------------------------

struct RNNParams {
    Tensor W_h;  // M x M
    Tensor W_x;  // M x N
    Tensor W_y;  // P x M
    std::optional<Tensor> b_h;  // M
    std::optional<Tensor> b_y;  // P
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::identity;

    void validate() const;
};

/// Hidden states h_t = sigma_h(W_h h_{t-1} + W_x x_t + b_h) for X of shape
/// (tau, N), rows in ascending time. Returns (tau, M). h0 defaults to zero.
Tensor rnn_forward(const RNNParams& params, const Tensor& X,
                   const std::optional<Tensor>& h0 = std::nullopt);

/// Outputs y_t = sigma_y(W_y h_t + b_y), row-wise. Returns (tau, P).
Tensor rnn_output(const RNNParams& params, const Tensor& H);

// ---------------------------------------------------------------------------
// Recurrent graph filtering
// ---------------------------------------------------------------------------

/// Block matrix of the unrolled linear recurrence on stacked hidden states.
/// Block (t, s) is W_h^(t-s) for t >= s and zero otherwise; the stacked
/// vector holds h_1, ..., h_tau with the hidden index varying fastest.
Tensor build_block_R(const Tensor& W_h, Index tau);

/// Order-4 coupling tensor of shape (tau, M, tau, M) with entries
/// delta(t,s) delta(m,m') + A(t,s) W_r(m,m'), i.e. I + A (x) W_r regrouped
/// so that (t, m) are the output modes and (s, m') the input modes.
Tensor coupling_tensor(const Tensor& time_adjacency, const Tensor& W_r);

/// Regroups a (tau*M x tau*M) block matrix whose pair index is m + M*t into
/// the order-4 (tau, M, tau, M) layout used by coupling_tensor.
Tensor tensorize_block_matrix(const Tensor& block, Index tau, Index hidden);

struct RecurrentCoupling {
    /// Above this tau*M the coupling is applied blockwise instead of through
    /// the materialized order-4 tensor.
    static constexpr Index kMaterializeLimit = 4096;

    TimeGraph time_graph;
    Tensor W_r;
    std::optional<Tensor> materialized;

    Index hidden() const { return W_r.shape()[0]; }
};

RecurrentCoupling build_coupling(const TimeGraph& tg, const Tensor& W_r);

/// H = R x_{3,4}^{1,2} X_hat for X_hat of shape (tau, M).
Tensor apply_coupling(const RecurrentCoupling& coupling, const Tensor& X_hat);

/// X_hat = X x_2^2 W_x, the per-step input projection. X is (tau, N), W_x is
/// (M, N).
Tensor project_inputs(const Tensor& X, const Tensor& W_x);

/// General filtering: H = R x_{3,4}^{1,2} (X x_2^2 W_x).
Tensor grgtn_filter(const RecurrentCoupling& coupling, const Tensor& X, const Tensor& W_x);

/// Simplified filtering (W_r = I): H = (I + A) x_2^1 (X x_2^2 W_x).
Tensor srgtn_filter(const TimeGraph& tg, const Tensor& X, const Tensor& W_x);

/// ||W^2 - W||_F.
double idempotency_residual(const Tensor& W);

enum class FilterVariant { general, simplified };

struct RGTNLayerSpec {
    FilterVariant variant = FilterVariant::general;
    Index tau = 1;
    Index hidden = 1;  // M
    Index inputs = 1;  // N
    double c = 0.5;
    Activation activation = Activation::identity;
};

struct RGTNLayerParams {
    Tensor W_x;                 // M x N
    std::optional<Tensor> W_r;  // M x M, general variant only
};

/// Filter (general or simplified) followed by the configured activation.
Tensor layer_forward(const RGTNLayerSpec& spec, const RGTNLayerParams& params, const Tensor& X);

}  // namespace rgtn
