#pragma once

#include <optional>
#include <vector>

#include "rgtn/tensor.hpp"

namespace rgtn {

/// Chain of order-3 cores G(n) of shape (R(n-1), I(n), R(n)) with
/// R(0) = R(N) = 1.
struct TTNetwork {
    std::vector<Tensor> cores;

    Index order() const { return cores.size(); }
    /// (R0, ..., RN).
    std::vector<Index> ranks() const;
    /// (I1, ..., IN).
    std::vector<Index> mode_sizes() const;
    /// Throws ShapeError on boundary-rank or adjacent-rank violations.
    void validate() const;
};

/// Truncation controls for tt_svd. With neither set the decomposition keeps
/// every singular value above rel_tolerance = 1e-12.
struct TTSvdOptions {
    double rel_tolerance = 1e-12;
    std::optional<Index> max_rank;
};

/// Sequential-SVD TT decomposition. Each step truncates with threshold
/// rel_tolerance * ||x||_F / sqrt(N - 1), then caps at max_rank.
TTNetwork tt_svd(const Tensor& x, const TTSvdOptions& options = {});

Tensor tt_reconstruct(const TTNetwork& tt);

Index tt_param_count(const TTNetwork& tt);
Index tt_param_count(const std::vector<Index>& mode_sizes, const std::vector<Index>& ranks);
Index dense_param_count(const Shape& shape);

/// Fully connected layer whose weight lives in TT form. Core k has mode
/// extent in_shape[k] * out_shape[k], with the input index varying fastest.
struct TTLinearLayer {
    TTNetwork tt;
    Shape in_shape;
    Shape out_shape;
    std::optional<Tensor> bias;  // shape out_shape

    void validate() const;
    /// Dense (prod(in) x prod(out)) weight; y = W^T vec(x) + bias.
    Tensor dense_weight() const;
};

/// y = W^T vec(x) (+ bias) evaluated core by core, never forming W.
Tensor tt_layer_forward(const TTLinearLayer& layer, const Tensor& x);

/// Batched core-by-core product. `x` has shape (B, I1, ..., IN); the cores
/// have shape (R(k-1), Ik * Ok, R(k)). Returns (B, O1, ..., ON).
Tensor tt_chain_apply(const std::vector<Tensor>& cores, const Shape& in_shape,
                      const Shape& out_shape, const Tensor& x);

}  // namespace rgtn
