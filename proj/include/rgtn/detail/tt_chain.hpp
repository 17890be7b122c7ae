#pragma once

#include <vector>

#include "rgtn/tensor.hpp"

namespace rgtn::detail {

/// Core-by-core TT contraction shared by the plain-tensor path and the
/// differentiable path. `T` is either Tensor or ad::Var; `reshape` and
/// `contract_multi` are resolved by argument-dependent lookup.
///
/// The running state has modes (B, I(k)..I(N), O(1)..O(k-1), R(k-1)); each
/// step contracts I(k) and R(k-1) against the core viewed as
/// (R(k-1), I(k), O(k), R(k)).
template <class T>
T tt_chain(const std::vector<T>& cores, const std::vector<Index>& core_ranks, const Shape& in_shape,
           const Shape& out_shape, const T& x, Index batch) {
    const Index n = in_shape.order();
    std::vector<Index> dims{batch};
    dims.insert(dims.end(), in_shape.dims().begin(), in_shape.dims().end());
    dims.push_back(1);
    T state = reshape(x, Shape(dims));
    const Index state_order = n + 2;
    for (Index k = 0; k < n; ++k) {
        const Shape core4{core_ranks[k], in_shape[k], out_shape[k], core_ranks[k + 1]};
        state = contract_multi(state, reshape(cores[k], core4), {2, state_order}, {2, 1});
    }
    std::vector<Index> out_dims{batch};
    out_dims.insert(out_dims.end(), out_shape.dims().begin(), out_shape.dims().end());
    return reshape(state, Shape(out_dims));
}

}  // namespace rgtn::detail
