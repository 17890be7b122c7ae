#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rgtn/layers.hpp"
#include "rgtn/tensor.hpp"

/// Tape-free reverse-mode differentiation: every Var owns a node that keeps
/// references to the nodes it was computed from, and backward() walks that
/// DAG in reverse topological order.
namespace rgtn::ad {

struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    /// Propagates this node's grad into its parents.
    std::function<void(Node&)> backward;
};

class Var {
public:
    Var() = default;
    explicit Var(Tensor value, bool requires_grad = false);

    const Tensor& value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    bool requires_grad() const { return node_->requires_grad; }

    /// Gradient accumulated by backward(); zero-shaped like value() when no
    /// gradient reached this node.
    const Tensor& grad() const;
    bool has_grad() const { return node_->has_grad; }
    void zero_grad();

    /// In-place access for the optimizer. Only meaningful on leaves.
    Tensor& mutable_value() { return node_->value; }

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    friend Var make_var(Tensor, std::vector<std::shared_ptr<Node>>, std::function<void(Node&)>);
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var parameter(Tensor value);

/// Builds an interior node; `backward` is dropped when no parent needs a
/// gradient.
Var make_var(Tensor value, std::vector<std::shared_ptr<Node>> parents,
             std::function<void(Node&)> backward);

/// Accumulates d(root)/d(node) into every reachable node that requires a
/// gradient. `root` must hold a single element.
void backward(const Var& root);

Var contract(const Var& a, const Var& b, Index mode_a, Index mode_b);
Var contract_multi(const Var& a, const Var& b, const std::vector<Index>& a_modes,
                   const std::vector<Index>& b_modes);
Var reshape(const Var& a, const Shape& target);
Var permute(const Var& a, const std::vector<Index>& perm);
Var add(const Var& a, const Var& b);
Var subtract(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
/// a + b broadcast explicitly along 1-based `mode` of a; b is order-1.
Var add_along(const Var& a, const Var& b, Index mode);
/// Elementwise activation (softmax is not supported here).
Var activate(const Var& a, Activation kind);
/// Slice at `index` (0-based) of 1-based `mode`; the mode is dropped.
Var select(const Var& a, Index mode, Index index);
/// Stacks equally shaped Vars along a new 1-based mode.
Var stack(const std::vector<Var>& parts, Index mode);
Var sum(const Var& a);

/// Order-4 coupling tensor I + A (x) W_r (see rgtn::coupling_tensor) as a
/// differentiable function of W_r.
Var coupling(const Tensor& time_adjacency, const Var& W_r);

Var mae_loss(const Var& pred, const Tensor& target);
Var mse_loss(const Var& pred, const Tensor& target);
/// Mean negative log-softmax of the true class; logits are (B, C).
Var cross_entropy_loss(const Var& logits, const std::vector<int>& labels);

}  // namespace rgtn::ad
