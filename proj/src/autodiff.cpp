#include "rgtn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace rgtn::ad {

namespace {

void accumulate(Node& node, const Tensor& g) {
    if (!node.requires_grad) return;
    if (!node.has_grad) {
        node.grad = g;
        node.has_grad = true;
        return;
    }
    auto dst = node.grad.data();
    auto src = g.data();
    for (Index i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

std::vector<Index> axes_of(const std::vector<Index>& modes) {
    std::vector<Index> out;
    for (Index m : modes) out.push_back(m - 1);
    return out;
}

// 1-based permutation that reorders `current` (axis ids per mode) into
// ascending axis order.
std::vector<Index> restore_order(const std::vector<Index>& current) {
    std::vector<Index> perm(current.size());
    for (Index pos = 0; pos < current.size(); ++pos) perm[current[pos]] = pos + 1;
    return perm;
}

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
}

const Tensor& Var::grad() const {
    if (!node_->has_grad) node_->grad = Tensor(node_->value.shape());
    return node_->grad;
}

void Var::zero_grad() {
    node_->has_grad = false;
    node_->grad = Tensor(node_->value.shape());
}

Var constant(Tensor value) { return Var(std::move(value), false); }
Var parameter(Tensor value) { return Var(std::move(value), true); }

Var make_var(Tensor value, std::vector<std::shared_ptr<Node>> parents,
             std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad =
        std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
    if (node->requires_grad) {
        node->parents = std::move(parents);
        node->backward = std::move(backward_fn);
    }
    return Var(std::move(node));
}

void backward(const Var& root) {
    if (root.value().size() != 1) {
        throw ShapeError("backward needs a scalar root, got shape " + root.shape().str());
    }
    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, Index>> stack{{root.node().get(), 0}};
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
            continue;
        }
        order.push_back(node);
        stack.pop_back();
    }

    accumulate(*root.node(), Tensor::filled(root.shape(), 1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward && node->has_grad) node->backward(*node);
    }
}

Var contract(const Var& a, const Var& b, Index mode_a, Index mode_b) {
    return contract_multi(a, b, {mode_a}, {mode_b});
}

Var contract_multi(const Var& a, const Var& b, const std::vector<Index>& a_modes,
                   const std::vector<Index>& b_modes) {
    Tensor value = rgtn::contract_multi(a.value(), b.value(), a_modes, b_modes);
    return make_var(std::move(value), {a.node(), b.node()},
                    [a_modes, b_modes](Node& self) {
        const Tensor& av = self.parents[0]->value;
        const Tensor& bv = self.parents[1]->value;
        const auto a_axes = axes_of(a_modes);
        const auto b_axes = axes_of(b_modes);
        std::vector<Index> a_free, b_free;
        for (Index ax = 0; ax < av.order(); ++ax)
            if (std::find(a_axes.begin(), a_axes.end(), ax) == a_axes.end()) a_free.push_back(ax);
        for (Index ax = 0; ax < bv.order(); ++ax)
            if (std::find(b_axes.begin(), b_axes.end(), ax) == b_axes.end()) b_free.push_back(ax);

        // Output modes are (a_free..., b_free...).
        std::vector<Index> g_a_part, g_b_part;
        for (Index k = 0; k < a_free.size(); ++k) g_a_part.push_back(k + 1);
        for (Index k = 0; k < b_free.size(); ++k) g_b_part.push_back(a_free.size() + k + 1);

        if (self.parents[0]->requires_grad) {
            std::vector<Index> b_free_modes;
            for (Index ax : b_free) b_free_modes.push_back(ax + 1);
            Tensor g = rgtn::contract_multi(self.grad, bv, g_b_part, b_free_modes);
            // g modes: a_free..., then b's contracted axes ascending, each
            // standing for its paired axis of a.
            std::vector<Index> current = a_free;
            std::vector<Index> b_sorted = b_axes;
            std::sort(b_sorted.begin(), b_sorted.end());
            for (Index bax : b_sorted) {
                const auto pos = std::find(b_axes.begin(), b_axes.end(), bax) - b_axes.begin();
                current.push_back(a_axes[pos]);
            }
            accumulate(*self.parents[0], rgtn::permute(g, restore_order(current)));
        }
        if (self.parents[1]->requires_grad) {
            std::vector<Index> a_free_modes;
            for (Index ax : a_free) a_free_modes.push_back(ax + 1);
            Tensor g = rgtn::contract_multi(av, self.grad, a_free_modes, g_a_part);
            std::vector<Index> current;
            std::vector<Index> a_sorted = a_axes;
            std::sort(a_sorted.begin(), a_sorted.end());
            for (Index aax : a_sorted) {
                const auto pos = std::find(a_axes.begin(), a_axes.end(), aax) - a_axes.begin();
                current.push_back(b_axes[pos]);
            }
            current.insert(current.end(), b_free.begin(), b_free.end());
            accumulate(*self.parents[1], rgtn::permute(g, restore_order(current)));
        }
    });
}

Var reshape(const Var& a, const Shape& target) {
    return make_var(rgtn::reshape(a.value(), target), {a.node()}, [](Node& self) {
        accumulate(*self.parents[0], rgtn::reshape(self.grad, self.parents[0]->value.shape()));
    });
}

Var permute(const Var& a, const std::vector<Index>& perm) {
    return make_var(rgtn::permute(a.value(), perm), {a.node()}, [perm](Node& self) {
        std::vector<Index> inverse(perm.size());
        for (Index k = 0; k < perm.size(); ++k) inverse[perm[k] - 1] = k + 1;
        accumulate(*self.parents[0], rgtn::permute(self.grad, inverse));
    });
}

Var add(const Var& a, const Var& b) {
    return make_var(rgtn::add(a.value(), b.value()), {a.node(), b.node()}, [](Node& self) {
        accumulate(*self.parents[0], self.grad);
        accumulate(*self.parents[1], self.grad);
    });
}

Var subtract(const Var& a, const Var& b) {
    return make_var(rgtn::subtract(a.value(), b.value()), {a.node(), b.node()}, [](Node& self) {
        accumulate(*self.parents[0], self.grad);
        accumulate(*self.parents[1], rgtn::scale(self.grad, -1.0));
    });
}

Var scale(const Var& a, double factor) {
    return make_var(rgtn::scale(a.value(), factor), {a.node()}, [factor](Node& self) {
        accumulate(*self.parents[0], rgtn::scale(self.grad, factor));
    });
}

Var add_along(const Var& a, const Var& b, Index mode) {
    const Shape& s = a.shape();
    const Index extent = s.mode(mode);
    if (b.shape() != Shape{extent}) {
        throw ShapeError("add_along: vector " + b.shape().str() + " does not match mode " +
                         std::to_string(mode) + " of " + s.str());
    }
    const Index inner = strides(s)[mode - 1];
    const Index outer = s.size() / (inner * extent);
    Tensor value = a.value();
    const auto& bv = b.value();
    for (Index o = 0; o < outer; ++o)
        for (Index e = 0; e < extent; ++e)
            for (Index i = 0; i < inner; ++i) value[i + inner * (e + extent * o)] += bv[e];
    return make_var(std::move(value), {a.node(), b.node()}, [inner, extent, outer](Node& self) {
        accumulate(*self.parents[0], self.grad);
        if (!self.parents[1]->requires_grad) return;
        Tensor gb(Shape{extent});
        for (Index o = 0; o < outer; ++o)
            for (Index e = 0; e < extent; ++e)
                for (Index i = 0; i < inner; ++i) gb[e] += self.grad[i + inner * (e + extent * o)];
        accumulate(*self.parents[1], gb);
    });
}

Var activate(const Var& a, Activation kind) {
    if (kind == Activation::softmax) {
        throw std::invalid_argument("softmax is only available through cross_entropy_loss");
    }
    if (kind == Activation::identity) return a;
    Tensor value = apply_activation(a.value(), kind);
    return make_var(value, {a.node()}, [kind, value](Node& self) {
        Tensor g = self.grad;
        const Tensor& x = self.parents[0]->value;
        for (Index i = 0; i < g.size(); ++i) {
            const double y = value[i];
            switch (kind) {
                case Activation::tanh: g[i] *= 1.0 - y * y; break;
                case Activation::sigmoid: g[i] *= y * (1.0 - y); break;
                case Activation::relu: g[i] *= x[i] > 0.0 ? 1.0 : 0.0; break;
                default: break;
            }
        }
        accumulate(*self.parents[0], g);
    });
}

Var select(const Var& a, Index mode, Index index) {
    const Shape& s = a.shape();
    const Index extent = s.mode(mode);
    if (index >= extent) {
        throw std::out_of_range("select: index " + std::to_string(index) + " beyond mode " +
                                std::to_string(mode) + " of " + s.str());
    }
    const Index inner = strides(s)[mode - 1];
    const Index outer = s.size() / (inner * extent);
    std::vector<Index> dims = s.dims();
    dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(mode - 1));
    Tensor value{Shape(dims)};
    for (Index o = 0; o < outer; ++o)
        for (Index i = 0; i < inner; ++i)
            value[i + inner * o] = a.value()[i + inner * (index + extent * o)];
    return make_var(std::move(value), {a.node()},
                    [inner, outer, extent, index](Node& self) {
        Tensor g(self.parents[0]->value.shape());
        for (Index o = 0; o < outer; ++o)
            for (Index i = 0; i < inner; ++i)
                g[i + inner * (index + extent * o)] = self.grad[i + inner * o];
        accumulate(*self.parents[0], g);
    });
}

Var stack(const std::vector<Var>& parts, Index mode) {
    if (parts.empty()) throw std::invalid_argument("stack needs at least one part");
    const Shape& s = parts.front().shape();
    if (mode < 1 || mode > s.order() + 1) {
        throw ShapeError("stack: mode " + std::to_string(mode) + " out of range");
    }
    std::vector<std::shared_ptr<Node>> parents;
    for (const auto& p : parts) {
        if (p.shape() != s) throw ShapeError("stack: parts differ in shape");
        parents.push_back(p.node());
    }
    const Index extent = parts.size();
    const Index inner = mode == 1 ? 1 : strides(s)[mode - 2] * s[mode - 2];
    const Index outer = s.size() / inner;
    std::vector<Index> dims = s.dims();
    dims.insert(dims.begin() + static_cast<std::ptrdiff_t>(mode - 1), extent);
    Tensor value{Shape(dims)};
    for (Index e = 0; e < extent; ++e) {
        const Tensor& pv = parts[e].value();
        for (Index o = 0; o < outer; ++o)
            for (Index i = 0; i < inner; ++i) value[i + inner * (e + extent * o)] = pv[i + inner * o];
    }
    return make_var(std::move(value), std::move(parents), [inner, outer, extent](Node& self) {
        for (Index e = 0; e < extent; ++e) {
            Node& parent = *self.parents[e];
            if (!parent.requires_grad) continue;
            Tensor g(parent.value.shape());
            for (Index o = 0; o < outer; ++o)
                for (Index i = 0; i < inner; ++i) g[i + inner * o] = self.grad[i + inner * (e + extent * o)];
            accumulate(parent, g);
        }
    });
}

Var sum(const Var& a) {
    double total = 0.0;
    for (double v : a.value().data()) total += v;
    return make_var(Tensor::scalar(total), {a.node()}, [](Node& self) {
        accumulate(*self.parents[0], Tensor::filled(self.parents[0]->value.shape(), self.grad[0]));
    });
}

Var coupling(const Tensor& time_adjacency, const Var& W_r) {
    return make_var(coupling_tensor(time_adjacency, W_r.value()), {W_r.node()},
                    [time_adjacency](Node& self) {
        // dW_r(m, m') = sum_{t,s} A(t,s) dR(t, m, s, m').
        accumulate(*self.parents[0],
                   rgtn::contract_multi(self.grad, time_adjacency, {1, 3}, {1, 2}));
    });
}

Var mae_loss(const Var& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("mae_loss: prediction " + pred.shape().str() + " vs target " +
                         target.shape().str());
    }
    const Index n = target.size();
    if (n == 0) throw std::invalid_argument("mae_loss on an empty batch");
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += std::abs(pred.value()[i] - target[i]);
    return make_var(Tensor::scalar(total / static_cast<double>(n)), {pred.node()},
                    [target, n](Node& self) {
        const Tensor& p = self.parents[0]->value;
        Tensor g(p.shape());
        const double w = self.grad[0] / static_cast<double>(n);
        for (Index i = 0; i < n; ++i) {
            const double d = p[i] - target[i];
            g[i] = d > 0.0 ? w : (d < 0.0 ? -w : 0.0);
        }
        accumulate(*self.parents[0], g);
    });
}

Var mse_loss(const Var& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("mse_loss: prediction " + pred.shape().str() + " vs target " +
                         target.shape().str());
    }
    const Index n = target.size();
    if (n == 0) throw std::invalid_argument("mse_loss on an empty batch");
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double d = pred.value()[i] - target[i];
        total += d * d;
    }
    return make_var(Tensor::scalar(total / static_cast<double>(n)), {pred.node()},
                    [target, n](Node& self) {
        const Tensor& p = self.parents[0]->value;
        Tensor g(p.shape());
        const double w = 2.0 * self.grad[0] / static_cast<double>(n);
        for (Index i = 0; i < n; ++i) g[i] = w * (p[i] - target[i]);
        accumulate(*self.parents[0], g);
    });
}

Var cross_entropy_loss(const Var& logits, const std::vector<int>& labels) {
    const Shape& s = logits.shape();
    if (s.order() != 2 || s[0] != labels.size()) {
        throw ShapeError("cross_entropy_loss: logits " + s.str() + " for " +
                         std::to_string(labels.size()) + " labels");
    }
    const Index batch = s[0];
    const Index classes = s[1];
    if (batch == 0) throw std::invalid_argument("cross_entropy_loss on an empty batch");
    for (int label : labels) {
        if (label < 0 || static_cast<Index>(label) >= classes) {
            throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(label) +
                                        " outside [0, " + std::to_string(classes) + ")");
        }
    }
    const Tensor probs = apply_activation(logits.value(), Activation::softmax);
    double total = 0.0;
    for (Index b = 0; b < batch; ++b) {
        // log-sum-exp for the loss itself, probabilities for the gradient.
        double mx = -INFINITY;
        for (Index c = 0; c < classes; ++c) mx = std::max(mx, logits.value()(b, c));
        double lse = 0.0;
        for (Index c = 0; c < classes; ++c) lse += std::exp(logits.value()(b, c) - mx);
        total += mx + std::log(lse) - logits.value()(b, static_cast<Index>(labels[b]));
    }
    return make_var(Tensor::scalar(total / static_cast<double>(batch)), {logits.node()},
                    [probs, labels, batch](Node& self) {
        Tensor g = probs;
        for (Index b = 0; b < batch; ++b) g(b, static_cast<Index>(labels[b])) -= 1.0;
        accumulate(*self.parents[0], rgtn::scale(g, self.grad[0] / static_cast<double>(batch)));
    });
}

}  // namespace rgtn::ad
