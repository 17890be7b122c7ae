#include "rgtn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace rgtn {

namespace {

void require_matrix(const Tensor& t, Index rows, Index cols, const char* what) {
    if (t.shape() != Shape{rows, cols}) {
        throw ShapeError(std::string(what) + ": expected (" + std::to_string(rows) + "," +
                         std::to_string(cols) + "), got " + t.shape().str());
    }
}

void require_vector(const Tensor& t, Index n, const char* what) {
    if (t.shape() != Shape{n}) {
        throw ShapeError(std::string(what) + ": expected (" + std::to_string(n) + "), got " +
                         t.shape().str());
    }
}

void require_square(const Tensor& t, const char* what) {
    if (t.order() != 2 || t.shape()[0] != t.shape()[1]) {
        throw ShapeError(std::string(what) + ": expected a square matrix, got " +
                         t.shape().str());
    }
}

double activate(double v, Activation a) {
    switch (a) {
        case Activation::identity: return v;
        case Activation::tanh: return std::tanh(v);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-v));
        case Activation::relu: return v > 0.0 ? v : 0.0;
        case Activation::softmax: break;
    }
    return v;
}

}  // namespace

Activation parse_activation(const std::string& name) {
    if (name == "identity" || name == "linear") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "relu") return Activation::relu;
    if (name == "softmax") return Activation::softmax;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
        case Activation::softmax: return "softmax";
    }
    return "identity";
}

Tensor apply_activation(const Tensor& x, Activation a) {
    Tensor out = x;
    if (a != Activation::softmax) {
        for (double& v : out.data()) v = activate(v, a);
        return out;
    }
    if (x.order() == 0) {
        out[0] = 1.0;
        return out;
    }
    // Softmax along the last mode: fibres are strided by the product of the
    // leading extents.
    const Index width = x.shape()[x.order() - 1];
    const Index lead = x.size() / width;
    for (Index f = 0; f < lead; ++f) {
        double mx = -INFINITY;
        for (Index j = 0; j < width; ++j) mx = std::max(mx, x[f + lead * j]);
        double sum = 0.0;
        for (Index j = 0; j < width; ++j) {
            out[f + lead * j] = std::exp(x[f + lead * j] - mx);
            sum += out[f + lead * j];
        }
        for (Index j = 0; j < width; ++j) out[f + lead * j] /= sum;
    }
    return out;
}

void RNNParams::validate() const {
    require_square(W_h, "RNN W_h");
    const Index m = W_h.shape()[0];
    if (W_x.order() != 2 || W_x.shape()[0] != m) {
        throw ShapeError("RNN W_x: expected (" + std::to_string(m) + ",N), got " +
                         W_x.shape().str());
    }
    if (W_y.order() != 2 || W_y.shape()[1] != m) {
        throw ShapeError("RNN W_y: expected (P," + std::to_string(m) + "), got " +
                         W_y.shape().str());
    }
    if (b_h) require_vector(*b_h, m, "RNN b_h");
    if (b_y) require_vector(*b_y, W_y.shape()[0], "RNN b_y");
}

Tensor rnn_forward(const RNNParams& params, const Tensor& X, const std::optional<Tensor>& h0) {
    params.validate();
    const Index m = params.W_h.shape()[0];
    const Index n = params.W_x.shape()[1];
    if (X.order() != 2 || X.shape()[1] != n) {
        throw ShapeError("rnn_forward: input " + X.shape().str() + " needs " + std::to_string(n) +
                         " features");
    }
    const Index tau = X.shape()[0];
    Tensor h = h0 ? *h0 : Tensor(Shape{m});
    require_vector(h, m, "rnn_forward h0");

    const Tensor x_hat = project_inputs(X, params.W_x);  // (tau, M)
    Tensor H(Shape{tau, m});
    for (Index t = 0; t < tau; ++t) {
        Tensor next = contract(params.W_h, h, 2, 1);
        for (Index i = 0; i < m; ++i) {
            double v = next[i] + x_hat(t, i);
            if (params.b_h) v += (*params.b_h)[i];
            next[i] = v;
        }
        h = apply_activation(next, params.hidden_activation);
        for (Index i = 0; i < m; ++i) H(t, i) = h[i];
    }
    return H;
}

Tensor rnn_output(const RNNParams& params, const Tensor& H) {
    params.validate();
    const Index m = params.W_h.shape()[0];
    if (H.order() != 2 || H.shape()[1] != m) {
        throw ShapeError("rnn_output: hidden states " + H.shape().str() + " need " +
                         std::to_string(m) + " columns");
    }
    Tensor Y = contract(H, params.W_y, 2, 2);  // (tau, P)
    if (params.b_y) {
        const Index tau = Y.shape()[0];
        for (Index p = 0; p < Y.shape()[1]; ++p)
            for (Index t = 0; t < tau; ++t) Y(t, p) += (*params.b_y)[p];
    }
    return apply_activation(Y, params.output_activation);
}

Tensor build_block_R(const Tensor& W_h, Index tau) {
    require_square(W_h, "build_block_R");
    if (tau < 1) throw std::invalid_argument("build_block_R needs tau >= 1");
    const Index m = W_h.shape()[0];
    Tensor R(Shape{tau * m, tau * m});
    Tensor power = Tensor::identity(m);
    // Block (t, s) = W_h^(t-s): fill every diagonal band with the same power.
    for (Index lag = 0; lag < tau; ++lag) {
        for (Index s = 0; s + lag < tau; ++s) {
            const Index t = s + lag;
            for (Index j = 0; j < m; ++j)
                for (Index i = 0; i < m; ++i) R(i + m * t, j + m * s) = power(i, j);
        }
        power = matmul(power, W_h);
    }
    return R;
}

Tensor tensorize_block_matrix(const Tensor& block, Index tau, Index hidden) {
    require_matrix(block, tau * hidden, tau * hidden, "tensorize_block_matrix");
    // Row index m + M*t splits Little-Endian into modes (M, tau).
    return permute(reshape(block, Shape{hidden, tau, hidden, tau}), {2, 1, 4, 3});
}

Tensor coupling_tensor(const Tensor& time_adjacency, const Tensor& W_r) {
    require_square(time_adjacency, "coupling_tensor time adjacency");
    require_square(W_r, "coupling_tensor W_r");
    const Index tau = time_adjacency.shape()[0];
    const Index m = W_r.shape()[0];
    const Tensor block = add(Tensor::identity(tau * m), kronecker(time_adjacency, W_r));
    return tensorize_block_matrix(block, tau, m);
}

RecurrentCoupling build_coupling(const TimeGraph& tg, const Tensor& W_r) {
    require_square(W_r, "build_coupling W_r");
    RecurrentCoupling coupling{tg, W_r, std::nullopt};
    if (tg.tau * W_r.shape()[0] <= RecurrentCoupling::kMaterializeLimit) {
        coupling.materialized = coupling_tensor(tg.adjacency, W_r);
    }
    return coupling;
}

Tensor apply_coupling(const RecurrentCoupling& coupling, const Tensor& X_hat) {
    const Index tau = coupling.time_graph.tau;
    const Index m = coupling.hidden();
    require_matrix(X_hat, tau, m, "apply_coupling projected input");
    if (coupling.materialized) {
        return contract_multi(*coupling.materialized, X_hat, {3, 4}, {1, 2});
    }
    // Blockwise: h_t = x_hat_t + W_r sum_{s<t} A(t,s) x_hat_s.
    const Tensor propagated = contract(X_hat, coupling.W_r, 2, 2);  // rows W_r x_hat_s
    return add(X_hat, matmul(coupling.time_graph.adjacency, propagated));
}

Tensor project_inputs(const Tensor& X, const Tensor& W_x) {
    if (X.order() != 2 || W_x.order() != 2 || X.shape()[1] != W_x.shape()[1]) {
        throw ShapeError("input projection: X " + X.shape().str() + " and W_x " +
                         W_x.shape().str() + " disagree on the feature mode");
    }
    return contract(X, W_x, 2, 2);
}

Tensor grgtn_filter(const RecurrentCoupling& coupling, const Tensor& X, const Tensor& W_x) {
    if (X.order() != 2 || X.shape()[0] != coupling.time_graph.tau) {
        throw ShapeError("grgtn_filter: input " + X.shape().str() + " does not span tau = " +
                         std::to_string(coupling.time_graph.tau) + " steps");
    }
    if (W_x.order() != 2 || W_x.shape()[0] != coupling.hidden()) {
        throw ShapeError("grgtn_filter: W_x " + W_x.shape().str() + " does not produce " +
                         std::to_string(coupling.hidden()) + " hidden units");
    }
    return apply_coupling(coupling, project_inputs(X, W_x));
}

Tensor srgtn_filter(const TimeGraph& tg, const Tensor& X, const Tensor& W_x) {
    if (X.order() != 2 || X.shape()[0] != tg.tau) {
        throw ShapeError("srgtn_filter: input " + X.shape().str() + " does not span tau = " +
                         std::to_string(tg.tau) + " steps");
    }
    const Tensor shift = add(Tensor::identity(tg.tau), tg.adjacency);
    return contract(shift, project_inputs(X, W_x), 2, 1);
}

double idempotency_residual(const Tensor& W) {
    require_square(W, "idempotency_residual");
    return frobenius_norm(subtract(matmul(W, W), W));
}

Tensor layer_forward(const RGTNLayerSpec& spec, const RGTNLayerParams& params, const Tensor& X) {
    require_matrix(params.W_x, spec.hidden, spec.inputs, "layer W_x");
    require_matrix(X, spec.tau, spec.inputs, "layer input");
    const TimeGraph tg = build_time_adjacency(spec.tau, spec.c);
    Tensor H;
    if (spec.variant == FilterVariant::general) {
        if (!params.W_r) throw std::invalid_argument("general RGTN layer needs W_r");
        require_matrix(*params.W_r, spec.hidden, spec.hidden, "layer W_r");
        H = grgtn_filter(build_coupling(tg, *params.W_r), X, params.W_x);
    } else {
        if (params.W_r) throw std::invalid_argument("simplified RGTN layer takes no W_r");
        H = srgtn_filter(tg, X, params.W_x);
    }
    return apply_activation(H, spec.activation);
}

}  // namespace rgtn
