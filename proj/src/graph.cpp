#include "rgtn/graph.hpp"

#include <cmath>

namespace rgtn {

Graph make_graph(Tensor adjacency) {
    if (adjacency.order() != 2 || adjacency.shape()[0] != adjacency.shape()[1]) {
        throw ShapeError("adjacency must be a square matrix, got " + adjacency.shape().str());
    }
    for (double v : adjacency.data()) {
        if (!(v >= 0.0)) throw std::invalid_argument("adjacency entries must be nonnegative");
    }
    return Graph{std::move(adjacency)};
}

Tensor TimeGraph::descending() const {
    // Reversing time maps (t, s) -> (tau-1-t, tau-1-s); for this Toeplitz
    // matrix that is the transpose.
    return transpose(adjacency);
}

TimeGraph build_time_adjacency(Index tau, double c) {
    if (tau < 1) throw std::invalid_argument("time graph needs tau >= 1");
    if (!(c > 0.0 && c < 1.0)) {
        throw std::invalid_argument("time graph scaling constant must lie in (0, 1), got " +
                                    std::to_string(c));
    }
    Tensor a(Shape{tau, tau});
    for (Index t = 0; t < tau; ++t) {
        double w = 1.0;
        for (Index s = t; s-- > 0;) {
            w *= c;
            a(t, s) = w;
        }
    }
    return TimeGraph{tau, c, std::move(a)};
}

Tensor normalize_adjacency(const Graph& g) {
    const Index n = g.vertex_count();
    const Tensor& a = g.adjacency;
    for (double v : a.data()) {
        if (!(v >= 0.0)) throw std::invalid_argument("adjacency entries must be nonnegative");
    }
    std::vector<double> inv_sqrt(n, 0.0);
    for (Index i = 0; i < n; ++i) {
        double degree = 0.0;
        for (Index j = 0; j < n; ++j) degree += a(i, j);
        inv_sqrt[i] = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
    }
    Tensor out(a.shape());
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) out(i, j) = inv_sqrt[i] * a(i, j) * inv_sqrt[j];
    return out;
}

Tensor spatial_graph_filter(const Tensor& adjacency, const Tensor& signals,
                            const GraphFilterSpec& spec) {
    if (spec.order() < 1) throw std::invalid_argument("graph filter needs K >= 1 coefficients");
    if (adjacency.order() != 2 || adjacency.shape()[0] != adjacency.shape()[1]) {
        throw ShapeError("graph filter: adjacency must be square, got " + adjacency.shape().str());
    }
    if (signals.order() != 2 || signals.shape()[0] != adjacency.shape()[0]) {
        throw ShapeError("graph filter: signals " + signals.shape().str() +
                         " do not match adjacency " + adjacency.shape().str());
    }
    Tensor shifted = signals;
    Tensor out = scale(signals, spec.coefficients[0]);
    for (Index k = 1; k < spec.order(); ++k) {
        shifted = matmul(adjacency, shifted);
        out = add(out, scale(shifted, spec.coefficients[k]));
    }
    return out;
}

}  // namespace rgtn
