#pragma once

#include <vector>

#include "rgtn/tensor.hpp"

namespace rgtn {

/// Weighted graph given by its N x N adjacency; a(n,m) > 0 iff the edge
/// (v_n, v_m) exists.
struct Graph {
    Tensor adjacency;

    Index vertex_count() const { return adjacency.shape()[0]; }
};

/// Throws if `adjacency` is not square or has negative entries.
Graph make_graph(Tensor adjacency);

/// Directed graph over tau successive time steps. A p-step forward influence
/// carries weight c^p.
///
/// `adjacency` is stored for time-ascending sequences (row t is step t), so
/// it is strictly lower triangular: adjacency(t, s) = c^(t-s) for t > s.
/// descending() returns the same graph for time-descending stacking, which
/// is strictly upper triangular.
struct TimeGraph {
    Index tau = 1;
    double c = 0.5;
    Tensor adjacency;

    Tensor descending() const;
};

TimeGraph build_time_adjacency(Index tau, double c);

/// D^{-1/2} A D^{-1/2} with d(n,n) = sum_m a(n,m). Zero-degree vertices get
/// d^{-1/2} = 0, so their rows and columns are zero.
Tensor normalize_adjacency(const Graph& g);

/// Y = sum_k alpha_k A^k X.
struct GraphFilterSpec {
    std::vector<double> coefficients;

    Index order() const { return coefficients.size(); }
};

Tensor spatial_graph_filter(const Tensor& adjacency, const Tensor& signals,
                            const GraphFilterSpec& spec);

}  // namespace rgtn
